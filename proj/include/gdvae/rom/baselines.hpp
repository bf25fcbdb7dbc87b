#pragma once

// Linear and analytic reduction baselines. Snapshot matrices hold one state per column.

#include "gdvae/pde/burgers.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace gdvae::rom {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class RomKind { pod, dmd };

const char* to_string(RomKind k);

struct LinearROM {
  RomKind kind = RomKind::pod;
  Vec mean;                   // zero when centering is off
  Mat basis;                  // n x r, orthonormal columns
  Mat reduced;                // r x r one-step operator in basis coordinates
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd modes;     // n x r exact-DMD modes (DMD only)
  Vec singular_values;        // all singular values of the centered snapshot matrix
  bool centered = true;

  std::size_t rank() const { return static_cast<std::size_t>(basis.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(basis.rows()); }

  Vec encode(const Vec& x) const;
  Vec decode(const Vec& a) const;
  Vec reconstruct(const Vec& x) const { return decode(encode(x)); }

  /// States at steps 0..steps. POD iterates the reduced operator from encode(x0);
  /// DMD fits mode amplitudes to x0 and evolves them by the eigenvalues.
  std::vector<Vec> predict(const Vec& x0, std::size_t steps) const;

  void save(const std::filesystem::path& path) const;
  static LinearROM load(const std::filesystem::path& path);
};

/// Basis only (reduced operator left empty).
LinearROM pod(const Mat& snapshots, std::size_t r, bool center = true);
/// Basis from `inputs`, reduced operator fit by least squares on the pairs (inputs, targets).
LinearROM pod(const Mat& inputs, const Mat& targets, std::size_t r, bool center = true);

/// Exact DMD on the pairs (inputs, targets).
LinearROM dmd(const Mat& inputs, const Mat& targets, std::size_t r, bool center = true);

/// Sum over columns of squared reconstruction error.
double reconstruction_error(const LinearROM& rom, const Mat& snapshots);

/// Cole-Hopf reduced model keeping the modes |k| <= n_f / 2 of phi.
pde::Field1D cole_hopf_rom(const pde::Field1D& u0, double nu, double t, std::size_t n_f, std::size_t modes = 256);

struct PcaEmbedding {
  Mat coords;  // d x M
  Mat basis;   // n x d
  Vec mean;
  Vec singular_values;
  double variance_captured = 0.0;
};

PcaEmbedding pca_embed(const Mat& snapshots, std::size_t d = 3);

}  // namespace gdvae::rom
