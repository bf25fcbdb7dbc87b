#pragma once

#include "gdvae/pde/brusselator.hpp"
#include "gdvae/pde/burgers.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gdvae::pde {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Training pairs (X_i, x_i), one sample per row, with generation metadata.
struct SnapshotPairSet {
  std::string family;
  std::vector<std::size_t> sample_shape;
  RowMatrix inputs;
  RowMatrix targets;
  RowMatrix params;       // initial-condition parameters per pair
  Eigen::VectorXd times;  // t_i of the input snapshot
  double tau = 0.0;
  std::vector<std::uint64_t> noise_seeds;
  nlohmann::json generator;  // everything needed to regenerate the set

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(inputs.cols()); }
};

/// Reference solutions at times t_0 + k tau for a list of initial conditions.
struct TrajectorySet {
  std::string family;
  std::vector<std::size_t> sample_shape;
  RowMatrix params;            // one row per trajectory
  std::vector<double> times;   // shared time grid
  std::vector<RowMatrix> states;  // states[i] is (times x dim)
  nlohmann::json generator;

  std::size_t size() const { return states.size(); }
};

struct BurgersDatasetSpec {
  IcFamily family = IcFamily::u1;
  std::size_t samples = 10000;
  double tau = 0.25;
  double t_min = 0.0;
  double t_max = 0.75;  // latest input time; targets reach t_max + tau
  double noise = 0.0;
  bool noise_targets = true;
  double nu = 0.02;
  std::size_t n = 100;
  std::size_t modes = 256;
  std::uint64_t seed = 0;
};

SnapshotPairSet make_burgers_dataset(const BurgersDatasetSpec& spec);

/// Uniform parameter grid with `count` members (a g x g grid, g = round(sqrt(count)), for the doubly-periodic family).
RowMatrix uniform_param_grid(IcFamily family, std::size_t count);

TrajectorySet make_burgers_trajectories(IcFamily family, const RowMatrix& params, const std::vector<double>& times,
                                        double nu, std::size_t n, std::size_t modes = 256);

struct BrusselatorDatasetSpec {
  BrusselatorParams params;
  std::vector<double> alphas;
  std::size_t nx = 64;
  std::size_t ny = 64;
  double t_start = 15.0;  // transient discarded before this time
  double t_end = 40.0;    // last target time
  double stride = 0.5;    // spacing of input snapshots
  double tau = 2.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

/// Trajectories recorded at `stride` from t_start to t_end, one per alpha, solved on up to
/// `threads` worker threads. The result does not depend on the thread count.
TrajectorySet make_brusselator_trajectories(const BrusselatorDatasetSpec& spec, std::size_t threads = 1);
/// Pairs (state(t), state(t + tau)) cut from trajectories recorded at `stride`.
SnapshotPairSet pairs_from_trajectories(const TrajectorySet& traj, double tau, double noise, std::uint64_t seed);

/// Two-link arm x = (x1, x2) in R^4, angles uniform on [0, 2pi).
RowMatrix make_arm_dataset(std::size_t n, double l1, double l2, std::uint64_t seed);
/// Klein bottle samples in R^4, (u1, u2) uniform on [0, 2pi)^2, plus optional ambient noise.
RowMatrix make_klein_dataset(std::size_t n, double a, double b, double noise, std::uint64_t seed);

/// Manifest JSON (`<stem>.json`) plus little-endian float64 payload (`<stem>.bin`).
void save_dataset(const std::filesystem::path& stem, const SnapshotPairSet& set);
SnapshotPairSet load_dataset(const std::filesystem::path& stem);
void save_trajectories(const std::filesystem::path& stem, const TrajectorySet& set);
TrajectorySet load_trajectories(const std::filesystem::path& stem);

/// One CSV row per grid value: index, input, target.
void write_snapshot_csv(std::ostream& os, const SnapshotPairSet& set, std::size_t sample);

}  // namespace gdvae::pde
