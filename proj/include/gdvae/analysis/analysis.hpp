#pragma once

// Error tables, latent variance statistics, the wrap-continuity diagnostic and code export.

#include "gdvae/model/gdvae.hpp"
#include "gdvae/pde/datasets.hpp"
#include "gdvae/rom/baselines.hpp"

#include <json.hpp>

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gdvae::analysis {

using RowMatrix = model::RowMatrix;

/// ||pred - truth||_1 / ||truth||_1. ShapeError on size mismatch, ConfigError on zero-norm truth.
double l1_relative_error(std::span<const double> pred, std::span<const double> truth);
double l1_relative_error(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

/// Maps a batch of initial states (one per row) to predictions at 0..steps latent steps;
/// element k of the result holds the states at horizon k.
using Predictor = std::function<std::vector<RowMatrix>(const RowMatrix& x0, std::size_t steps)>;

Predictor model_predictor(const model::GDVAEModel& model, bool reencode = false);
Predictor rom_predictor(const rom::LinearROM& rom);
/// Truncated Cole-Hopf solution evaluated at k * tau from each initial state. States whose
/// truncated phi vanishes at an output point come back as NaN rows.
Predictor cole_hopf_predictor(double nu, double tau, std::size_t n_f, std::size_t modes = 256);
/// Returns the reference trajectory itself; used for pass-through checks.
Predictor oracle_predictor(const pde::TrajectorySet& test);

/// Per-horizon mean over test items of the per-item L1-relative error.
/// Horizon k compares against test.states[i].row(k); steps < test.times.size().
std::vector<double> horizon_errors(const Predictor& predict, const pde::TrajectorySet& test, std::size_t steps);

struct EvalRow {
  std::string method;
  std::size_t dim = 0;
  std::vector<double> mean;
  std::vector<double> se;  // standard error over trials, 0 with a single trial
  std::size_t trials = 0;
};

struct EvalTable {
  std::vector<double> horizons;  // seconds
  std::vector<EvalRow> rows;

  /// `method,dim,h0,h0_se,h1,h1_se,...`
  void write_csv(std::ostream& os) const;
  /// Horizon seconds, trial counts and the column naming.
  nlohmann::json sidecar() const;
};

/// Mean and standard error of per-trial error vectors. MissingArtifactError on an empty trial list.
EvalRow summarize(const std::string& method, std::size_t dim, const std::vector<std::vector<double>>& per_trial);

EvalRow multistep_eval(const std::string& method, std::size_t dim, const std::vector<Predictor>& trials,
                       const pde::TrajectorySet& test, std::size_t steps);

struct VarianceStats {
  Eigen::VectorXd q_mov;  // batch mean of the encoder variance, per dimension
  Eigen::VectorXd q_vom;  // batch variance of the encoder mean, per dimension
  std::size_t batch = 0;
};

/// From per-datum encoder means and log-variances (rows = data). ConfigError when N_b < 2.
VarianceStats variance_stats(const RowMatrix& mean, const RowMatrix& logvar);
/// Encodes `batch` with the model's pre-projection Gaussian head.
VarianceStats variance_stats(const model::GDVAEModel& model, const RowMatrix& batch);

/// Dimensions whose q_vom / q_mov exceeds threshold x (median ratio), largest ratio first.
/// Returns an empty list when every ratio is equal.
std::vector<std::size_t> select_informative_dims(const VarianceStats& stats, double threshold);

/// Max over cyclically adjacent codes of their distance, divided by the median adjacent distance.
/// Rows of `codes` follow the ordered periodic parameter grid. ConfigError for fewer than 3 rows.
double continuity_score(const RowMatrix& codes);
double continuity_score(const model::GDVAEModel& model, const RowMatrix& grid_states);

/// CSV rows `alpha[,alpha2],t,z1..zN` with mean-path codes of `set.inputs`.
void export_latent_codes(std::ostream& os, const model::GDVAEModel& model, const pde::SnapshotPairSet& set);

}  // namespace gdvae::analysis
