#pragma once

// Declarative experiment description: one JSON document per run.

#include "gdvae/model/gdvae.hpp"
#include "gdvae/pde/datasets.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gdvae::run {

enum class DatasetKind { burgers, brusselator, arm, klein };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::burgers;
  pde::BurgersDatasetSpec burgers;
  pde::BrusselatorDatasetSpec brusselator;
  std::size_t points = 0;  // arm / klein sample count
  double length1 = 1.0, length2 = 1.0;
  double klein_a = 2.0, klein_b = 1.0, klein_noise = 0.0;

  std::size_t dim() const;
};

/// Held-out reference trajectories for multi-step evaluation.
struct TestConfig {
  std::size_t count = 100;     // uniform parameter grid size (Burgers)
  std::vector<double> alphas;  // Brusselator test initial conditions
  double t0 = 0.0;             // Burgers start time; Brusselator uses dataset.t_start
  std::size_t steps = 4;
};

struct BaselineConfig {
  std::string kind;  // pod | dmd | cole-hopf
  std::size_t rank = 0;
};

struct AnalysisConfig {
  std::size_t variance_batch = 1000;
  double threshold = 10.0;
  std::size_t continuity_grid = 100;
};

struct RunConfig {
  std::string name;
  std::string method = "GD-VAE";
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  DatasetConfig dataset;
  TestConfig test;
  model::ModelSpec model;
  model::TrainingConfig training;
  std::vector<BaselineConfig> baselines;
  AnalysisConfig analysis;

  /// Training seed of trial `t`.
  std::uint64_t trial_seed(std::size_t t) const;
  nlohmann::json to_json() const;

  /// Field errors are ConfigError with a dotted path ("dataset.alpha_range[1]").
  /// `seed_override` stands in for a missing "seed" field.
  static RunConfig from_json(const nlohmann::json& j, std::optional<std::uint64_t> seed_override = std::nullopt);
  static RunConfig load(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt);
};

const char* to_string(DatasetKind k);

}  // namespace gdvae::run
