#pragma once

// The four harness stages. Each reads and writes below one output directory:
//   data/train.{json,bin}  data/test.{json,bin}
//   trials/<k>/model.ckpt  trials/<k>/history.csv
//   eval/table.csv  eval/table.json
//   analysis/variance_<k>.csv  analysis/continuity.csv  analysis/latent_<k>.csv
//   manifest.json

#include "gdvae/analysis/analysis.hpp"
#include "gdvae/run/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace gdvae::run {

inline constexpr const char* kToolVersion = "1.0.0";

struct RunOptions {
  std::filesystem::path out;
  std::size_t threads = 1;                 // data generation and independent trials
  std::optional<std::size_t> epochs;       // overrides training.epochs
  bool resume = false;                     // continue from existing trial checkpoints
  std::ostream* log = nullptr;
};

/// Lower-case hex SHA-256 of a file's bytes. MissingArtifactError if unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// Records `stage` in out/manifest.json: resolved config, tool version, per-trial seeds and
/// wall-clock. Called once before a stage writes results and again with the artifact hashes.
void write_manifest(const RunConfig& cfg, const RunOptions& opts, const std::string& stage,
                    const std::vector<std::filesystem::path>& artifacts, double seconds, bool complete);
/// Re-hashes every artifact listed in the manifest; returns the relative paths that differ or vanished.
std::vector<std::string> verify_manifest(const std::filesystem::path& out);

void cmd_generate(const RunConfig& cfg, const RunOptions& opts);
void cmd_train(const RunConfig& cfg, const RunOptions& opts);
analysis::EvalTable cmd_eval(const RunConfig& cfg, const RunOptions& opts);
void cmd_analyze(const RunConfig& cfg, const RunOptions& opts);

/// Reference trajectories used by eval (and continuity for periodic families).
pde::TrajectorySet make_test_set(const RunConfig& cfg, std::size_t threads = 1);
/// Horizon seconds of the test trajectories, relative to their first time.
std::vector<double> horizon_seconds(const RunConfig& cfg);

std::filesystem::path trial_dir(const std::filesystem::path& out, std::size_t trial);

}  // namespace gdvae::run
