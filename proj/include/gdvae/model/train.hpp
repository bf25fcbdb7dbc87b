#pragma once

#include "gdvae/model/gdvae.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <vector>

namespace gdvae::model {

/// Epoch averages of the loss terms (weighted by batch size).
struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double re = 0.0;
  double kl = 0.0;
  double rr = 0.0;
  double total = 0.0;
  double max_constraint_residual = 0.0;  // over every code emitted this epoch; 0 without a manifold
};

/// Everything beyond the parameters needed to continue a run bit-exactly.
struct TrainState {
  std::size_t epoch = 0;  // completed epochs
  std::mt19937_64 rng;

  static TrainState initial(const TrainingConfig& cfg);
};

using EpochCallback = std::function<void(const EpochRecord&, const GDVAEModel&, const TrainState&)>;

/// Minibatch Adam on elbo_loss until state.epoch == cfg.epochs. Rows of `inputs`/`targets` are pairs.
/// Throws TrainingError naming the loss term (or "gradient") that went non-finite.
std::vector<EpochRecord> train(GDVAEModel& model, const RowMatrix& inputs, const RowMatrix& targets,
                               const TrainingConfig& cfg, TrainState& state, const EpochCallback& on_epoch = {});

/// Fresh model initialised from the derived seed of cfg.seed.
GDVAEModel make_model(const ModelSpec& spec, const TrainingConfig& cfg);

/// CSV `epoch,L_RE,L_KL,L_RR,total`.
void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history);

struct Checkpoint {
  ModelSpec spec;
  TrainingConfig config;
  TrainState state;
  std::vector<diff::Parameter> parameters;  // declaration order, with optimizer moments

  GDVAEModel restore() const;
};

/// Binary container: magic GDVAE1, version, spec/config JSON, parameter tensors in
/// declaration order, then optimizer moments and the trainer state.
void save_checkpoint(const std::filesystem::path& path, const GDVAEModel& model, const TrainingConfig& cfg,
                     const TrainState& state);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gdvae::model
