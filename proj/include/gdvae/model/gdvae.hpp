#pragma once

// Gaussian encoder/decoder model with a prescribed latent evolution map and an
// optional manifold latent space.

#include "gdvae/manifold/atlas.hpp"
#include "gdvae/model/network.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace gdvae::model {

using RowMatrix = diff::RowMatrix;

enum class EncoderVariance { none, fixed, learned };

/// Encoder maps a flat [input_dim] sample to [embed_dim]; decoder maps [embed_dim] to [output_dim].
/// The last encoder layer is the mean head; a learned variance adds a parallel dense head on
/// the features feeding it.
struct ArchitectureSpec {
  std::string name = "custom";
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::size_t embed_dim = 0;
  std::vector<LayerSpec> encoder;
  std::vector<LayerSpec> decoder;
  EncoderVariance variance = EncoderVariance::fixed;
  double sigma_e = 4e-3;  // fixed value, or starting value when learned

  nlohmann::json to_json() const;
  static ArchitectureSpec from_json(const nlohmann::json& j);
};

/// Named architectures:
///   burgers-mlp       (in)-400-400-(N) / (N)-400-400-(out), ReLU
///   periodic-mlp      as burgers-mlp with no bias on the final layers
///   linear-2d         single affine encoder and decoder
///   arm-mlp           (in)-100-500-100-(out), leaky ReLU s = 1e-6
///   brusselator-cnn   four conv layers to 100 channels at 1x1, dense to N; mirrored decoder (64x64 fields)
///   brusselator-cnn-32  the same layout with stride/kernel choices that close up on 32x32 fields
/// ConfigError for an unknown name or inconsistent dims.
ArchitectureSpec build_architecture(const std::string& preset, std::size_t input_dim, std::size_t embed_dim);

struct LatentMapSpec {
  enum class Kind { identity, decay, translate, rotate, linear };
  Kind kind = Kind::identity;
  double rho = 1.0;        // decay factor exp(-lambda0 tau)
  double dt = 0.0;         // translate / rotate time step
  std::size_t axis = 0;    // translate axis (0-based)
  double omega = 0.0;      // rotation rate
  std::size_t plane_a = 0;
  std::size_t plane_b = 1;

  static LatentMapSpec identity() { return {}; }
  static LatentMapSpec decay(double rho);
  static LatentMapSpec translate(double dt, std::size_t axis);
  static LatentMapSpec rotate(double omega, double dt, std::size_t a = 0, std::size_t b = 1);
  static LatentMapSpec linear() {
    LatentMapSpec s;
    s.kind = Kind::linear;
    return s;
  }

  /// z' = M z + c for the fixed variants (ConfigError on invalid parameters for `dim`).
  void affine(std::size_t dim, RowMatrix& m, Eigen::VectorXd& c) const;
  void validate(std::size_t dim) const;

  nlohmann::json to_json() const;
  static LatentMapSpec from_json(const nlohmann::json& j);
};

struct ModelSpec {
  ArchitectureSpec architecture;
  LatentMapSpec latent_map;
  std::optional<manifold::ManifoldAtlas> manifold;

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

/// Tape handles produced by GDVAEModel::encode.
struct Encoding {
  diff::Var mean;    // w = a(X), before projection
  diff::Var logvar;  // log sigma_e^2 per coordinate (invalid tape handle when the variance is none)
  diff::Var sample;  // w + sigma_e xi, or w on the mean path
  diff::Var z;       // Lambda(sample) with a manifold, sample otherwise
  bool has_logvar = false;
};

/// Plain-matrix encoder outputs for analysis.
struct EncoderOutputs {
  RowMatrix mean;    // [B, N] pre-projection means
  RowMatrix logvar;  // [B, N]; empty when the variance is none
  RowMatrix z;       // [B, N] mean-path codes
};

class GDVAEModel {
 public:
  GDVAEModel(ModelSpec spec, std::uint64_t init_seed);

  const ModelSpec& spec() const { return spec_; }
  std::size_t input_dim() const { return spec_.architecture.input_dim; }
  std::size_t output_dim() const { return spec_.architecture.output_dim; }
  std::size_t embed_dim() const { return spec_.architecture.embed_dim; }
  bool has_manifold() const { return spec_.manifold.has_value(); }

  /// `noise` == nullptr selects the mean path (no sampling).
  Encoding encode(diff::Tape& tape, diff::Var x, std::mt19937_64* noise, bool trainable) const;
  /// One application of the latent map, re-projected when a manifold is attached.
  diff::Var latent_step(diff::Tape& tape, diff::Var z, bool trainable) const;
  diff::Var decode(diff::Tape& tape, diff::Var z, bool trainable) const;

  EncoderOutputs encoder_outputs(const RowMatrix& x) const;
  RowMatrix encode_codes(const RowMatrix& x) const { return encoder_outputs(x).z; }
  RowMatrix step_codes(const RowMatrix& z) const;
  RowMatrix decode_codes(const RowMatrix& z) const;

  /// Declaration order: encoder, variance head, decoder, latent map.
  std::vector<diff::Parameter*> parameters();
  std::vector<const diff::Parameter*> parameters() const;
  std::size_t parameter_count() const;

 private:
  ModelSpec spec_;
  std::optional<Network> trunk_;  // encoder layers before the mean head
  Network mean_head_;
  std::optional<Network> variance_head_;
  Network decoder_;
  std::optional<diff::Parameter> latent_matrix_;
  RowMatrix map_m_;
  Eigen::VectorXd map_c_;
};

/// KL( N(mu, diag sigma2) || N(0, sigma0^2 I) ), summed over coordinates.
double kl_diag_gaussian(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma2, double sigma0_sq);

enum class KlMode { pre_projection, axis_only };

struct TrainingConfig {
  double beta = 1.0;
  double gamma = 0.5;
  double sigma0 = 1.0;
  double decoder_sigma = 4e-3;  // decoder NLL = |x - b(z)|^2 / (2 sigma_d^2)
  KlMode kl_mode = KlMode::pre_projection;
  double learning_rate = 1e-3;
  double lr_decay = 1.0;  // learning rate multiplier per epoch
  std::size_t batch_size = 100;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainingConfig from_json(const nlohmann::json& j);
};

/// Batch-mean loss terms as minimized: total = re + kl + rr, kl and rr already weighted by beta and gamma.
struct LossBreakdown {
  double re = 0.0;
  double kl = 0.0;
  double rr = 0.0;
  double total = 0.0;
  double re_sse = 0.0;  // unweighted squared errors behind re and rr
  double rr_sse = 0.0;
};

struct LossGraph {
  diff::Var total;
  LossBreakdown values;
  Encoding input_encoding;
  diff::Var stepped;  // latent codes after one map application
};

/// Loss on the batch of pairs (x, y) = (X_i, x_i). One reparameterized draw per datum when `noise` is set.
LossGraph elbo_loss(diff::Tape& tape, const GDVAEModel& model, diff::Var x, diff::Var y, const TrainingConfig& cfg,
                    std::mt19937_64* noise, bool trainable);

/// [x_0, ..., x_n] for each row of x0: x_0 is the reconstruction, x_k follows k latent steps.
/// With `reencode`, each step decodes and re-encodes instead of composing in latent space.
std::vector<RowMatrix> predict_multistep(const GDVAEModel& model, const RowMatrix& x0, std::size_t n,
                                         bool reencode = false);

}  // namespace gdvae::model
