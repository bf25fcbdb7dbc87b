#include "gdvae/model/gdvae.hpp"

#include "gdvae/errors.hpp"
#include "gdvae/manifold/projection.hpp"

#include <cmath>
#include <numbers>

namespace gdvae::model {

namespace {

using diff::Activation;
using diff::Tape;
using diff::Tensor;
using diff::Var;

Tensor to_tensor(const RowMatrix& m) {
  Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  std::copy(m.data(), m.data() + m.size(), t.data());
  return t;
}

RowMatrix to_matrix(const Tensor& t) {
  const auto rows = static_cast<Eigen::Index>(t.extent(0));
  return Eigen::Map<const RowMatrix>(t.data(), rows, static_cast<Eigen::Index>(t.size()) / rows);
}

const char* variance_name(EncoderVariance v) {
  switch (v) {
    case EncoderVariance::none: return "none";
    case EncoderVariance::fixed: return "fixed";
    case EncoderVariance::learned: return "learned";
  }
  return "?";
}

EncoderVariance variance_from_string(const std::string& s) {
  if (s == "none") return EncoderVariance::none;
  if (s == "fixed") return EncoderVariance::fixed;
  if (s == "learned") return EncoderVariance::learned;
  throw ConfigError("architecture.variance", "expected none | fixed | learned, got '" + s + "'");
}

std::vector<LayerSpec> mlp(std::initializer_list<std::size_t> hidden, std::size_t out, Activation a, bool last_bias = true) {
  std::vector<LayerSpec> layers;
  for (auto h : hidden) layers.push_back(LayerSpec::dense(h, a));
  layers.push_back(LayerSpec::dense(out, Activation::none(), last_bias));
  return layers;
}

Var add_constant(Var x, double c) {
  RowMatrix one(1, 1);
  one(0, 0) = 1.0;
  Eigen::VectorXd off(1);
  off(0) = c;
  return diff::linear_map(x, one, off);
}

/// Sum over every element of KL(N(mu, e^lv) || N(0, s0^2)).
Var kl_sum(Var mu, Var logvar, double sigma0) {
  const double s0sq = sigma0 * sigma0;
  const Var per = diff::add(diff::scale(logvar, -0.5), diff::scale(diff::add(diff::exp(logvar), diff::square(mu)), 0.5 / s0sq));
  return add_constant(diff::sum(per), static_cast<double>(mu.value().size()) * (std::log(sigma0) - 0.5));
}

std::vector<std::size_t> axis_dims(const ModelSpec& spec) {
  std::vector<std::size_t> dims;
  const std::size_t n = spec.architecture.embed_dim;
  if (!spec.manifold) {
    for (std::size_t i = 0; i < n; ++i) dims.push_back(i);
    return dims;
  }
  const auto tag = spec.manifold->tag();
  if (tag == manifold::AtlasTag::circle || tag == manifold::AtlasTag::product_of_circles ||
      tag == manifold::AtlasTag::cylinder_axis) {
    for (std::size_t i = 2 * spec.manifold->circles(); i < n; ++i) dims.push_back(i);
  }
  return dims;
}

}  // namespace

// ---------------------------------------------------------------- architecture

nlohmann::json ArchitectureSpec::to_json() const {
  nlohmann::json enc = nlohmann::json::array(), dec = nlohmann::json::array();
  for (const auto& l : encoder) enc.push_back(l.to_json());
  for (const auto& l : decoder) dec.push_back(l.to_json());
  return {{"name", name},           {"input_dim", input_dim}, {"output_dim", output_dim},
          {"embed_dim", embed_dim}, {"encoder", enc},         {"decoder", dec},
          {"variance", variance_name(variance)}, {"sigma_e", sigma_e}};
}

ArchitectureSpec ArchitectureSpec::from_json(const nlohmann::json& j) {
  try {
    ArchitectureSpec a;
    if (!j.contains("encoder")) {
      a = build_architecture(j.at("name").get<std::string>(), j.at("input_dim").get<std::size_t>(),
                             j.at("embed_dim").get<std::size_t>());
    } else {
      a.name = j.value("name", std::string("custom"));
      a.input_dim = j.at("input_dim").get<std::size_t>();
      a.embed_dim = j.at("embed_dim").get<std::size_t>();
      a.output_dim = j.value("output_dim", a.input_dim);
      for (const auto& l : j.at("encoder")) a.encoder.push_back(LayerSpec::from_json(l));
      for (const auto& l : j.at("decoder")) a.decoder.push_back(LayerSpec::from_json(l));
    }
    if (j.contains("variance")) a.variance = variance_from_string(j.at("variance").get<std::string>());
    a.sigma_e = j.value("sigma_e", a.sigma_e);
    if (a.variance != EncoderVariance::none && !(a.sigma_e > 0.0))
      throw ConfigError("architecture.sigma_e", "encoder standard deviation must be positive");
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("architecture", e.what());
  }
}

ArchitectureSpec build_architecture(const std::string& preset, std::size_t input_dim, std::size_t embed_dim) {
  if (input_dim == 0 || embed_dim == 0) throw ConfigError("architecture", "input and latent dims must be positive");
  ArchitectureSpec a;
  a.name = preset;
  a.input_dim = a.output_dim = input_dim;
  a.embed_dim = embed_dim;
  const auto relu = Activation::relu();
  const auto none = Activation::none();
  if (preset == "burgers-mlp") {
    a.encoder = mlp({400, 400}, embed_dim, relu);
    a.decoder = mlp({400, 400}, input_dim, relu);
  } else if (preset == "periodic-mlp") {
    a.encoder = mlp({400, 400}, embed_dim, relu, false);
    a.decoder = mlp({400, 400}, input_dim, relu, false);
  } else if (preset == "linear-2d") {
    a.encoder = mlp({}, embed_dim, none);
    a.decoder = mlp({}, input_dim, none);
  } else if (preset == "arm-mlp") {
    a.encoder = mlp({100, 500, 100}, embed_dim, Activation::leaky(1e-6));
    a.decoder = mlp({100, 500, 100}, input_dim, Activation::leaky(1e-6));
  } else if (preset == "brusselator-cnn" || preset == "brusselator-cnn-32") {
    const bool full = preset == "brusselator-cnn";
    const std::size_t side = full ? 64 : 32;
    if (input_dim != 2 * side * side)
      throw ConfigError("architecture.input_dim", preset + " expects 2x" + std::to_string(side) + "x" +
                                                      std::to_string(side) + " fields");
    a.encoder.push_back(LayerSpec::reshape({2, side, side}));
    if (full) {
      a.encoder.push_back(LayerSpec::conv(10, 3, 3, 1, relu));
      a.encoder.push_back(LayerSpec::conv(20, 3, 3, 1, relu));
      a.encoder.push_back(LayerSpec::conv(40, 2, 2, 1, relu));
      a.encoder.push_back(LayerSpec::conv(100, 5, 1, 0, none));
    } else {
      a.encoder.push_back(LayerSpec::conv(10, 4, 2, 1, relu));
      a.encoder.push_back(LayerSpec::conv(20, 4, 2, 1, relu));
      a.encoder.push_back(LayerSpec::conv(40, 2, 2, 0, relu));
      a.encoder.push_back(LayerSpec::conv(100, 4, 1, 0, none));
    }
    a.encoder.push_back(LayerSpec::reshape({100}));
    a.encoder.push_back(LayerSpec::dense(embed_dim, none));

    a.decoder.push_back(LayerSpec::dense(100, relu));
    a.decoder.push_back(LayerSpec::reshape({100, 1, 1}));
    if (full) {
      a.decoder.push_back(LayerSpec::tconv(40, 5, 1, 0, relu));
      a.decoder.push_back(LayerSpec::tconv(20, 2, 2, 1, relu));
      a.decoder.push_back(LayerSpec::tconv(10, 3, 3, 1, relu));
      a.decoder.push_back(LayerSpec::tconv(2, 3, 3, 1, none));
    } else {
      a.decoder.push_back(LayerSpec::tconv(40, 4, 1, 0, relu));
      a.decoder.push_back(LayerSpec::tconv(20, 2, 2, 0, relu));
      a.decoder.push_back(LayerSpec::tconv(10, 4, 2, 1, relu));
      a.decoder.push_back(LayerSpec::tconv(2, 4, 2, 1, none));
    }
    a.decoder.push_back(LayerSpec::reshape({input_dim}));
  } else {
    throw ConfigError("architecture.name", "unknown architecture '" + preset + "'");
  }
  return a;
}

// ---------------------------------------------------------------- latent map

LatentMapSpec LatentMapSpec::decay(double rho) {
  LatentMapSpec s;
  s.kind = Kind::decay;
  s.rho = rho;
  return s;
}

LatentMapSpec LatentMapSpec::translate(double dt, std::size_t axis) {
  LatentMapSpec s;
  s.kind = Kind::translate;
  s.dt = dt;
  s.axis = axis;
  return s;
}

LatentMapSpec LatentMapSpec::rotate(double omega, double dt, std::size_t a, std::size_t b) {
  LatentMapSpec s;
  s.kind = Kind::rotate;
  s.omega = omega;
  s.dt = dt;
  s.plane_a = a;
  s.plane_b = b;
  return s;
}

void LatentMapSpec::validate(std::size_t dim) const {
  switch (kind) {
    case Kind::decay:
      if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("latent_map.rho", "decay factor must lie in (0, 1]");
      break;
    case Kind::translate:
      if (axis >= dim) throw ConfigError("latent_map.axis", "translation axis outside the latent space");
      break;
    case Kind::rotate:
      if (plane_a >= dim || plane_b >= dim || plane_a == plane_b)
        throw ConfigError("latent_map.plane", "rotation plane must name two distinct latent coordinates");
      break;
    case Kind::identity:
    case Kind::linear: break;
  }
}

void LatentMapSpec::affine(std::size_t dim, RowMatrix& m, Eigen::VectorXd& c) const {
  validate(dim);
  const auto n = static_cast<Eigen::Index>(dim);
  m = RowMatrix::Identity(n, n);
  c = Eigen::VectorXd::Zero(n);
  switch (kind) {
    case Kind::decay: m *= rho; break;
    case Kind::translate: c(static_cast<Eigen::Index>(axis)) = dt; break;
    case Kind::rotate: {
      const double th = omega * dt;
      const auto a = static_cast<Eigen::Index>(plane_a), b = static_cast<Eigen::Index>(plane_b);
      m(a, a) = std::cos(th);
      m(a, b) = -std::sin(th);
      m(b, a) = std::sin(th);
      m(b, b) = std::cos(th);
      break;
    }
    case Kind::identity:
    case Kind::linear: break;
  }
}

nlohmann::json LatentMapSpec::to_json() const {
  switch (kind) {
    case Kind::identity: return {{"kind", "identity"}};
    case Kind::decay: return {{"kind", "decay"}, {"rho", rho}};
    case Kind::translate: return {{"kind", "translate"}, {"dt", dt}, {"axis", axis}};
    case Kind::rotate:
      return {{"kind", "rotate"}, {"omega", omega}, {"dt", dt}, {"plane", {plane_a, plane_b}}};
    case Kind::linear: return {{"kind", "linear"}};
  }
  return {};
}

LatentMapSpec LatentMapSpec::from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "identity") return identity();
    if (kind == "linear") return linear();
    if (kind == "decay") {
      if (j.contains("rho")) return decay(j.at("rho").get<double>());
      return decay(std::exp(-j.at("lambda0").get<double>() * j.at("tau").get<double>()));
    }
    if (kind == "translate") return translate(j.at("dt").get<double>(), j.at("axis").get<std::size_t>());
    if (kind == "rotate") {
      const auto plane = j.value("plane", std::vector<std::size_t>{0, 1});
      if (plane.size() != 2) throw ConfigError("latent_map.plane", "expected two indices");
      return rotate(j.at("omega").get<double>(), j.at("dt").get<double>(), plane[0], plane[1]);
    }
    throw ConfigError("latent_map.kind", "unknown latent map '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("latent_map", e.what());
  }
}

nlohmann::json ModelSpec::to_json() const {
  return {{"architecture", architecture.to_json()},
          {"latent_map", latent_map.to_json()},
          {"manifold", manifold ? manifold->to_json() : nlohmann::json(nullptr)}};
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec s;
  if (!j.contains("architecture")) throw ConfigError("architecture", "missing");
  s.architecture = ArchitectureSpec::from_json(j.at("architecture"));
  if (j.contains("latent_map")) s.latent_map = LatentMapSpec::from_json(j.at("latent_map"));
  if (j.contains("manifold") && !j.at("manifold").is_null()) s.manifold = manifold::ManifoldAtlas::from_json(j.at("manifold"));
  return s;
}

// ---------------------------------------------------------------- model

GDVAEModel::GDVAEModel(ModelSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
  const auto& a = spec_.architecture;
  if (a.encoder.empty() || a.decoder.empty()) throw ConfigError("architecture", "encoder and decoder need layers");
  const LayerSpec& head = a.encoder.back();
  if (head.kind != LayerKind::dense || head.units != a.embed_dim)
    throw ConfigError("architecture.encoder", "last encoder layer must be dense with embed_dim units");
  if (spec_.manifold && spec_.manifold->embed_dim() != a.embed_dim)
    throw ConfigError("manifold", "manifold embedding dimension " + std::to_string(spec_.manifold->embed_dim()) +
                                      " differs from the encoder output " + std::to_string(a.embed_dim));
  if (a.variance != EncoderVariance::none && !(a.sigma_e > 0.0))
    throw ConfigError("architecture.sigma_e", "encoder standard deviation must be positive");

  std::mt19937_64 rng(init_seed);
  Shape features{a.input_dim};
  if (a.encoder.size() > 1) {
    trunk_.emplace(Shape{a.input_dim}, std::vector<LayerSpec>(a.encoder.begin(), a.encoder.end() - 1), rng, "encoder");
    features = trunk_->output_shape();
  }
  mean_head_ = Network(features, {head}, rng, "encoder.mean");
  if (a.variance == EncoderVariance::learned) {
    variance_head_.emplace(features, std::vector<LayerSpec>{LayerSpec::dense(a.embed_dim, Activation::none())}, rng,
                           "encoder.logvar");
    auto& ps = variance_head_->parameters();
    ps[0].value.fill(0.0);
    ps[1].value.fill(2.0 * std::log(a.sigma_e));
  }
  decoder_ = Network(Shape{a.embed_dim}, a.decoder, rng, "decoder");
  if (decoder_.output_shape() != Shape{a.output_dim})
    throw ConfigError("architecture.decoder", "decoder output " + diff::to_string(decoder_.output_shape()) +
                                                  " differs from [" + std::to_string(a.output_dim) + "]");
  spec_.latent_map.validate(a.embed_dim);
  if (spec_.latent_map.kind == LatentMapSpec::Kind::linear) {
    const auto n = a.embed_dim;
    Tensor eye({n, n});
    for (std::size_t i = 0; i < n; ++i) eye[i * n + i] = 1.0;
    latent_matrix_.emplace("latent.A", std::move(eye));
  } else {
    spec_.latent_map.affine(a.embed_dim, map_m_, map_c_);
  }
}

Encoding GDVAEModel::encode(Tape& tape, Var x, std::mt19937_64* noise, bool trainable) const {
  const auto& a = spec_.architecture;
  const Var h = trunk_ ? trunk_->forward(tape, x, trainable) : x;
  Encoding e;
  e.mean = mean_head_.forward(tape, h, trainable);
  const std::size_t batch = e.mean.shape()[0], n = a.embed_dim;
  Tensor xi;
  if (noise && a.variance != EncoderVariance::none) {
    xi = Tensor({batch, n});
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : xi.values()) v = normal(*noise);
  }
  switch (a.variance) {
    case EncoderVariance::none: e.sample = e.mean; break;
    case EncoderVariance::fixed:
      e.has_logvar = true;
      e.logvar = tape.constant(Tensor({batch, n}, 2.0 * std::log(a.sigma_e)));
      if (noise) {
        for (auto& v : xi.values()) v *= a.sigma_e;
        e.sample = diff::add(e.mean, tape.constant(std::move(xi)));
      } else {
        e.sample = e.mean;
      }
      break;
    case EncoderVariance::learned:
      e.has_logvar = true;
      e.logvar = variance_head_->forward(tape, h, trainable);
      e.sample = noise ? diff::add(e.mean, diff::mul(diff::exp(diff::scale(e.logvar, 0.5)), tape.constant(std::move(xi))))
                       : e.mean;
      break;
  }
  e.z = spec_.manifold ? manifold::project_rows(e.sample, *spec_.manifold) : e.sample;
  return e;
}

Var GDVAEModel::latent_step(Tape& tape, Var z, bool trainable) const {
  Var out;
  switch (spec_.latent_map.kind) {
    case LatentMapSpec::Kind::identity: return z;
    case LatentMapSpec::Kind::linear: {
      auto& p = const_cast<diff::Parameter&>(*latent_matrix_);
      out = diff::affine(z, trainable ? tape.parameter(p) : tape.constant(p.value));
      break;
    }
    default: out = diff::linear_map(z, map_m_, map_c_); break;
  }
  return spec_.manifold ? manifold::project_rows(out, *spec_.manifold) : out;
}

Var GDVAEModel::decode(Tape& tape, Var z, bool trainable) const { return decoder_.forward(tape, z, trainable); }

EncoderOutputs GDVAEModel::encoder_outputs(const RowMatrix& x) const {
  Tape tape;
  const Encoding e = encode(tape, tape.constant(to_tensor(x)), nullptr, false);
  EncoderOutputs out;
  out.mean = to_matrix(e.mean.value());
  if (e.has_logvar) out.logvar = to_matrix(e.logvar.value());
  out.z = to_matrix(e.z.value());
  return out;
}

RowMatrix GDVAEModel::step_codes(const RowMatrix& z) const {
  Tape tape;
  return to_matrix(latent_step(tape, tape.constant(to_tensor(z)), false).value());
}

RowMatrix GDVAEModel::decode_codes(const RowMatrix& z) const {
  Tape tape;
  return to_matrix(decode(tape, tape.constant(to_tensor(z)), false).value());
}

std::vector<diff::Parameter*> GDVAEModel::parameters() {
  std::vector<diff::Parameter*> out;
  auto take = [&out](Network& n) {
    for (auto& p : n.parameters()) out.push_back(&p);
  };
  if (trunk_) take(*trunk_);
  take(mean_head_);
  if (variance_head_) take(*variance_head_);
  take(decoder_);
  if (latent_matrix_) out.push_back(&*latent_matrix_);
  return out;
}

std::vector<const diff::Parameter*> GDVAEModel::parameters() const {
  std::vector<const diff::Parameter*> out;
  for (auto* p : const_cast<GDVAEModel*>(this)->parameters()) out.push_back(p);
  return out;
}

std::size_t GDVAEModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value.size();
  return n;
}

// ---------------------------------------------------------------- loss

double kl_diag_gaussian(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma2, double sigma0_sq) {
  if (mu.size() != sigma2.size()) throw ShapeError("kl_diag_gaussian: mean and variance extents differ");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    kl += 0.5 * std::log(sigma0_sq / sigma2(i)) + (sigma2(i) + mu(i) * mu(i)) / (2.0 * sigma0_sq) - 0.5;
  return kl;
}

void TrainingConfig::validate() const {
  if (!(beta >= 0.0)) throw ConfigError("training.beta", "must be >= 0");
  if (!(gamma >= 0.0)) throw ConfigError("training.gamma", "must be >= 0");
  if (!(sigma0 > 0.0)) throw ConfigError("training.sigma0", "must be > 0");
  if (!(decoder_sigma > 0.0)) throw ConfigError("training.decoder_sigma", "must be > 0");
  if (!(learning_rate > 0.0)) throw ConfigError("training.learning_rate", "must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("training.lr_decay", "must lie in (0, 1]");
  if (batch_size == 0) throw ConfigError("training.batch_size", "must be positive");
}

nlohmann::json TrainingConfig::to_json() const {
  return {{"beta", beta},
          {"gamma", gamma},
          {"sigma0", sigma0},
          {"decoder_sigma", decoder_sigma},
          {"kl_mode", kl_mode == KlMode::pre_projection ? "pre-projection" : "axis-only"},
          {"learning_rate", learning_rate},
          {"lr_decay", lr_decay},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"seed", seed}};
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
  TrainingConfig c;
  try {
    c.beta = j.value("beta", c.beta);
    c.gamma = j.value("gamma", c.gamma);
    c.sigma0 = j.value("sigma0", c.sigma0);
    if (j.contains("mse_weight")) {
      // weight w on the squared error corresponds to sigma_d = 1 / sqrt(2 w)
      const double w = j.at("mse_weight").get<double>();
      if (!(w > 0.0)) throw ConfigError("training.mse_weight", "must be > 0");
      c.decoder_sigma = 1.0 / std::sqrt(2.0 * w);
    }
    c.decoder_sigma = j.value("decoder_sigma", c.decoder_sigma);
    const auto mode = j.value("kl_mode", std::string("pre-projection"));
    if (mode == "pre-projection") c.kl_mode = KlMode::pre_projection;
    else if (mode == "axis-only") c.kl_mode = KlMode::axis_only;
    else throw ConfigError("training.kl_mode", "expected pre-projection | axis-only");
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.lr_decay = j.value("lr_decay", c.lr_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("training", e.what());
  }
  c.validate();
  return c;
}

LossGraph elbo_loss(Tape& tape, const GDVAEModel& model, Var x, Var y, const TrainingConfig& cfg, std::mt19937_64* noise,
                    bool trainable) {
  const auto& spec = model.spec();
  const std::size_t batch = x.shape()[0];
  if (y.shape().size() != 2 || y.shape()[0] != batch || y.shape()[1] != model.output_dim())
    throw ShapeError("elbo_loss: targets " + diff::to_string(y.shape()) + " do not match the decoder output");
  const double inv_b = 1.0 / static_cast<double>(batch);
  const double nll_weight = 0.5 / (cfg.decoder_sigma * cfg.decoder_sigma);

  // the tape rejects non-finite values; report which term produced one
  auto guarded = [](const char* term, auto&& body) {
    try {
      body();
    } catch (const NonFiniteError& e) {
      throw TrainingError(std::string("non-finite ") + term + ": " + e.what(), term);
    }
  };

  LossGraph g;
  guarded("L_RE", [&] {
    g.input_encoding = model.encode(tape, x, noise, trainable);
    g.stepped = model.latent_step(tape, g.input_encoding.z, trainable);
    const Var re_sse = diff::scale(diff::sum_squared_error(model.decode(tape, g.stepped, trainable), y), inv_b);
    g.total = diff::scale(re_sse, nll_weight);
    g.values.re_sse = re_sse.value().item();
    g.values.re = g.total.value().item();
  });

  if (cfg.beta > 0.0) guarded("L_KL", [&] {
    if (!g.input_encoding.has_logvar)
      throw ConfigError("training.beta", "a KL term needs a stochastic encoder (variance none with beta > 0)");
    Var mu = g.input_encoding.mean, lv = g.input_encoding.logvar;
    bool any = true;
    if (cfg.kl_mode == KlMode::axis_only) {
      const auto dims = axis_dims(spec);
      any = !dims.empty();
      if (any && dims.size() != model.embed_dim()) {
        mu = diff::select_columns(mu, dims);
        lv = diff::select_columns(lv, dims);
      }
    }
    if (any) {
      const Var kl = diff::scale(kl_sum(mu, lv, cfg.sigma0), cfg.beta * inv_b);
      g.values.kl = kl.value().item();
      g.total = diff::add(g.total, kl);
    }
  });

  if (cfg.gamma > 0.0) guarded("L_RR", [&] {
    if (model.input_dim() != model.output_dim())
      throw ConfigError("training.gamma", "reconstruction term needs matching input and output dims");
    const Encoding ey = model.encode(tape, y, noise, trainable);
    const Var rr_sse = diff::scale(diff::sum_squared_error(model.decode(tape, ey.z, trainable), y), inv_b);
    const Var rr = diff::scale(rr_sse, cfg.gamma * nll_weight);
    g.values.rr_sse = rr_sse.value().item();
    g.values.rr = rr.value().item();
    g.total = diff::add(g.total, rr);
  });
  g.values.total = g.total.value().item();
  return g;
}

std::vector<RowMatrix> predict_multistep(const GDVAEModel& model, const RowMatrix& x0, std::size_t n, bool reencode) {
  std::vector<RowMatrix> out;
  out.reserve(n + 1);
  RowMatrix z = model.encode_codes(x0);
  out.push_back(model.decode_codes(z));
  for (std::size_t k = 1; k <= n; ++k) {
    z = model.step_codes(z);
    out.push_back(model.decode_codes(z));
    if (reencode) z = model.encode_codes(out.back());
  }
  return out;
}

}  // namespace gdvae::model
