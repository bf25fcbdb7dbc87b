#include "gdvae/model/train.hpp"

#include "gdvae/binary_io.hpp"
#include "gdvae/diffcore/optim.hpp"
#include "gdvae/errors.hpp"
#include "gdvae/seed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

namespace gdvae::model {

namespace {

constexpr char kMagic[8] = {'G', 'D', 'V', 'A', 'E', '1', 0, 0};
constexpr std::uint64_t kVersion = 1;

diff::Tensor gather_rows(const RowMatrix& m, const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
  const auto cols = static_cast<std::size_t>(m.cols());
  diff::Tensor t({end - begin, cols});
  for (std::size_t r = begin; r < end; ++r)
    std::copy_n(m.row(static_cast<Eigen::Index>(idx[r])).data(), cols, t.data() + (r - begin) * cols);
  return t;
}

double max_residual(const manifold::ManifoldAtlas& atlas, const diff::Tensor& z) {
  const std::size_t n = atlas.embed_dim();
  double worst = 0.0;
  for (std::size_t r = 0; r < z.size() / n; ++r) {
    const manifold::Vec row = Eigen::Map<const manifold::Vec>(z.data() + r * n, static_cast<Eigen::Index>(n));
    worst = std::max(worst, atlas.constraint_residual(row));
  }
  return worst;
}

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

}  // namespace

TrainState TrainState::initial(const TrainingConfig& cfg) {
  TrainState s;
  s.rng.seed(derive_seed(cfg.seed, 1));
  return s;
}

GDVAEModel make_model(const ModelSpec& spec, const TrainingConfig& cfg) { return GDVAEModel(spec, derive_seed(cfg.seed, 0)); }

std::vector<EpochRecord> train(GDVAEModel& model, const RowMatrix& inputs, const RowMatrix& targets,
                               const TrainingConfig& cfg, TrainState& state, const EpochCallback& on_epoch) {
  cfg.validate();
  if (inputs.rows() == 0) throw ConfigError("training", "empty pair set");
  if (inputs.rows() != targets.rows()) throw ShapeError("train: inputs and targets hold different pair counts");
  if (static_cast<std::size_t>(inputs.cols()) != model.input_dim() ||
      static_cast<std::size_t>(targets.cols()) != model.output_dim())
    throw ShapeError("train: pair extents do not match the model");

  auto params = model.parameters();
  const auto count = static_cast<std::size_t>(inputs.rows());
  std::vector<std::size_t> order(count);
  std::vector<EpochRecord> history;

  while (state.epoch < cfg.epochs) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), state.rng);
    diff::AdamConfig adam;
    adam.learning_rate = cfg.learning_rate * std::pow(cfg.lr_decay, static_cast<double>(state.epoch));

    EpochRecord rec;
    rec.epoch = state.epoch + 1;
    for (std::size_t begin = 0; begin < count; begin += cfg.batch_size) {
      const std::size_t end = std::min(count, begin + cfg.batch_size);
      for (auto* p : params) p->zero_grad();
      diff::Tape tape;
      const auto x = tape.constant(gather_rows(inputs, order, begin, end));
      const auto y = tape.constant(gather_rows(targets, order, begin, end));
      const LossGraph g = elbo_loss(tape, model, x, y, cfg, &state.rng, true);
      if (model.has_manifold()) {
        const auto& atlas = *model.spec().manifold;
        rec.max_constraint_residual = std::max(
            {rec.max_constraint_residual, max_residual(atlas, g.input_encoding.z.value()), max_residual(atlas, g.stepped.value())});
      }
      tape.backward(g.total);
      try {
        diff::adam_step(params, adam);
      } catch (const NonFiniteError& e) {
        throw TrainingError(std::string("non-finite gradient: ") + e.what(), "gradient");
      }
      const double w = static_cast<double>(end - begin);
      rec.re += w * g.values.re;
      rec.kl += w * g.values.kl;
      rec.rr += w * g.values.rr;
      rec.total += w * g.values.total;
    }
    const double inv = 1.0 / static_cast<double>(count);
    rec.re *= inv;
    rec.kl *= inv;
    rec.rr *= inv;
    rec.total *= inv;
    if (!std::isfinite(rec.total)) throw TrainingError("non-finite epoch loss", "total");
    ++state.epoch;
    history.push_back(rec);
    if (on_epoch) on_epoch(rec, model, state);
  }
  return history;
}

void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history) {
  os << "epoch,L_RE,L_KL,L_RR,total\n";
  const auto old = os.precision(17);
  for (const auto& r : history) os << r.epoch << ',' << r.re << ',' << r.kl << ',' << r.rr << ',' << r.total << '\n';
  os.precision(old);
}

void save_checkpoint(const std::filesystem::path& path, const GDVAEModel& model, const TrainingConfig& cfg,
                     const TrainState& state) {
  io::BinaryWriter w(path.string(), kMagic, kVersion);
  w.str(model.spec().to_json().dump());
  w.str(cfg.to_json().dump());
  const auto params = model.parameters();
  w.u64(params.size());
  for (const auto* p : params) {
    w.str(p->name);
    w.u64s(std::vector<std::uint64_t>(p->value.shape().begin(), p->value.shape().end()));
    w.doubles(p->value.storage());
  }
  for (const auto* p : params) {
    w.doubles(p->first_moment.storage());
    w.doubles(p->second_moment.storage());
    w.u64(static_cast<std::uint64_t>(p->step));
  }
  w.u64(state.epoch);
  w.str(rng_state(state.rng));
  w.close();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  io::BinaryReader r(path.string(), kMagic, kVersion);
  Checkpoint c;
  try {
    c.spec = ModelSpec::from_json(nlohmann::json::parse(r.str()));
    c.config = TrainingConfig::from_json(nlohmann::json::parse(r.str()));
  } catch (const nlohmann::json::exception& e) {
    throw MissingArtifactError("corrupt checkpoint header in " + path.string() + ": " + e.what());
  }
  const auto n = r.u64();
  if (n > 10000) throw MissingArtifactError("corrupt parameter count in " + path.string());
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string name = r.str();
    const auto shape64 = r.u64s();
    diff::Shape shape(shape64.begin(), shape64.end());
    auto values = r.doubles();
    if (values.size() != diff::element_count(shape)) throw MissingArtifactError("corrupt tensor " + name + " in " + path.string());
    c.parameters.emplace_back(std::move(name), diff::Tensor(std::move(shape), std::move(values)));
  }
  for (auto& p : c.parameters) {
    auto m = r.doubles(), v = r.doubles();
    if (m.size() != p.value.size() || v.size() != p.value.size())
      throw MissingArtifactError("corrupt optimizer state for " + p.name + " in " + path.string());
    p.first_moment = diff::Tensor(p.value.shape(), std::move(m));
    p.second_moment = diff::Tensor(p.value.shape(), std::move(v));
    p.step = static_cast<std::int64_t>(r.u64());
  }
  c.state.epoch = r.u64();
  std::istringstream is(r.str());
  is >> c.state.rng;
  if (!is) throw MissingArtifactError("corrupt trainer state in " + path.string());
  return c;
}

GDVAEModel Checkpoint::restore() const {
  GDVAEModel model(spec, 0);
  auto params = model.parameters();
  if (params.size() != parameters.size())
    throw MissingArtifactError("checkpoint holds " + std::to_string(parameters.size()) + " tensors, model expects " +
                               std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& src = parameters[i];
    auto& dst = *params[i];
    if (src.name != dst.name || src.value.shape() != dst.value.shape())
      throw MissingArtifactError("checkpoint tensor " + src.name + " does not match model tensor " + dst.name);
    dst.value = src.value;
    dst.first_moment = src.first_moment;
    dst.second_moment = src.second_moment;
    dst.step = src.step;
  }
  return model;
}

}  // namespace gdvae::model
