#include "gdvae/run/config.hpp"

#include "gdvae/errors.hpp"
#include "gdvae/seed.hpp"

#include <fstream>

namespace gdvae::run {

namespace {

using nlohmann::json;

template <class T>
T field(const json& j, const char* key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key, "wrong type");
  }
}

void check_unit_interval(const std::vector<double>& v, const std::string& path) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!(v[i] >= 0.0 && v[i] <= 1.0))
      throw ConfigError(path + "[" + std::to_string(i) + "]", "alpha " + std::to_string(v[i]) + " outside [0, 1]");
}

DatasetConfig dataset_from_json(const json& j, std::uint64_t seed) {
  const std::string p = "dataset";
  if (!j.is_object()) throw ConfigError(p, "missing or not an object");
  DatasetConfig d;
  const auto kind = field<std::string>(j, "kind", p, "burgers");
  if (kind == "burgers") {
    d.kind = DatasetKind::burgers;
    auto& b = d.burgers;
    b.family = pde::ic_family_from_string(field<std::string>(j, "family", p, "u1"));
    b.samples = field(j, "samples", p, b.samples);
    b.tau = field(j, "tau", p, b.tau);
    b.t_min = field(j, "t_min", p, b.t_min);
    b.t_max = field(j, "t_max", p, b.t_max);
    b.noise = field(j, "noise", p, b.noise);
    b.noise_targets = field(j, "noise_targets", p, b.noise_targets);
    b.nu = field(j, "nu", p, b.nu);
    b.n = field(j, "n", p, b.n);
    b.modes = field(j, "modes", p, b.modes);
    b.seed = seed;
    if (!(b.tau > 0.0)) throw ConfigError(p + ".tau", "must be positive");
    if (!(b.nu > 0.0)) throw ConfigError(p + ".nu", "must be positive");
    if (b.n < 4 || b.modes < b.n) throw ConfigError(p + ".n", "need 4 <= n <= modes");
    if (!(b.noise >= 0.0)) throw ConfigError(p + ".noise", "must be non-negative");
  } else if (kind == "brusselator") {
    d.kind = DatasetKind::brusselator;
    auto& b = d.brusselator;
    b.alphas = field(j, "alphas", p, std::vector<double>{});
    if (b.alphas.empty()) throw ConfigError(p + ".alphas", "need at least one initial condition");
    check_unit_interval(b.alphas, p + ".alphas");
    b.nx = field(j, "nx", p, b.nx);
    b.ny = field(j, "ny", p, b.ny);
    b.t_start = field(j, "t_start", p, b.t_start);
    b.t_end = field(j, "t_end", p, b.t_end);
    b.stride = field(j, "stride", p, b.stride);
    b.tau = field(j, "tau", p, b.tau);
    b.noise = field(j, "noise", p, b.noise);
    auto& q = b.params;
    q.d1 = field(j, "D1", p, q.d1);
    q.d2 = field(j, "D2", p, q.d2);
    q.a = field(j, "a", p, q.a);
    q.b = field(j, "b", p, q.b);
    q.dt = field(j, "dt", p, q.dt);
    q.dx = field(j, "dx", p, q.dx);
    if (j.contains("integrator")) q.integrator = pde::integrator_from_string(field<std::string>(j, "integrator", p, ""));
    q.validate();
    b.seed = seed;
    if (!(b.stride > 0.0 && b.t_end > b.t_start && b.t_start >= 0.0)) throw ConfigError(p + ".t_end", "need 0 <= t_start < t_end");
  } else if (kind == "arm" || kind == "klein") {
    d.kind = kind == "arm" ? DatasetKind::arm : DatasetKind::klein;
    d.points = field(j, "points", p, std::size_t{1000});
    if (d.points < 1) throw ConfigError(p + ".points", "need at least one point");
    d.length1 = field(j, "l1", p, d.length1);
    d.length2 = field(j, "l2", p, d.length2);
    d.klein_a = field(j, "a", p, d.klein_a);
    d.klein_b = field(j, "b", p, d.klein_b);
    d.klein_noise = field(j, "noise", p, d.klein_noise);
    d.burgers.seed = seed;
  } else {
    throw ConfigError(p + ".kind", "expected burgers | brusselator | arm | klein, got '" + kind + "'");
  }
  return d;
}

json dataset_to_json(const DatasetConfig& d) {
  switch (d.kind) {
    case DatasetKind::burgers: {
      const auto& b = d.burgers;
      return {{"kind", "burgers"}, {"family", pde::to_string(b.family)}, {"samples", b.samples}, {"tau", b.tau},
              {"t_min", b.t_min},  {"t_max", b.t_max},                   {"noise", b.noise},     {"noise_targets", b.noise_targets},
              {"nu", b.nu},        {"n", b.n},                           {"modes", b.modes}};
    }
    case DatasetKind::brusselator: {
      const auto& b = d.brusselator;
      return {{"kind", "brusselator"}, {"alphas", b.alphas}, {"nx", b.nx}, {"ny", b.ny}, {"t_start", b.t_start},
              {"t_end", b.t_end},      {"stride", b.stride}, {"tau", b.tau}, {"noise", b.noise}, {"D1", b.params.d1},
              {"D2", b.params.d2},     {"a", b.params.a},    {"b", b.params.b}, {"dt", b.params.dt}, {"dx", b.params.dx},
              {"integrator", pde::to_string(b.params.integrator)}};
    }
    case DatasetKind::arm: return {{"kind", "arm"}, {"points", d.points}, {"l1", d.length1}, {"l2", d.length2}};
    case DatasetKind::klein:
      return {{"kind", "klein"}, {"points", d.points}, {"a", d.klein_a}, {"b", d.klein_b}, {"noise", d.klein_noise}};
  }
  return {};
}

}  // namespace

const char* to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::burgers: return "burgers";
    case DatasetKind::brusselator: return "brusselator";
    case DatasetKind::arm: return "arm";
    case DatasetKind::klein: return "klein";
  }
  return "?";
}

std::size_t DatasetConfig::dim() const {
  switch (kind) {
    case DatasetKind::burgers: return burgers.n;
    case DatasetKind::brusselator: return 2 * brusselator.nx * brusselator.ny;
    case DatasetKind::arm:
    case DatasetKind::klein: return 4;
  }
  return 0;
}

std::uint64_t RunConfig::trial_seed(std::size_t t) const { return derive_seed(seed, t); }

RunConfig RunConfig::from_json(const json& j, std::optional<std::uint64_t> seed_override) {
  if (!j.is_object()) throw ConfigError("", "run config must be a JSON object");
  RunConfig c;
  c.name = field<std::string>(j, "name", "", "run");
  c.method = field<std::string>(j, "method", "", c.method);
  if (seed_override) {
    c.seed = *seed_override;
  } else if (j.contains("seed")) {
    c.seed = field<std::uint64_t>(j, "seed", "", 0);
  } else {
    throw ConfigError("seed", "a master seed is mandatory (config field or --seed)");
  }
  c.trials = field<std::size_t>(j, "trials", "", 1);
  if (c.trials < 1) throw ConfigError("trials", "need at least one trial");

  // the dataset seed is a fixed stream under the master seed, separate from every trial stream
  c.dataset = dataset_from_json(j.contains("dataset") ? j.at("dataset") : json(), derive_seed(c.seed, 1u << 20));

  if (j.contains("test")) {
    const auto& t = j.at("test");
    c.test.count = field(t, "count", "test", c.test.count);
    c.test.alphas = field(t, "alphas", "test", c.test.alphas);
    check_unit_interval(c.test.alphas, "test.alphas");
    c.test.t0 = field(t, "t0", "test", c.test.t0);
    c.test.steps = field(t, "steps", "test", c.test.steps);
  }
  if (c.dataset.kind == DatasetKind::brusselator && c.test.alphas.empty()) c.test.alphas = c.dataset.brusselator.alphas;

  if (!j.contains("model")) throw ConfigError("model", "missing");
  json m = j.at("model");
  if (m.contains("architecture") && !m.at("architecture").contains("input_dim"))
    m["architecture"]["input_dim"] = c.dataset.dim();
  c.model = model::ModelSpec::from_json(m);
  if (c.model.architecture.input_dim != c.dataset.dim())
    throw ConfigError("model.architecture.input_dim", "differs from the dataset dimension " + std::to_string(c.dataset.dim()));

  c.training = model::TrainingConfig::from_json(j.contains("training") ? j.at("training") : json::object());

  if (j.contains("baselines")) {
    std::size_t i = 0;
    for (const auto& b : j.at("baselines")) {
      const std::string p = "baselines[" + std::to_string(i++) + "]";
      BaselineConfig bc;
      bc.kind = field<std::string>(b, "kind", p, "");
      bc.rank = field<std::size_t>(b, "rank", p, 0);
      if (bc.kind != "pod" && bc.kind != "dmd" && bc.kind != "cole-hopf")
        throw ConfigError(p + ".kind", "expected pod | dmd | cole-hopf");
      if (bc.rank < 1) throw ConfigError(p + ".rank", "must be positive");
      if (bc.kind == "cole-hopf" && c.dataset.kind != DatasetKind::burgers)
        throw ConfigError(p + ".kind", "the Cole-Hopf reduced model needs a Burgers dataset");
      c.baselines.push_back(bc);
    }
  }
  if (j.contains("analysis")) {
    const auto& a = j.at("analysis");
    c.analysis.variance_batch = field(a, "variance_batch", "analysis", c.analysis.variance_batch);
    c.analysis.threshold = field(a, "threshold", "analysis", c.analysis.threshold);
    c.analysis.continuity_grid = field(a, "continuity_grid", "analysis", c.analysis.continuity_grid);
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream is(path);
  if (!is) throw ConfigError("--config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("--config", "invalid JSON in " + path.string() + ": " + e.what());
  }
  return from_json(j, seed_override);
}

nlohmann::json RunConfig::to_json() const {
  json j = {{"name", name},           {"method", method},
            {"seed", seed},           {"trials", trials},
            {"dataset", dataset_to_json(dataset)},
            {"test", {{"count", test.count}, {"alphas", test.alphas}, {"t0", test.t0}, {"steps", test.steps}}},
            {"model", model.to_json()},
            {"training", training.to_json()},
            {"analysis",
             {{"variance_batch", analysis.variance_batch},
              {"threshold", analysis.threshold},
              {"continuity_grid", analysis.continuity_grid}}}};
  json b = json::array();
  for (const auto& x : baselines) b.push_back({{"kind", x.kind}, {"rank", x.rank}});
  j["baselines"] = b;
  return j;
}

}  // namespace gdvae::run
