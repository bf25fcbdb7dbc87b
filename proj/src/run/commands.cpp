#include "gdvae/run/commands.hpp"

#include "gdvae/errors.hpp"
#include "gdvae/model/train.hpp"
#include "gdvae/seed.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

namespace gdvae::run {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Runs body(i) for i in [0, count) on up to `threads` workers; rethrows the lowest-index failure.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

fs::path data_stem(const fs::path& out, const char* which) { return out / "data" / which; }

pde::SnapshotPairSet point_set(const RunConfig& cfg) {
  const auto& d = cfg.dataset;
  pde::SnapshotPairSet set;
  set.family = to_string(d.kind);
  set.sample_shape = {4};
  set.inputs = d.kind == DatasetKind::arm ? pde::make_arm_dataset(d.points, d.length1, d.length2, d.burgers.seed)
                                          : pde::make_klein_dataset(d.points, d.klein_a, d.klein_b, d.klein_noise, d.burgers.seed);
  set.targets = set.inputs;
  set.params.resize(set.inputs.rows(), 0);
  set.times = Eigen::VectorXd::Zero(set.inputs.rows());
  set.generator = cfg.to_json()["dataset"];
  set.generator["seed"] = d.burgers.seed;
  return set;
}

void require_time_series(const RunConfig& cfg, const char* stage) {
  if (cfg.dataset.kind == DatasetKind::arm || cfg.dataset.kind == DatasetKind::klein)
    throw ConfigError("dataset.kind", std::string(stage) + " needs a time-dependent dataset (burgers | brusselator)");
}

model::TrainingConfig trial_config(const RunConfig& cfg, const RunOptions& opts, std::size_t trial) {
  model::TrainingConfig t = cfg.training;
  t.seed = cfg.trial_seed(trial);
  if (opts.epochs) t.epochs = *opts.epochs;
  return t;
}

model::GDVAEModel load_trial_model(const fs::path& out, std::size_t trial) {
  const fs::path ckpt = trial_dir(out, trial) / "model.ckpt";
  if (!fs::exists(ckpt)) throw MissingArtifactError("missing checkpoint for trial " + std::to_string(trial) + ": " + ckpt.string());
  return model::load_checkpoint(ckpt).restore();
}

rom::Mat columns(const analysis::RowMatrix& rows) { return rows.transpose(); }

std::string to_hex(const unsigned char* p, std::size_t n) {
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (std::size_t i = 0; i < n; ++i) os << std::setw(2) << static_cast<int>(p[i]);
  return os.str();
}

json read_json_file(const fs::path& p) {
  std::ifstream is(p);
  if (!is) return json::object();
  try {
    return json::parse(is);
  } catch (const json::exception&) {
    return json::object();
  }
}

void write_text(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  os << s;
  if (!os) throw MissingArtifactError("cannot write " + p.string());
}

void log_line(const RunOptions& opts, const std::string& line) {
  static std::mutex m;
  if (!opts.log) return;
  std::lock_guard<std::mutex> lock(m);
  *opts.log << line << std::endl;
}

}  // namespace

fs::path trial_dir(const fs::path& out, std::size_t trial) { return out / "trials" / std::to_string(trial); }

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifactError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256: digest init failed");
  std::vector<char> buf(1 << 16);
  while (is) {
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (is.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  return to_hex(md, len);
}

void write_manifest(const RunConfig& cfg, const RunOptions& opts, const std::string& stage,
                    const std::vector<fs::path>& artifacts, double seconds, bool complete) {
  const fs::path path = opts.out / "manifest.json";
  json m = read_json_file(path);
  m["tool"] = "gdvae";
  m["version"] = kToolVersion;
  m["config"] = cfg.to_json();
  json trials = json::array();
  for (std::size_t t = 0; t < cfg.trials; ++t) trials.push_back(cfg.trial_seed(t));
  m["seeds"] = {{"master", cfg.seed}, {"trials", trials}, {"seed_derivation", "splitmix64(master + golden * (index + 1))"}};
  json s = {{"complete", complete}, {"wall_clock_seconds", seconds}, {"threads", opts.threads}};
  if (opts.epochs) s["epochs_override"] = *opts.epochs;
  json hashes = json::object();
  for (const auto& a : artifacts) hashes[fs::relative(a, opts.out).generic_string()] = sha256_file(a);
  s["artifacts"] = hashes;
  m["stages"][stage] = s;
  write_text(path, m.dump(2) + "\n");
}

std::vector<std::string> verify_manifest(const fs::path& out) {
  const fs::path path = out / "manifest.json";
  if (!fs::exists(path)) throw MissingArtifactError("missing manifest " + path.string());
  const json m = read_json_file(path);
  std::vector<std::string> bad;
  if (!m.contains("stages")) return bad;
  for (const auto& [stage, s] : m.at("stages").items()) {
    if (!s.contains("artifacts")) continue;
    for (const auto& [rel, hash] : s.at("artifacts").items()) {
      const fs::path p = out / rel;
      if (!fs::exists(p) || sha256_file(p) != hash.get<std::string>()) bad.push_back(rel);
    }
  }
  return bad;
}

std::vector<double> horizon_seconds(const RunConfig& cfg) {
  const double tau = cfg.dataset.kind == DatasetKind::brusselator ? cfg.dataset.brusselator.tau : cfg.dataset.burgers.tau;
  std::vector<double> h;
  for (std::size_t k = 0; k <= cfg.test.steps; ++k) h.push_back(tau * static_cast<double>(k));
  return h;
}

pde::TrajectorySet make_test_set(const RunConfig& cfg, std::size_t threads) {
  require_time_series(cfg, "evaluation");
  if (cfg.dataset.kind == DatasetKind::burgers) {
    const auto& b = cfg.dataset.burgers;
    std::vector<double> times;
    for (double h : horizon_seconds(cfg)) times.push_back(cfg.test.t0 + h);
    return pde::make_burgers_trajectories(b.family, pde::uniform_param_grid(b.family, cfg.test.count), times, b.nu, b.n, b.modes);
  }
  pde::BrusselatorDatasetSpec spec = cfg.dataset.brusselator;
  spec.alphas = cfg.test.alphas;
  spec.stride = spec.tau;
  spec.t_end = spec.t_start + spec.tau * static_cast<double>(cfg.test.steps);
  return pde::make_brusselator_trajectories(spec, threads);
}

void cmd_generate(const RunConfig& cfg, const RunOptions& opts) {
  const Stopwatch clock;
  write_manifest(cfg, opts, "generate", {}, 0.0, false);
  std::vector<fs::path> artifacts;
  pde::SnapshotPairSet train;
  switch (cfg.dataset.kind) {
    case DatasetKind::burgers: train = pde::make_burgers_dataset(cfg.dataset.burgers); break;
    case DatasetKind::brusselator: {
      const auto& b = cfg.dataset.brusselator;
      const auto traj = pde::make_brusselator_trajectories(b, opts.threads);
      train = pde::pairs_from_trajectories(traj, b.tau, b.noise, b.seed);
      break;
    }
    case DatasetKind::arm:
    case DatasetKind::klein: train = point_set(cfg); break;
  }
  fs::create_directories(opts.out / "data");
  pde::save_dataset(data_stem(opts.out, "train"), train);
  artifacts.push_back(data_stem(opts.out, "train").string() + ".json");
  artifacts.push_back(data_stem(opts.out, "train").string() + ".bin");
  log_line(opts, "generate: " + std::to_string(train.size()) + " training pairs of dimension " + std::to_string(train.dim()));
  if (cfg.dataset.kind == DatasetKind::burgers || cfg.dataset.kind == DatasetKind::brusselator) {
    const auto test = make_test_set(cfg, opts.threads);
    pde::save_trajectories(data_stem(opts.out, "test"), test);
    artifacts.push_back(data_stem(opts.out, "test").string() + ".json");
    artifacts.push_back(data_stem(opts.out, "test").string() + ".bin");
    log_line(opts, "generate: " + std::to_string(test.size()) + " test trajectories");
  }
  write_manifest(cfg, opts, "generate", artifacts, clock.seconds(), true);
}

void cmd_train(const RunConfig& cfg, const RunOptions& opts) {
  const Stopwatch clock;
  const auto train = pde::load_dataset(data_stem(opts.out, "train"));
  if (train.dim() != cfg.model.architecture.input_dim)
    throw ConfigError("model.architecture.input_dim", "differs from the stored dataset dimension " + std::to_string(train.dim()));
  write_manifest(cfg, opts, "train", {}, 0.0, false);

  parallel_for(cfg.trials, opts.threads, [&](std::size_t t) {
    const fs::path dir = trial_dir(opts.out, t);
    fs::create_directories(dir);
    const fs::path ckpt = dir / "model.ckpt", hist = dir / "history.csv";
    const auto tcfg = trial_config(cfg, opts, t);

    std::optional<model::GDVAEModel> m;
    model::TrainState state;
    bool resumed = false;
    if (opts.resume && fs::exists(ckpt)) {
      const auto c = model::load_checkpoint(ckpt);
      m.emplace(c.restore());
      state = c.state;
      resumed = true;
    } else {
      m.emplace(model::make_model(cfg.model, tcfg));
      state = model::TrainState::initial(tcfg);
    }
    const auto history = model::train(*m, train.inputs, train.targets, tcfg, state,
                                      [&](const model::EpochRecord& r, const model::GDVAEModel&, const model::TrainState&) {
                                        std::ostringstream os;
                                        os << "train: trial " << t << " epoch " << r.epoch << " total " << r.total;
                                        log_line(opts, os.str());
                                      });
    model::save_checkpoint(ckpt, *m, tcfg, state);
    std::ostringstream csv;
    model::write_history_csv(csv, history);
    if (resumed && fs::exists(hist)) {
      // append the new epochs below the existing header and rows
      const std::string s = csv.str();
      std::ofstream os(hist, std::ios::app | std::ios::binary);
      os << s.substr(s.find('\n') + 1);
    } else {
      write_text(hist, csv.str());
    }
  });

  std::vector<fs::path> artifacts;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    artifacts.push_back(trial_dir(opts.out, t) / "model.ckpt");
    artifacts.push_back(trial_dir(opts.out, t) / "history.csv");
  }
  write_manifest(cfg, opts, "train", artifacts, clock.seconds(), true);
}

analysis::EvalTable cmd_eval(const RunConfig& cfg, const RunOptions& opts) {
  const Stopwatch clock;
  require_time_series(cfg, "eval");
  const auto test = pde::load_trajectories(data_stem(opts.out, "test"));
  if (test.times.size() < cfg.test.steps + 1) throw MissingArtifactError("stored test set is shorter than test.steps");
  write_manifest(cfg, opts, "eval", {}, 0.0, false);

  analysis::EvalTable table;
  table.horizons = horizon_seconds(cfg);

  std::vector<std::vector<double>> per_trial(cfg.trials);
  parallel_for(cfg.trials, opts.threads, [&](std::size_t t) {
    const auto m = load_trial_model(opts.out, t);
    per_trial[t] = analysis::horizon_errors(analysis::model_predictor(m), test, cfg.test.steps);
  });
  table.rows.push_back(analysis::summarize(cfg.method, cfg.model.architecture.embed_dim, per_trial));

  std::vector<fs::path> artifacts;
  if (!cfg.baselines.empty()) {
    std::optional<pde::SnapshotPairSet> train;
    for (const auto& b : cfg.baselines) {
      if (b.kind == "cole-hopf") {
        const auto& bs = cfg.dataset.burgers;
        const auto e = analysis::horizon_errors(analysis::cole_hopf_predictor(bs.nu, bs.tau, b.rank, bs.modes), test, cfg.test.steps);
        table.rows.push_back(analysis::summarize("Cole-Hopf", b.rank, std::vector<std::vector<double>>{e}));
        continue;
      }
      if (!train) train = pde::load_dataset(data_stem(opts.out, "train"));
      const auto rom = b.kind == "pod" ? rom::pod(columns(train->inputs), columns(train->targets), b.rank)
                                       : rom::dmd(columns(train->inputs), columns(train->targets), b.rank);
      const fs::path p = opts.out / "eval" / (b.kind + "_" + std::to_string(b.rank) + ".rom");
      fs::create_directories(p.parent_path());
      rom.save(p);
      artifacts.push_back(p);
      const auto e = analysis::horizon_errors(analysis::rom_predictor(rom), test, cfg.test.steps);
      table.rows.push_back(analysis::summarize(b.kind == "pod" ? "POD" : "DMD", b.rank, std::vector<std::vector<double>>{e}));
    }
  }

  std::ostringstream csv;
  table.write_csv(csv);
  write_text(opts.out / "eval" / "table.csv", csv.str());
  write_text(opts.out / "eval" / "table.json", table.sidecar().dump(2) + "\n");
  artifacts.push_back(opts.out / "eval" / "table.csv");
  artifacts.push_back(opts.out / "eval" / "table.json");
  log_line(opts, "eval: " + std::to_string(table.rows.size()) + " rows written to " + (opts.out / "eval" / "table.csv").string());
  write_manifest(cfg, opts, "eval", artifacts, clock.seconds(), true);
  return table;
}

void cmd_analyze(const RunConfig& cfg, const RunOptions& opts) {
  const Stopwatch clock;
  const auto train = pde::load_dataset(data_stem(opts.out, "train"));
  std::vector<model::GDVAEModel> models;
  for (std::size_t t = 0; t < cfg.trials; ++t) models.push_back(load_trial_model(opts.out, t));
  write_manifest(cfg, opts, "analyze", {}, 0.0, false);
  std::vector<fs::path> artifacts;
  const fs::path dir = opts.out / "analysis";
  fs::create_directories(dir);

  const bool has_variance = cfg.model.architecture.variance != model::EncoderVariance::none;
  json summary = {{"threshold", cfg.analysis.threshold}, {"trials", json::array()}};
  // the cyclic diagnostic needs a one-parameter family whose parameter wraps around
  const bool one_param_family = cfg.dataset.kind == DatasetKind::burgers && cfg.dataset.burgers.family == pde::IcFamily::periodic;
  std::ostringstream cont;
  cont << "trial,method,dim,continuity_score\n";
  cont.precision(17);

  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto& m = models[t];
    json entry = {{"trial", t}};
    if (has_variance) {
      const auto rows = std::min<Eigen::Index>(train.inputs.rows(), static_cast<Eigen::Index>(cfg.analysis.variance_batch));
      const auto stats = analysis::variance_stats(m, train.inputs.topRows(rows));
      const auto selected = analysis::select_informative_dims(stats, cfg.analysis.threshold);
      std::ostringstream os;
      os.precision(17);
      os << "dim,q_mov,q_vom,ratio,selected\n";
      for (Eigen::Index d = 0; d < stats.q_mov.size(); ++d) {
        const bool sel = std::find(selected.begin(), selected.end(), static_cast<std::size_t>(d)) != selected.end();
        os << d + 1 << ',' << stats.q_mov(d) << ',' << stats.q_vom(d) << ',' << stats.q_vom(d) / stats.q_mov(d) << ','
           << (sel ? 1 : 0) << '\n';
      }
      const fs::path p = dir / ("variance_" + std::to_string(t) + ".csv");
      write_text(p, os.str());
      artifacts.push_back(p);
      json sel = json::array();
      for (auto d : selected) sel.push_back(d + 1);
      entry["selected_dims"] = sel;
    }
    if (one_param_family) {
      const auto& b = cfg.dataset.burgers;
      const auto grid = pde::uniform_param_grid(b.family, cfg.analysis.continuity_grid);
      const auto traj = pde::make_burgers_trajectories(b.family, grid, {cfg.test.t0}, b.nu, b.n, b.modes);
      analysis::RowMatrix states(static_cast<Eigen::Index>(traj.size()), static_cast<Eigen::Index>(b.n));
      for (std::size_t i = 0; i < traj.size(); ++i) states.row(static_cast<Eigen::Index>(i)) = traj.states[i].row(0);
      const double score = analysis::continuity_score(m, states);
      cont << t << ',' << cfg.method << ',' << cfg.model.architecture.embed_dim << ',' << score << '\n';
      entry["continuity_score"] = score;
    }
    std::ostringstream codes;
    analysis::export_latent_codes(codes, m, train);
    const fs::path p = dir / ("latent_" + std::to_string(t) + ".csv");
    write_text(p, codes.str());
    artifacts.push_back(p);
    summary["trials"].push_back(entry);
  }
  if (one_param_family) {
    write_text(dir / "continuity.csv", cont.str());
    artifacts.push_back(dir / "continuity.csv");
    summary["continuity_note"] =
        "continuity_score: max cyclic adjacent code distance over the median adjacent distance on a uniform periodic grid "
        "(an operational diagnostic for scattered codes)";
  }
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  artifacts.push_back(dir / "summary.json");
  log_line(opts, "analyze: wrote " + std::to_string(artifacts.size()) + " files to " + dir.string());
  write_manifest(cfg, opts, "analyze", artifacts, clock.seconds(), true);
}

}  // namespace gdvae::run
