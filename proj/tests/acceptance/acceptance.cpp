// Acceptance runner: prints one PASS/FAIL line per criterion and exits non-zero if any fails.
//
// Criteria 5-11 train models through the run library on the configs in configs/ and keep
// their outputs below --work. With --reuse, a run whose manifest records the same resolved
// config, complete generate/train stages and intact artifact hashes is evaluated again
// without retraining; the reported wall-clock then comes from that manifest.

#include "gdvae/analysis/analysis.hpp"
#include "gdvae/errors.hpp"
#include "gdvae/manifold/projection.hpp"
#include "gdvae/model/train.hpp"
#include "gdvae/pde/brusselator.hpp"
#include "gdvae/pde/burgers.hpp"
#include "gdvae/pde/datasets.hpp"
#include "gdvae/rom/baselines.hpp"
#include "gdvae/run/commands.hpp"

#include "../support/gradcheck.hpp"
#include "../support/manifold_oracles.hpp"
#include "../support/pde_oracles.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using gdvae::analysis::RowMatrix;
using gdvae::manifold::Mat;
using gdvae::manifold::Vec;
using json = nlohmann::json;

// Tolerances and budgets (seconds).
constexpr double kGradTol = 1e-4;
constexpr int kGradTrials = 20;
constexpr double kIdempotenceTol = 1e-9;
constexpr double kConstraintTol = 1e-9;
constexpr double kTangencyTol = 1e-6;
constexpr double kMinimalitySlack = 1e-9;
constexpr double kSolverTol = 1e-3;
constexpr double kMeanTol = 1e-10;
constexpr double kFixedPointTol = 1e-12;
constexpr double kColeHopf6Tol = 1e-4;
constexpr double kU1Tol = 2e-2;
constexpr double kGammaRatio = 10.0;
constexpr double kNoProjRatio = 5.0;
constexpr double kCylinderTol = 8e-2;
constexpr double kTorusSplit = 1e-1;
constexpr double kBrusselatorStable = 3.0;
constexpr double kBrusselatorDegrade = 3.0;
constexpr double kInformativeRatio = 10.0;
constexpr double kLoopContinuity = 10.0;
constexpr double kEuclidRatio = 10.0;
constexpr double kOracleTol = 1e-8;

constexpr double kBudget[13] = {0, 60, 120, 600, 120, 1800, 1800, 2700, 3600, 7200, 1800, 1800, 60};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path configs;
  fs::path work;
  bool reuse = false;
  std::size_t threads = 1;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string budget_note(int id, double seconds) {
  return "; " + sci(seconds) + " s of " + sci(kBudget[id]) + " s";
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

// ---- experiments --------------------------------------------------------------------------

struct Experiment {
  gdvae::run::RunConfig cfg;
  fs::path out;
  gdvae::analysis::EvalTable table;
  double seconds = 0.0;  // generate + train + eval
  bool reused = false;
};

bool reusable(const gdvae::run::RunConfig& cfg, const fs::path& out) {
  const fs::path manifest = out / "manifest.json";
  if (!fs::exists(manifest)) return false;
  const json m = read_json(manifest);
  if (!m.contains("config") || m.at("config") != cfg.to_json() || !m.contains("stages")) return false;
  for (const char* s : {"generate", "train"}) {
    if (!m["stages"].contains(s) || !m["stages"][s].value("complete", false)) return false;
    if (m["stages"][s].contains("epochs_override")) return false;
  }
  return gdvae::run::verify_manifest(out).empty();
}

double stage_seconds(const fs::path& out, std::initializer_list<const char*> stages) {
  const json m = read_json(out / "manifest.json");
  double s = 0.0;
  for (const char* st : stages) s += m["stages"][st].value("wall_clock_seconds", 0.0);
  return s;
}

std::map<std::string, Experiment> g_experiments;

const Experiment& experiment(const Context& ctx, const std::string& name) {
  if (auto it = g_experiments.find(name); it != g_experiments.end()) return it->second;
  Experiment e;
  e.cfg = gdvae::run::RunConfig::load(ctx.configs / (name + ".json"));
  e.out = ctx.work / name;
  gdvae::run::RunOptions opts;
  opts.out = e.out;
  opts.threads = ctx.threads;
  e.reused = ctx.reuse && reusable(e.cfg, e.out);
  std::cerr << "  [" << name << "] " << (e.reused ? "reusing trained trials" : "generating and training") << std::endl;
  if (!e.reused) {
    gdvae::run::cmd_generate(e.cfg, opts);
    gdvae::run::cmd_train(e.cfg, opts);
  }
  e.table = gdvae::run::cmd_eval(e.cfg, opts);
  e.seconds = stage_seconds(e.out, {"generate", "train", "eval"});
  return g_experiments.emplace(name, std::move(e)).first->second;
}

/// The trained model's row (the first row of the table).
const gdvae::analysis::EvalRow& model_row(const Experiment& e) { return e.table.rows.front(); }

std::size_t horizon_index(const Experiment& e, double seconds) {
  const auto& h = e.table.horizons;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (std::abs(h[k] - seconds) < 1e-9) return k;
  }
  throw gdvae::ConfigError("test.steps", "no horizon at " + sci(seconds) + " s in " + e.cfg.name);
}

std::vector<gdvae::model::GDVAEModel> trial_models(const Experiment& e) {
  std::vector<gdvae::model::GDVAEModel> out;
  for (std::size_t t = 0; t < e.cfg.trials; ++t) {
    out.push_back(gdvae::model::load_checkpoint(gdvae::run::trial_dir(e.out, t) / "model.ckpt").restore());
  }
  return out;
}

/// States at test.t0 on the uniform periodic parameter grid, one per row.
RowMatrix periodic_grid_states(const gdvae::run::RunConfig& cfg) {
  const auto& b = cfg.dataset.burgers;
  const auto grid = gdvae::pde::uniform_param_grid(b.family, cfg.analysis.continuity_grid);
  const auto traj = gdvae::pde::make_burgers_trajectories(b.family, grid, {cfg.test.t0}, b.nu, b.n, b.modes);
  RowMatrix states(static_cast<Eigen::Index>(traj.size()), static_cast<Eigen::Index>(b.n));
  for (std::size_t i = 0; i < traj.size(); ++i) states.row(static_cast<Eigen::Index>(i)) = traj.states[i].row(0);
  return states;
}

// ---- criteria ---------------------------------------------------------------------------------

Outcome gradient_suite(const Context&) {
  const auto start = std::chrono::steady_clock::now();
  double worst_op = 0.0;
  std::string worst_name;
  for (const auto& e : gdvae::testing::diffcore_gradient_suite(101, kGradTrials)) {
    if (e.worst >= worst_op) {
      worst_op = e.worst;
      worst_name = e.name;
    }
  }
  std::mt19937_64 rng(103);
  double worst_proj = 0.0, worst_rows = 0.0;
  for (const auto& [name, atlas] : gdvae::testing::all_test_atlases()) {
    for (int i = 0; i < kGradTrials; ++i) {
      const Vec w = gdvae::testing::sample_near(atlas, rng, 0.3);
      worst_proj = std::max(worst_proj, gdvae::testing::projection_fd_error(atlas, w));
      const std::size_t n = atlas.embed_dim();
      gdvae::diff::Tensor x({2, n});
      for (std::size_t r = 0; r < 2; ++r) {
        const Vec wr = gdvae::testing::sample_near(atlas, rng, 0.3);
        for (std::size_t c = 0; c < n; ++c) x[r * n + c] = wr(static_cast<Eigen::Index>(c));
      }
      worst_rows = std::max(worst_rows, gdvae::testing::op_gradient_error(
                                            [&atlas](gdvae::diff::Tape&, const std::vector<gdvae::diff::Var>& v) {
                                              return gdvae::manifold::project_rows(v[0], atlas);
                                            },
                                            {x}, rng));
    }
  }
  const double s = elapsed(start);
  const bool pass = worst_op < kGradTol && worst_proj < kGradTol && worst_rows < kGradTol && s < kBudget[1];
  return {pass, "ops worst " + sci(worst_op) + " (" + worst_name + "), projection Jacobian " + sci(worst_proj) +
                    ", project_rows " + sci(worst_rows) + ", tol " + sci(kGradTol) + budget_note(1, s)};
}

Outcome projection_properties(const Context&) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(107);
  double idem = 0.0, constraint = 0.0, tangency = 0.0, excess = -1e300;
  for (const auto& [name, atlas] : gdvae::testing::all_test_atlases()) {
    const auto& chart = atlas.chart(0);
    for (int i = 0; i < 100; ++i) {
      const Vec w = gdvae::testing::sample_near(atlas, rng, 0.3);
      const auto p = gdvae::manifold::project(w, atlas);
      idem = std::max(idem, (gdvae::manifold::project(p.z, atlas).z - p.z).norm());
      constraint = std::max(constraint, atlas.constraint_residual(p.z));
      const Mat t = chart.eval(p.u).jacobian;
      const Mat normal = Mat::Identity(t.rows(), t.rows()) - t * (t.transpose() * t).inverse() * t.transpose();
      tangency = std::max(tangency, (normal * p.jacobian).colwise().norm().maxCoeff());
    }
    const auto dense = gdvae::manifold::build_point_cloud(atlas, atlas.intrinsic_dim() == 1 ? 20000 : 300);
    for (int i = 0; i < 20; ++i) {
      const Vec w = gdvae::testing::sample_near(atlas, rng, 0.5);
      const double d = (gdvae::manifold::project(w, atlas).z - w).norm();
      const double dmin = (dense.points.colwise() - w).colwise().norm().minCoeff();
      excess = std::max(excess, d - dmin);
    }
  }
  const double s = elapsed(start);
  const bool pass = idem < kIdempotenceTol && constraint < kConstraintTol && tangency < kTangencyTol &&
                    excess <= kMinimalitySlack && s < kBudget[2];
  return {pass, "idempotence " + sci(idem) + ", constraint " + sci(constraint) + ", tangency " + sci(tangency) +
                    ", distance minus dense-cloud minimum " + sci(excess) + budget_note(2, s)};
}

Outcome solver_cross_validation(const Context&) {
  using namespace gdvae::pde;
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0, mean_drift = 0.0;
  for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const Field1D u0 = sample_ic(IcFamily::u1, {alpha}, 100);
    for (double t : {0.25, 0.5, 0.75, 1.0}) {
      const Field1D spectral = burgers_solve_spectral(u0, 0.02, t);
      const Field1D fd = gdvae::testing::burgers_fd_reference(IcFamily::u1, {alpha}, 0.02, t, 100, 8);
      worst = std::max(worst, gdvae::testing::l1_relative(spectral, fd));
      mean_drift = std::max(mean_drift, std::abs(spectral.mean() - u0.mean()));
    }
    const Field1D fd = burgers_solve_fd(u0, 0.02, 1.0, burgers_fd_stable_dt(u0, 0.02));
    mean_drift = std::max(mean_drift, std::abs(fd.mean() - u0.mean()));
  }

  Field2D fixed;
  fixed.u = Grid::Constant(16, 16, 1.0);
  fixed.v = Grid::Constant(16, 16, 3.0);
  double fixed_dev = 0.0;
  for (auto integ : {Integrator::explicit_euler, Integrator::semi_implicit}) {
    BrusselatorParams p;
    p.integrator = integ;
    const auto traj = brusselator_solve(fixed, p, 1.0, 1.0);
    fixed_dev = std::max({fixed_dev, (traj.snapshots.back().u - 1.0).abs().maxCoeff(),
                          (traj.snapshots.back().v - 3.0).abs().maxCoeff()});
  }

  BrusselatorParams p;
  const Field2D init = brusselator_ic(0.5, 64, 64);
  const auto ex = brusselator_solve(init, p, 1.0, 1.0);
  p.integrator = Integrator::semi_implicit;
  const auto si = brusselator_solve(init, p, 1.0, 1.0);
  const double integ = gdvae::testing::l1_relative(si.snapshots.back().flatten(), ex.snapshots.back().flatten());

  const double s = elapsed(start);
  const bool pass = worst < kSolverTol && mean_drift < kMeanTol && fixed_dev < kFixedPointTol && integ < kSolverTol &&
                    s < kBudget[3];
  return {pass, "spectral vs FD " + sci(worst) + ", mean drift " + sci(mean_drift) + ", fixed point deviation " +
                    sci(fixed_dev) + ", explicit vs semi-implicit " + sci(integ) + budget_note(3, s)};
}

Outcome cole_hopf_table(const Context&) {
  using namespace gdvae::pde;
  const auto start = std::chrono::steady_clock::now();
  const auto grid = uniform_param_grid(IcFamily::u1, 100);
  std::vector<double> err;
  for (std::size_t nf : {2, 4, 6}) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
      const Field1D u0 = sample_ic(IcFamily::u1, {grid(i, 0)}, 100);
      const Field1D truth = burgers_solve_spectral(u0, 0.02, 1.0);
      sum += gdvae::testing::l1_relative(gdvae::rom::cole_hopf_rom(u0, 0.02, 1.0, nf), truth);
    }
    err.push_back(sum / static_cast<double>(grid.rows()));
  }
  const double s = elapsed(start);
  const bool pass = err[2] < err[1] && err[1] < err[0] && err[2] <= kColeHopf6Tol && s < kBudget[4];
  return {pass, "t = 1.00 s: 2D " + sci(err[0]) + ", 4D " + sci(err[1]) + ", 6D " + sci(err[2]) + budget_note(4, s)};
}

Outcome burgers_u1(const Context& ctx) {
  const auto& e = experiment(ctx, "burgers_u1");
  const auto& row = model_row(e);
  double worst = 0.0;
  std::string errs;
  for (double h : {0.25, 0.5, 0.75, 1.0}) {
    const auto k = horizon_index(e, h);
    worst = std::max(worst, row.mean[k]);
    errs += (errs.empty() ? "" : ", ") + sci(row.mean[k]) + " +- " + sci(row.se[k]);
  }
  const bool pass = worst <= kU1Tol && e.cfg.trials >= 5 && e.seconds < kBudget[5];
  return {pass, std::to_string(e.cfg.trials) + " trials, errors at 0.25..1.00 s: " + errs + budget_note(5, e.seconds)};
}

Outcome gamma_ablation(const Context& ctx) {
  const auto& g0 = experiment(ctx, "burgers_u1_gamma0");
  const auto& g5 = experiment(ctx, "burgers_u1_gamma005");
  const double e0 = model_row(g0).mean[horizon_index(g0, 1.0)];
  const double e5 = model_row(g5).mean[horizon_index(g5, 1.0)];
  const double s = g0.seconds + g5.seconds;
  const bool pass = e0 >= kGammaRatio * e5 && s < kBudget[6];
  return {pass, "at 1.00 s: gamma 0 " + sci(e0) + ", gamma 0.05 " + sci(e5) + " (ratio " + sci(e0 / e5) + ")" +
                    budget_note(6, s)};
}

Outcome periodic_cylinder(const Context& ctx) {
  const auto& noproj = experiment(ctx, "periodic_ae_noproj");
  const auto& gproj = experiment(ctx, "periodic_ae_gproj");
  const auto& gd = experiment(ctx, "periodic_gdvae3");
  const double a = model_row(noproj).mean[horizon_index(noproj, 1.0)];
  const double b = model_row(gproj).mean[horizon_index(gproj, 1.0)];
  const double c = model_row(gd).mean[horizon_index(gd, 1.0)];
  const double s = noproj.seconds + gproj.seconds + gd.seconds;
  const bool pass = a >= kNoProjRatio * b && c <= kCylinderTol && s < kBudget[7];
  return {pass, "at 1.00 s: AE no projection " + sci(a) + ", AE g-projection " + sci(b) + " (ratio " + sci(a / b) +
                    "), GD-VAE(3) " + sci(c) + budget_note(7, s)};
}

Outcome doubly_periodic_torus(const Context& ctx) {
  const auto& vae = experiment(ctx, "torus_vae3");
  const auto& gd = experiment(ctx, "torus_gdvae5");
  const double a = model_row(vae).mean[horizon_index(vae, 0.0)];
  const double b = model_row(gd).mean[horizon_index(gd, 0.0)];
  const double s = vae.seconds + gd.seconds;
  const bool pass = a >= kTorusSplit && b <= kTorusSplit && s < kBudget[8];
  return {pass, "at 0.00 s: VAE-3D " + sci(a) + ", GD-VAE(5) " + sci(b) + budget_note(8, s)};
}

Outcome brusselator(const Context& ctx) {
  const auto& gd = experiment(ctx, "brusselator_gdvae");
  const auto& ae = experiment(ctx, "brusselator_ae_noproj");
  const auto& g = model_row(gd);
  const double g0 = g.mean[horizon_index(gd, 0.0)], g8 = g.mean[horizon_index(gd, 8.0)];
  const auto& a = model_row(ae);
  const double a0 = a.mean[horizon_index(ae, 0.0)];
  double a_late = 0.0;
  for (std::size_t k = 0; k < ae.table.horizons.size(); ++k) {
    if (ae.table.horizons[k] >= 4.0 - 1e-9) a_late = std::max(a_late, a.mean[k]);
  }
  const double s = gd.seconds + ae.seconds;
  const bool pass = g8 <= kBrusselatorStable * g0 && a_late >= kBrusselatorDegrade * a0 && s < kBudget[9];
  return {pass, "GD-VAE 0.00 s " + sci(g0) + ", 8.00 s " + sci(g8) + " (ratio " + sci(g8 / g0) +
                    "); AE no projection 0.00 s " + sci(a0) + ", worst at >= 4 s " + sci(a_late) + " (ratio " +
                    sci(a_late / a0) + ")" + budget_note(9, s)};
}

Outcome informative_dims(const Context& ctx) {
  const auto& e = experiment(ctx, "periodic_vae10");
  const auto train = gdvae::pde::load_dataset(e.out / "data" / "train");
  const RowMatrix grid = periodic_grid_states(e.cfg);
  const auto models = trial_models(e);
  bool pass = true;
  std::string detail;
  for (std::size_t t = 0; t < models.size(); ++t) {
    const auto rows = std::min<Eigen::Index>(train.inputs.rows(), static_cast<Eigen::Index>(e.cfg.analysis.variance_batch));
    const auto stats = gdvae::analysis::variance_stats(models[t], train.inputs.topRows(rows));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(stats.q_vom.size()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return stats.q_vom(i) > stats.q_vom(j); });
    const Eigen::VectorXd ratio = stats.q_vom.cwiseQuotient(stats.q_mov);
    std::vector<double> rest;
    for (std::size_t i = 2; i < order.size(); ++i) rest.push_back(ratio(order[i]));
    std::sort(rest.begin(), rest.end());
    const std::size_t mid = rest.size() / 2;
    const double median = rest.size() % 2 ? rest[mid] : 0.5 * (rest[mid - 1] + rest[mid]);
    const double r1 = ratio(order[0]), r2 = ratio(order[1]);

    const RowMatrix codes = models[t].encode_codes(grid);
    RowMatrix pair(codes.rows(), 2);
    pair.col(0) = codes.col(order[0]);
    pair.col(1) = codes.col(order[1]);
    const double cont = gdvae::analysis::continuity_score(pair);

    pass = pass && r1 >= kInformativeRatio * median && r2 >= kInformativeRatio * median && cont < kLoopContinuity;
    detail += (t ? "; " : "") + std::string("trial ") + std::to_string(t) + ": dims " + std::to_string(order[0] + 1) +
              "," + std::to_string(order[1] + 1) + " ratios " + sci(r1) + ", " + sci(r2) + " vs median " + sci(median) +
              ", loop continuity " + sci(cont);
  }
  pass = pass && e.seconds < kBudget[10];
  return {pass, detail + budget_note(10, e.seconds)};
}

Outcome euclidean_continuity(const Context& ctx) {
  const auto& eu = experiment(ctx, "periodic_euclid2");
  const auto& cy = experiment(ctx, "periodic_gdvae3");
  const RowMatrix grid = periodic_grid_states(cy.cfg);
  auto mean_score = [&](const Experiment& e) {
    double s = 0.0;
    const auto models = trial_models(e);
    for (const auto& m : models) s += gdvae::analysis::continuity_score(m, grid);
    return s / static_cast<double>(models.size());
  };
  const double a = mean_score(eu), b = mean_score(cy);
  const double s = eu.seconds + cy.seconds;
  const bool pass = a >= kEuclidRatio * b && s < kBudget[11];
  return {pass, "continuity 2D Euclidean " + sci(a) + ", cylinder " + sci(b) + " (ratio " + sci(a / b) + ")" +
                    budget_note(11, s)};
}

Outcome baseline_oracles(const Context&) {
  using gdvae::rom::Mat;
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(109);
  std::normal_distribution<double> n01(0.0, 1.0);
  auto random_matrix = [&](Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
    return m;
  };
  auto sorted_eigs = [](const Eigen::VectorXcd& ev) {
    std::vector<std::complex<double>> v(ev.data(), ev.data() + ev.size());
    std::sort(v.begin(), v.end(), [](auto a, auto b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
    return v;
  };

  double dmd_err = 0.0;
  {
    Mat a = Mat::Zero(2, 2);
    a.diagonal() << 0.9, 0.5;
    Mat traj(2, 30);
    traj.col(0) << 1.0, 1.0;
    for (int k = 1; k < 30; ++k) traj.col(k) = a * traj.col(k - 1);
    const auto ev = sorted_eigs(gdvae::rom::dmd(traj.leftCols(29), traj.rightCols(29), 2, false).eigenvalues);
    dmd_err = std::max({dmd_err, std::abs(ev[0] - 0.5), std::abs(ev[1] - 0.9)});
  }
  for (int trial = 0; trial < 10; ++trial) {
    Mat a = random_matrix(4, 4);
    a /= 1.2 * Eigen::EigenSolver<Mat>(a).eigenvalues().cwiseAbs().maxCoeff();
    const Mat x = random_matrix(4, 12);
    const Mat y = a * x;
    const auto got = sorted_eigs(gdvae::rom::dmd(x, y, 4, false).eigenvalues);
    const auto want = sorted_eigs(Eigen::EigenSolver<Mat>(a).eigenvalues());
    for (std::size_t i = 0; i < want.size(); ++i) dmd_err = std::max(dmd_err, std::abs(got[i] - want[i]));
  }

  double pod_err = 0.0;
  {
    const Eigen::Index n = 20, m = 30;
    Mat v0(m, 11);
    v0.col(0).setOnes();
    v0.rightCols(10) = random_matrix(m, 10);
    const Mat v = Eigen::HouseholderQR<Mat>(v0).householderQ() * Mat::Identity(m, 11);
    const Mat u = Eigen::HouseholderQR<Mat>(random_matrix(n, 10)).householderQ() * Mat::Identity(n, 10);
    Eigen::VectorXd s(10);
    for (int i = 0; i < 10; ++i) s(i) = 5.0 * std::pow(0.6, i);
    // rows of V orthogonal to the ones vector, so centering leaves X unchanged
    const Mat x = u * s.asDiagonal() * v.rightCols(10).transpose();
    for (std::size_t r = 1; r < 10; ++r) {
      const double expected = s.tail(10 - static_cast<Eigen::Index>(r)).squaredNorm();
      pod_err = std::max(pod_err, std::abs(gdvae::rom::reconstruction_error(gdvae::rom::pod(x, r), x) - expected) / expected);
    }
  }
  const double secs = elapsed(start);
  const bool pass = dmd_err < kOracleTol && pod_err < kOracleTol && secs < kBudget[12];
  return {pass, "DMD eigenvalue error " + sci(dmd_err) + ", POD Eckart-Young relative gap " + sci(pod_err) +
                    budget_note(12, secs)};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome(const Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  Context ctx;
  std::string configs = GDVAE_CONFIG_DIR, work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--configs", configs, "directory holding the run configs");
  app.add_option("--work", work, "directory for training runs");
  app.add_flag("--reuse", ctx.reuse, "evaluate existing runs whose manifest matches instead of retraining");
  app.add_option("--only", only, "criterion numbers to run (default: all)");
  app.add_option("--threads", ctx.threads, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  ctx.configs = configs;
  ctx.work = work;

  const std::vector<Criterion> criteria = {
      {1, "gradient suite", gradient_suite},
      {2, "projection properties", projection_properties},
      {3, "solver cross-validation", solver_cross_validation},
      {4, "Cole-Hopf ROM ordering", cole_hopf_table},
      {5, "GD-VAE Burgers U1", burgers_u1},
      {6, "gamma ablation", gamma_ablation},
      {7, "periodic cylinder", periodic_cylinder},
      {8, "doubly periodic torus", doubly_periodic_torus},
      {9, "Brusselator stability", brusselator},
      {10, "10D VAE informative dimensions", informative_dims},
      {11, "Euclidean vs cylinder continuity", euclidean_continuity},
      {12, "baseline oracles", baseline_oracles},
  };
  const std::set<int> selected(only.begin(), only.end());
  int run = 0, passed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    ++run;
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    passed += o.pass ? 1 : 0;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  #" << c.id << " " << c.title << ": " << o.detail << std::endl;
  }
  std::cout << passed << "/" << run << " criteria passed" << std::endl;
  return passed == run ? 0 : 1;
}
