#include <doctest.h>

#include "../support/pde_oracles.hpp"
#include "gdvae/errors.hpp"
#include "gdvae/manifold/projection.hpp"
#include "gdvae/pde/datasets.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <set>
#include <sstream>

using namespace gdvae;
using namespace gdvae::pde;
using gdvae::testing::l1_relative;

namespace {
constexpr double kPi = std::numbers::pi;

Field1D sine(std::size_t n, double amp = 1.0) {
  return (amp * (2.0 * kPi * grid_points(n).array()).sin()).matrix();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("gdvae_test_pde_" + name);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}
}  // namespace

TEST_CASE("Cole-Hopf transform") {
  CHECK((cole_hopf_forward(Field1D::Zero(64), 0.02).array() - 1.0).abs().maxCoeff() < 1e-15);

  const double nu = 0.02;
  const Field1D u = sine(100);
  const Field1D phi = cole_hopf_forward(u, nu);
  CHECK((cole_hopf_inverse(phi, nu) - u).cwiseAbs().maxCoeff() < 1e-8);

  // exp(-(1/2nu) int_0^x sin(2 pi s) ds) by Simpson quadrature.
  const Field1D x = grid_points(100);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < 100; ++k) {
    const double integral = gdvae::testing::simpson([](double s) { return std::sin(2 * kPi * s); }, x(k));
    worst = std::max(worst, std::abs(phi(k) - std::exp(-integral / (2 * nu))));
  }
  CHECK(worst < 1e-8);

  CHECK_THROWS_AS(cole_hopf_forward((u.array() + 0.1).matrix(), nu), SolverError);
}

TEST_CASE("spectral Burgers: trivial and linearized regimes") {
  CHECK(burgers_solve_spectral(Field1D::Zero(100), 0.02, 0.5).cwiseAbs().maxCoeff() < 1e-15);

  const Field1D u0 = sine(100, 1e-3);
  const Field1D u = burgers_solve_spectral(u0, 0.02, 0.25);
  const double decay = std::exp(-4 * kPi * kPi * 0.02 * 0.25);
  CHECK(decay == doctest::Approx(0.8209).epsilon(1e-4));
  CHECK((u - decay * u0).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("spectral Burgers agrees with the refined FD oracle on U1") {
  for (double alpha : {0.0, 0.5, 1.0}) {
    for (double t : {0.25, 1.0}) {
      CAPTURE(alpha);
      CAPTURE(t);
      const Field1D spectral = burgers_solve_spectral(sample_ic(IcFamily::u1, {alpha}, 100), 0.02, t);
      const Field1D fd = gdvae::testing::burgers_fd_reference(IcFamily::u1, {alpha}, 0.02, t, 100, 8);
      CHECK(l1_relative(spectral, fd) < 1e-3);
    }
  }
}

TEST_CASE("Burgers mean conservation") {
  const Field1D u0 = sample_ic(IcFamily::u1, {0.3}, 100);
  const Field1D fd = burgers_solve_fd(u0, 0.02, 1.0, burgers_fd_stable_dt(u0, 0.02));
  CHECK(std::abs(fd.mean() - u0.mean()) < 1e-10);
  const Field1D sp = burgers_solve_spectral(u0, 0.02, 1.0);
  CHECK(std::abs(sp.mean() - u0.mean()) < 1e-10);
  CHECK(burgers_solve_fd(Field1D::Zero(50), 0.02, 0.5, 1e-3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("FD Burgers converges under grid refinement") {
  const std::vector<double> alpha{0.5};
  const Field1D reference = burgers_solve_spectral(sample_ic(IcFamily::u1, alpha, 100), 0.02, 0.5);
  std::vector<double> errors;
  for (std::size_t refine : {1, 2, 4}) {
    errors.push_back(l1_relative(gdvae::testing::burgers_fd_reference(IcFamily::u1, alpha, 0.02, 0.5, 100, refine),
                                 reference));
  }
  CHECK(errors[0] / errors[1] > 2.0);
  CHECK(errors[1] / errors[2] > 2.0);
}

TEST_CASE("FD Burgers detects blow-up") {
  const Field1D u0 = sine(100);
  CHECK_THROWS_AS(burgers_solve_fd(u0, 0.02, 0.5, 0.05), SolverError);
}

TEST_CASE("initial-condition families") {
  const std::size_t n = 100;
  const Field1D x = grid_points(n);
  CHECK((sample_ic(IcFamily::u1, {1.0}, n) - sine(n)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((sample_ic(IcFamily::periodic, {0.0}, n).array() - (2 * kPi * x.array()).cos()).abs().maxCoeff() < 1e-15);
  const double alpha = 0.37;
  CHECK((sample_ic(IcFamily::periodic, {alpha}, n).array() - (2 * kPi * (x.array() - alpha)).cos()).abs().maxCoeff() <
        1e-14);
  const Field1D d = sample_ic(IcFamily::doubly_periodic, {0.0, 0.0}, n);
  CHECK((d.array() - (2 * kPi * x.array()).cos() - (4 * kPi * x.array()).cos()).abs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(sample_ic(IcFamily::u1, {1.5}, n), ConfigError);
  CHECK_THROWS_AS(sample_ic(IcFamily::doubly_periodic, {0.0}, n), ConfigError);
}

TEST_CASE("Burgers dataset composition, noise and determinism") {
  BurgersDatasetSpec spec;
  spec.samples = 5;
  spec.seed = 9;
  const auto set = make_burgers_dataset(spec);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const Field1D u0 = sample_ic(IcFamily::u1, {set.params(ii, 0)}, 100);
    CHECK((set.inputs.row(ii).transpose() - burgers_solve_spectral(u0, 0.02, set.times(ii))).norm() < 1e-12);
    CHECK((set.targets.row(ii).transpose() - burgers_solve_spectral(u0, 0.02, set.times(ii) + 0.25)).norm() < 1e-12);
    CHECK(set.times(ii) <= 0.75);
  }

  BurgersDatasetSpec noisy = spec;
  noisy.family = IcFamily::periodic;
  noisy.samples = 10000;
  noisy.noise = 0.02;
  BurgersDatasetSpec clean = noisy;
  clean.noise = 0.0;
  const auto a = make_burgers_dataset(noisy), b = make_burgers_dataset(clean);
  const RowMatrix diff = a.inputs - b.inputs;
  const double sd = std::sqrt(diff.array().square().mean());
  CHECK(sd == doctest::Approx(0.02).epsilon(0.05));
  CHECK((a.targets - b.targets).cwiseAbs().maxCoeff() > 0.0);

  noisy.noise_targets = false;
  CHECK((make_burgers_dataset(noisy).targets - b.targets).cwiseAbs().maxCoeff() == 0.0);

  const auto dir = scratch("determinism");
  spec.samples = 50;
  save_dataset(dir / "one", make_burgers_dataset(spec));
  save_dataset(dir / "two", make_burgers_dataset(spec));
  CHECK(slurp(dir / "one.bin") == slurp(dir / "two.bin"));
  auto manifest = [&](const char* name) {
    auto j = nlohmann::json::parse(slurp(dir / name));
    j.erase("payload");
    return j;
  };
  CHECK(manifest("one.json") == manifest("two.json"));
}

TEST_CASE("dataset persistence round trip") {
  BurgersDatasetSpec spec;
  spec.samples = 7;
  spec.family = IcFamily::doubly_periodic;
  spec.noise = 0.01;
  const auto set = make_burgers_dataset(spec);
  const auto dir = scratch("roundtrip");
  save_dataset(dir / "d", set);
  const auto back = load_dataset(dir / "d");
  CHECK(back.family == set.family);
  CHECK(back.inputs == set.inputs);
  CHECK(back.targets == set.targets);
  CHECK(back.params == set.params);
  CHECK(back.times == set.times);
  CHECK(back.noise_seeds == set.noise_seeds);
  CHECK(back.generator == set.generator);

  const auto traj = make_burgers_trajectories(IcFamily::periodic, uniform_param_grid(IcFamily::periodic, 4),
                                              {0.0, 0.25, 0.5}, 0.02, 100);
  save_trajectories(dir / "t", traj);
  const auto tb = load_trajectories(dir / "t");
  REQUIRE(tb.size() == 4);
  CHECK(tb.times == traj.times);
  CHECK(tb.states[3] == traj.states[3]);
  CHECK(tb.params == traj.params);

  std::ostringstream csv;
  write_snapshot_csv(csv, set, 2);
  CHECK(csv.str().rfind("index,input,target\n", 0) == 0);

  CHECK_THROWS_AS(load_dataset(dir / "absent"), MissingArtifactError);
  std::ofstream(dir / "bad.json") << "{not json";
  CHECK_THROWS_AS(load_dataset(dir / "bad"), MissingArtifactError);
}

TEST_CASE("uniform parameter grids") {
  const auto u1 = uniform_param_grid(IcFamily::u1, 100);
  CHECK(u1.rows() == 100);
  CHECK(u1(0, 0) == 0.0);
  CHECK(u1(99, 0) == 1.0);
  const auto per = uniform_param_grid(IcFamily::periodic, 100);
  CHECK(per(99, 0) == doctest::Approx(0.99));
  const auto dbl = uniform_param_grid(IcFamily::doubly_periodic, 100);
  CHECK(dbl.rows() == 100);
  CHECK(dbl.cols() == 2);
}

TEST_CASE("Brusselator homogeneous fixed point is stationary") {
  Field2D f;
  f.u = Grid::Constant(16, 16, 1.0);
  f.v = Grid::Constant(16, 16, 3.0);
  BrusselatorParams p;
  const auto traj = brusselator_solve(f, p, 2.0, 1.0);
  REQUIRE(traj.snapshots.size() == 3);
  CHECK((traj.snapshots.back().u - 1.0).abs().maxCoeff() == 0.0);
  CHECK((traj.snapshots.back().v - 3.0).abs().maxCoeff() == 0.0);

  p.integrator = Integrator::semi_implicit;
  const auto semi = brusselator_solve(f, p, 1.0, 1.0);
  CHECK((semi.snapshots.back().u - 1.0).abs().maxCoeff() < 1e-12);
  CHECK((semi.snapshots.back().v - 3.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("Brusselator single cell matches an RK4 ODE integration") {
  Field2D f;
  f.u = Grid::Constant(1, 1, 0.5);
  f.v = Grid::Constant(1, 1, 2.0);
  BrusselatorParams p;
  p.d1 = p.d2 = 0.0;
  p.dt = 1e-5;
  const auto traj = brusselator_solve(f, p, 10.0, 1.0);
  const auto ref = gdvae::testing::brusselator_ode_rk4(0.5, 2.0, 1.0, 3.0, 10.0, 1e-3);
  CHECK(std::abs(traj.snapshots.back().u(0, 0) - ref[0]) < 1e-4);
  CHECK(std::abs(traj.snapshots.back().v(0, 0) - ref[1]) < 1e-4);
}

TEST_CASE("Brusselator explicit and semi-implicit integrators agree") {
  BrusselatorParams p;
  const Field2D init = brusselator_ic(0.5, 64, 64);
  const auto ex = brusselator_solve(init, p, 1.0, 1.0);
  p.integrator = Integrator::semi_implicit;
  const auto si = brusselator_solve(init, p, 1.0, 1.0);
  CHECK(l1_relative(si.snapshots.back().flatten(), ex.snapshots.back().flatten()) < 1e-3);
}

TEST_CASE("Brusselator initial conditions and parameters") {
  const auto one = brusselator_ic(1.0, 64, 32);
  const auto zero = brusselator_ic(0.0, 64, 32);
  const auto half = brusselator_ic(0.5, 64, 32);
  for (Eigen::Index j = 0; j < 64; ++j) {
    const double s = 2 * kPi * static_cast<double>(j) / 64;
    CHECK(one.u(5, j) == doctest::Approx(std::sin(s)).epsilon(1e-15));
    CHECK(zero.u(7, j) == doctest::Approx(std::pow(std::cos(s), 3)).epsilon(1e-15));
  }
  CHECK((half.u - 0.5 * (one.u + zero.u)).abs().maxCoeff() < 1e-15);
  CHECK((half.v - 0.5 * (one.v + zero.v)).abs().maxCoeff() < 1e-15);
  CHECK((one.u.row(0) - one.u.row(31)).abs().maxCoeff() == 0.0);

  const Field2D back = Field2D::unflatten(half.flatten(), 32, 64);
  CHECK((back.u - half.u).abs().maxCoeff() == 0.0);
  CHECK((back.v - half.v).abs().maxCoeff() == 0.0);

  BrusselatorParams bad;
  bad.dt = 0.3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(brusselator_ic(1.5, 8, 8), ConfigError);
}

TEST_CASE("Brusselator pairs from trajectories") {
  BrusselatorDatasetSpec spec;
  spec.nx = spec.ny = 8;
  spec.alphas = {0.0, 1.0};
  spec.t_start = 1.0;
  spec.t_end = 3.0;
  spec.stride = 0.5;
  spec.tau = 1.0;
  const auto traj = make_brusselator_trajectories(spec);
  REQUIRE(traj.times.size() == 5);
  CHECK(traj.times.front() == doctest::Approx(1.0));
  const auto pairs = pairs_from_trajectories(traj, spec.tau, 0.0, 1);
  CHECK(pairs.size() == 2 * 3);
  CHECK(pairs.inputs.row(1) == traj.states[0].row(1));
  CHECK(pairs.targets.row(1) == traj.states[0].row(3));
  CHECK(pairs.sample_shape == std::vector<std::size_t>{2, 8, 8});
  CHECK_THROWS_AS(pairs_from_trajectories(traj, 0.7, 0.0, 1), ConfigError);

  spec.alphas = {0.0, 0.3, 0.6, 1.0, 0.5};
  const auto one = make_brusselator_trajectories(spec, 1);
  const auto many = make_brusselator_trajectories(spec, 3);
  REQUIRE(many.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(one.states[i] == many.states[i]);
  CHECK(one.params == many.params);
}

TEST_CASE("arm dataset") {
  const RowMatrix x = make_arm_dataset(10000, 1.0, 0.5, 4);
  std::set<int> bins;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double r1 = std::hypot(x(i, 0), x(i, 1));
    const double r2 = std::hypot(x(i, 2) - x(i, 0), x(i, 3) - x(i, 1));
    worst = std::max({worst, std::abs(r1 - 1.0), std::abs(r2 - 0.5)});
    const double t1 = std::atan2(x(i, 1), x(i, 0)) + kPi, t2 = std::atan2(x(i, 3) - x(i, 1), x(i, 2) - x(i, 0)) + kPi;
    bins.insert(static_cast<int>(t1 / (kPi / 18)) * 100 + static_cast<int>(t2 / (kPi / 18)));
  }
  CHECK(worst < 1e-12);
  CHECK(bins.size() == 36 * 36);
}

TEST_CASE("Klein dataset") {
  const RowMatrix clean = make_klein_dataset(500, 2.0, 1.0, 0.0, 5);
  const auto atlas = manifold::ManifoldAtlas::klein4d(2.0, 1.0);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < clean.rows(); ++i) {
    worst = std::max(worst, atlas.constraint_residual(clean.row(i).transpose()));
  }
  CHECK(worst < 1e-9);

  // Noise normal to a 2D surface in R^4 has 2 normal components: E|n| = sigma sqrt(pi/2).
  const double sigma = 0.05;
  const RowMatrix noisy = make_klein_dataset(2000, 2.0, 1.0, sigma, 6);
  double mean = 0.0;
  for (Eigen::Index i = 0; i < noisy.rows(); ++i) {
    const manifold::Vec w = noisy.row(i).transpose();
    mean += (manifold::project_chart(w, atlas).z - w).norm();
  }
  mean /= static_cast<double>(noisy.rows());
  CHECK(mean == doctest::Approx(sigma * std::sqrt(kPi / 2)).epsilon(0.2));
}
