#include "gdvae/pde/datasets.hpp"

#include "gdvae/errors.hpp"
#include "gdvae/manifold/chart.hpp"
#include "gdvae/seed.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <thread>

namespace gdvae::pde {

static_assert(std::endian::native == std::endian::little, "dataset files are written in host order");

namespace {

constexpr double kPi = std::numbers::pi;
constexpr char kPairMagic[8] = {'G', 'D', 'V', 'A', 'E', 'D', 'S', '1'};
constexpr char kTrajMagic[8] = {'G', 'D', 'V', 'A', 'E', 'T', 'R', '1'};
constexpr std::uint64_t kVersion = 1;

void add_noise(Eigen::Ref<Eigen::VectorXd> row, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return;
  std::normal_distribution<double> n(0.0, sigma);
  for (Eigen::Index i = 0; i < row.size(); ++i) row(i) += n(rng);
}

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw MissingArtifactError("dataset payload truncated");
  return v;
}

void put_doubles(std::ostream& os, const double* p, std::size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void get_doubles(std::istream& is, double* p, std::size_t n) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw MissingArtifactError("dataset payload truncated");
}

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  std::filesystem::path p = stem;
  p += ext;
  return p;
}

nlohmann::json read_manifest(const std::filesystem::path& stem) {
  std::ifstream is(with_ext(stem, ".json"));
  if (!is) throw MissingArtifactError("missing dataset manifest " + with_ext(stem, ".json").string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw MissingArtifactError("corrupt dataset manifest " + with_ext(stem, ".json").string() + ": " + e.what());
  }
}

std::ifstream open_payload(const std::filesystem::path& stem, const char (&magic)[8]) {
  std::ifstream is(with_ext(stem, ".bin"), std::ios::binary);
  if (!is) throw MissingArtifactError("missing dataset payload " + with_ext(stem, ".bin").string());
  char m[8];
  is.read(m, 8);
  if (!is || std::memcmp(m, magic, 8) != 0) throw MissingArtifactError("bad magic in " + with_ext(stem, ".bin").string());
  if (get<std::uint64_t>(is) != kVersion) throw MissingArtifactError("unsupported dataset version");
  return is;
}

}  // namespace

SnapshotPairSet make_burgers_dataset(const BurgersDatasetSpec& spec) {
  if (spec.samples < 1) throw ConfigError("dataset.samples", "need at least one sample");
  if (!(spec.t_max >= spec.t_min && spec.t_min >= 0.0)) throw ConfigError("dataset.t_range", "need 0 <= t_min <= t_max");
  const std::size_t p = ic_param_count(spec.family);
  const double hi = spec.family == IcFamily::doubly_periodic ? 2.0 * kPi : 1.0;

  SnapshotPairSet set;
  set.family = std::string("burgers/") + to_string(spec.family);
  set.sample_shape = {spec.n};
  set.inputs.resize(static_cast<Eigen::Index>(spec.samples), static_cast<Eigen::Index>(spec.n));
  set.targets.resizeLike(set.inputs);
  set.params.resize(static_cast<Eigen::Index>(spec.samples), static_cast<Eigen::Index>(p));
  set.times.resize(static_cast<Eigen::Index>(spec.samples));
  set.tau = spec.tau;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> param(0.0, hi), time(spec.t_min, spec.t_max);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    std::vector<double> a(p);
    for (auto& v : a) v = param(rng);
    const double t = time(rng);
    const SpectralBurgers solver(sample_ic(spec.family, a, spec.n), spec.nu, spec.modes);
    set.inputs.row(ii) = solver.evaluate(t, spec.n).transpose();
    set.targets.row(ii) = solver.evaluate(t + spec.tau, spec.n).transpose();
    for (std::size_t k = 0; k < p; ++k) set.params(ii, static_cast<Eigen::Index>(k)) = a[k];
    set.times(ii) = t;

    const std::uint64_t ns = derive_seed(spec.seed, i);
    set.noise_seeds.push_back(ns);
    std::mt19937_64 noise(ns);
    Eigen::VectorXd row = set.inputs.row(ii).transpose();
    add_noise(row, spec.noise, noise);
    set.inputs.row(ii) = row.transpose();
    if (spec.noise_targets) {
      row = set.targets.row(ii).transpose();
      add_noise(row, spec.noise, noise);
      set.targets.row(ii) = row.transpose();
    }
  }
  set.generator = {{"kind", "burgers"},          {"family", to_string(spec.family)}, {"samples", spec.samples},
                   {"tau", spec.tau},            {"t_min", spec.t_min},              {"t_max", spec.t_max},
                   {"noise", spec.noise},        {"noise_targets", spec.noise_targets}, {"nu", spec.nu},
                   {"n", spec.n},                {"modes", spec.modes},              {"seed", spec.seed},
                   {"solver", "cole-hopf-spectral"}};
  return set;
}

RowMatrix uniform_param_grid(IcFamily family, std::size_t count) {
  if (count < 1) throw ConfigError("eval.grid", "need at least one grid point");
  if (family == IcFamily::doubly_periodic) {
    const auto g = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(count))));
    RowMatrix out(static_cast<Eigen::Index>(g * g), 2);
    for (std::size_t i = 0; i < g; ++i) {
      for (std::size_t j = 0; j < g; ++j) {
        out(static_cast<Eigen::Index>(i * g + j), 0) = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(g);
        out(static_cast<Eigen::Index>(i * g + j), 1) = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(g);
      }
    }
    return out;
  }
  RowMatrix out(static_cast<Eigen::Index>(count), 1);
  for (std::size_t i = 0; i < count; ++i) {
    // The periodic family identifies alpha = 0 and 1, so its grid omits the endpoint.
    const double denom = family == IcFamily::periodic ? static_cast<double>(count)
                                                      : static_cast<double>(std::max<std::size_t>(count - 1, 1));
    out(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i) / denom;
  }
  return out;
}

TrajectorySet make_burgers_trajectories(IcFamily family, const RowMatrix& params, const std::vector<double>& times,
                                        double nu, std::size_t n, std::size_t modes) {
  TrajectorySet set;
  set.family = std::string("burgers/") + to_string(family);
  set.sample_shape = {n};
  set.params = params;
  set.times = times;
  for (Eigen::Index i = 0; i < params.rows(); ++i) {
    std::vector<double> a(params.row(i).data(), params.row(i).data() + params.cols());
    const SpectralBurgers solver(sample_ic(family, a, n), nu, modes);
    RowMatrix states(static_cast<Eigen::Index>(times.size()), static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < times.size(); ++k) states.row(static_cast<Eigen::Index>(k)) = solver.evaluate(times[k], n).transpose();
    set.states.push_back(std::move(states));
  }
  set.generator = {{"kind", "burgers"}, {"family", to_string(family)}, {"nu", nu}, {"n", n}, {"modes", modes},
                   {"solver", "cole-hopf-spectral"}};
  return set;
}

TrajectorySet make_brusselator_trajectories(const BrusselatorDatasetSpec& spec, std::size_t threads) {
  spec.params.validate();
  TrajectorySet set;
  set.family = "brusselator";
  set.sample_shape = {2, spec.ny, spec.nx};
  const std::size_t count = spec.alphas.size();
  set.params.resize(static_cast<Eigen::Index>(count), 1);
  set.states.resize(count);
  std::vector<std::vector<double>> times(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        const auto traj = brusselator_solve(brusselator_ic(spec.alphas[i], spec.nx, spec.ny), spec.params, spec.t_end,
                                            spec.stride, spec.t_start);
        RowMatrix states(static_cast<Eigen::Index>(traj.snapshots.size()), static_cast<Eigen::Index>(2 * spec.nx * spec.ny));
        for (std::size_t k = 0; k < traj.snapshots.size(); ++k)
          states.row(static_cast<Eigen::Index>(k)) = traj.snapshots[k].flatten().transpose();
        set.states[i] = std::move(states);
        times[i] = traj.times;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  for (std::size_t i = 0; i < count; ++i) set.params(static_cast<Eigen::Index>(i), 0) = spec.alphas[i];
  if (count > 0) set.times = times[0];
  set.generator = {{"kind", "brusselator"},
                   {"D1", spec.params.d1},
                   {"D2", spec.params.d2},
                   {"a", spec.params.a},
                   {"b", spec.params.b},
                   {"dt", spec.params.dt},
                   {"dx", spec.params.dx},
                   {"integrator", to_string(spec.params.integrator)},
                   {"nx", spec.nx},
                   {"ny", spec.ny},
                   {"alphas", spec.alphas},
                   {"t_start", spec.t_start},
                   {"t_end", spec.t_end},
                   {"stride", spec.stride}};
  return set;
}

SnapshotPairSet pairs_from_trajectories(const TrajectorySet& traj, double tau, double noise, std::uint64_t seed) {
  if (traj.times.size() < 2) throw ConfigError("dataset.stride", "need at least two snapshots per trajectory");
  const double spacing = traj.times[1] - traj.times[0];
  const auto lag = static_cast<std::size_t>(std::llround(tau / spacing));
  if (lag < 1 || std::abs(static_cast<double>(lag) * spacing - tau) > 1e-9 * std::max(1.0, tau)) {
    throw ConfigError("dataset.tau", "tau must be a positive multiple of the snapshot spacing");
  }
  if (lag >= traj.times.size()) throw ConfigError("dataset.tau", "tau exceeds the recorded time span");
  const std::size_t per = traj.times.size() - lag;
  const std::size_t count = per * traj.size();
  const auto dim = traj.states.empty() ? 0 : traj.states[0].cols();

  SnapshotPairSet set;
  set.family = traj.family;
  set.sample_shape = traj.sample_shape;
  set.inputs.resize(static_cast<Eigen::Index>(count), dim);
  set.targets.resizeLike(set.inputs);
  set.params.resize(static_cast<Eigen::Index>(count), traj.params.cols());
  set.times.resize(static_cast<Eigen::Index>(count));
  set.tau = tau;
  std::size_t r = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    for (std::size_t k = 0; k < per; ++k, ++r) {
      const auto rr = static_cast<Eigen::Index>(r);
      set.inputs.row(rr) = traj.states[i].row(static_cast<Eigen::Index>(k));
      set.targets.row(rr) = traj.states[i].row(static_cast<Eigen::Index>(k + lag));
      set.params.row(rr) = traj.params.row(static_cast<Eigen::Index>(i));
      set.times(rr) = traj.times[k];
      const std::uint64_t ns = derive_seed(seed, r);
      set.noise_seeds.push_back(ns);
      if (noise > 0.0) {
        std::mt19937_64 rng(ns);
        Eigen::VectorXd row = set.inputs.row(rr).transpose();
        add_noise(row, noise, rng);
        set.inputs.row(rr) = row.transpose();
        row = set.targets.row(rr).transpose();
        add_noise(row, noise, rng);
        set.targets.row(rr) = row.transpose();
      }
    }
  }
  set.generator = traj.generator;
  set.generator["tau"] = tau;
  set.generator["noise"] = noise;
  set.generator["seed"] = seed;
  return set;
}

RowMatrix make_arm_dataset(std::size_t n, double l1, double l2, std::uint64_t seed) {
  if (!(l1 > 0.0 && l2 > 0.0)) throw ConfigError("arm.lengths", "segment lengths must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Jittered strata on a g x g grid of angle cells, the remainder i.i.d.; each
  // angle stays marginally uniform while every cell is guaranteed a sample.
  const auto g = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  std::vector<std::array<double, 2>> angles(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool strat = i < g * g;
    const double c1 = strat ? static_cast<double>(i / g) : 0.0, c2 = strat ? static_cast<double>(i % g) : 0.0;
    const double w = strat ? 1.0 / static_cast<double>(g) : 1.0;
    angles[i] = {2.0 * kPi * w * (c1 + unit(rng)), 2.0 * kPi * w * (c2 + unit(rng))};
  }
  std::shuffle(angles.begin(), angles.end(), rng);
  RowMatrix out(static_cast<Eigen::Index>(n), 4);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out(ii, 0) = l1 * std::cos(angles[i][0]);
    out(ii, 1) = l1 * std::sin(angles[i][0]);
    out(ii, 2) = out(ii, 0) + l2 * std::cos(angles[i][1]);
    out(ii, 3) = out(ii, 1) + l2 * std::sin(angles[i][1]);
  }
  return out;
}

RowMatrix make_klein_dataset(std::size_t n, double a, double b, double noise, std::uint64_t seed) {
  if (!(a > b && b > 0.0)) throw ConfigError("klein.constants", "need a > b > 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
  std::normal_distribution<double> eps(0.0, 1.0);
  RowMatrix out(static_cast<Eigen::Index>(n), 4);
  for (std::size_t i = 0; i < n; ++i) {
    const double u1 = ang(rng), u2 = ang(rng);
    Eigen::Vector4d z = manifold::klein_bottle_chart(u1, u2, a, b).sigma;
    if (noise > 0.0) {
      for (int k = 0; k < 4; ++k) z(k) += noise * eps(rng);
    }
    out.row(static_cast<Eigen::Index>(i)) = z.transpose();
  }
  return out;
}

void save_dataset(const std::filesystem::path& stem, const SnapshotPairSet& set) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  {
    std::ofstream os(with_ext(stem, ".bin"), std::ios::binary);
    if (!os) throw MissingArtifactError("cannot write " + with_ext(stem, ".bin").string());
    os.write(kPairMagic, 8);
    put<std::uint64_t>(os, kVersion);
    put<std::uint64_t>(os, set.size());
    put<std::uint64_t>(os, set.dim());
    put<std::uint64_t>(os, static_cast<std::uint64_t>(set.params.cols()));
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      put<double>(os, set.times(ii));
      put_doubles(os, set.params.row(ii).data(), static_cast<std::size_t>(set.params.cols()));
      put_doubles(os, set.inputs.row(ii).data(), set.dim());
      put_doubles(os, set.targets.row(ii).data(), set.dim());
      put<std::uint64_t>(os, i < set.noise_seeds.size() ? set.noise_seeds[i] : 0);
    }
  }
  nlohmann::json m = {{"format", "GDVAEDS1"},     {"version", kVersion},     {"family", set.family},
                      {"sample_shape", set.sample_shape}, {"count", set.size()}, {"dim", set.dim()},
                      {"param_count", set.params.cols()}, {"tau", set.tau},  {"generator", set.generator},
                      {"payload", with_ext(stem, ".bin").filename().string()}};
  std::ofstream js(with_ext(stem, ".json"));
  js << m.dump(2) << '\n';
}

SnapshotPairSet load_dataset(const std::filesystem::path& stem) {
  const nlohmann::json m = read_manifest(stem);
  std::ifstream is = open_payload(stem, kPairMagic);
  const auto count = get<std::uint64_t>(is), dim = get<std::uint64_t>(is), pc = get<std::uint64_t>(is);
  if (count != m.at("count").get<std::uint64_t>() || dim != m.at("dim").get<std::uint64_t>()) {
    throw MissingArtifactError("dataset manifest and payload disagree for " + stem.string());
  }
  SnapshotPairSet set;
  set.family = m.at("family").get<std::string>();
  set.sample_shape = m.at("sample_shape").get<std::vector<std::size_t>>();
  set.tau = m.at("tau").get<double>();
  set.generator = m.at("generator");
  set.inputs.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  set.targets.resizeLike(set.inputs);
  set.params.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pc));
  set.times.resize(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    set.times(ii) = get<double>(is);
    get_doubles(is, set.params.row(ii).data(), pc);
    get_doubles(is, set.inputs.row(ii).data(), dim);
    get_doubles(is, set.targets.row(ii).data(), dim);
    set.noise_seeds.push_back(get<std::uint64_t>(is));
  }
  return set;
}

void save_trajectories(const std::filesystem::path& stem, const TrajectorySet& set) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  const std::size_t dim = set.states.empty() ? 0 : static_cast<std::size_t>(set.states[0].cols());
  {
    std::ofstream os(with_ext(stem, ".bin"), std::ios::binary);
    if (!os) throw MissingArtifactError("cannot write " + with_ext(stem, ".bin").string());
    os.write(kTrajMagic, 8);
    put<std::uint64_t>(os, kVersion);
    put<std::uint64_t>(os, set.size());
    put<std::uint64_t>(os, set.times.size());
    put<std::uint64_t>(os, dim);
    put<std::uint64_t>(os, static_cast<std::uint64_t>(set.params.cols()));
    put_doubles(os, set.times.data(), set.times.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
      put_doubles(os, set.params.row(static_cast<Eigen::Index>(i)).data(), static_cast<std::size_t>(set.params.cols()));
      put_doubles(os, set.states[i].data(), set.times.size() * dim);
    }
  }
  nlohmann::json m = {{"format", "GDVAETR1"},  {"version", kVersion},     {"family", set.family},
                      {"sample_shape", set.sample_shape}, {"count", set.size()}, {"times", set.times},
                      {"dim", dim},            {"param_count", set.params.cols()}, {"generator", set.generator},
                      {"payload", with_ext(stem, ".bin").filename().string()}};
  std::ofstream js(with_ext(stem, ".json"));
  js << m.dump(2) << '\n';
}

TrajectorySet load_trajectories(const std::filesystem::path& stem) {
  const nlohmann::json m = read_manifest(stem);
  std::ifstream is = open_payload(stem, kTrajMagic);
  const auto count = get<std::uint64_t>(is), nt = get<std::uint64_t>(is), dim = get<std::uint64_t>(is),
             pc = get<std::uint64_t>(is);
  TrajectorySet set;
  set.family = m.at("family").get<std::string>();
  set.sample_shape = m.at("sample_shape").get<std::vector<std::size_t>>();
  set.generator = m.at("generator");
  set.times.resize(nt);
  get_doubles(is, set.times.data(), nt);
  set.params.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pc));
  for (std::size_t i = 0; i < count; ++i) {
    get_doubles(is, set.params.row(static_cast<Eigen::Index>(i)).data(), pc);
    RowMatrix s(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(dim));
    get_doubles(is, s.data(), nt * dim);
    set.states.push_back(std::move(s));
  }
  return set;
}

void write_snapshot_csv(std::ostream& os, const SnapshotPairSet& set, std::size_t sample) {
  if (sample >= set.size()) throw ShapeError("write_snapshot_csv: sample index out of range");
  const auto ii = static_cast<Eigen::Index>(sample);
  os << "index,input,target\n";
  os.precision(17);
  for (std::size_t k = 0; k < set.dim(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    os << k << ',' << set.inputs(ii, kk) << ',' << set.targets(ii, kk) << '\n';
  }
}

}  // namespace gdvae::pde
