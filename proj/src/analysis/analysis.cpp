#include "gdvae/analysis/analysis.hpp"

#include "gdvae/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace gdvae::analysis {

namespace {

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::span<const double> row_span(const RowMatrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

double l1_relative_error(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size())
    throw ShapeError("l1_relative_error: " + std::to_string(pred.size()) + " vs " + std::to_string(truth.size()) + " values");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    num += std::abs(pred[i] - truth[i]);
    den += std::abs(truth[i]);
  }
  if (!(den > 0.0)) throw ConfigError("truth", "l1_relative_error needs a truth with nonzero L1 norm");
  return num / den;
}

double l1_relative_error(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  return l1_relative_error(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())),
                           std::span<const double>(truth.data(), static_cast<std::size_t>(truth.size())));
}

Predictor model_predictor(const model::GDVAEModel& model, bool reencode) {
  return [&model, reencode](const RowMatrix& x0, std::size_t steps) {
    return model::predict_multistep(model, x0, steps, reencode);
  };
}

Predictor rom_predictor(const rom::LinearROM& rom) {
  return [&rom](const RowMatrix& x0, std::size_t steps) {
    std::vector<RowMatrix> out(steps + 1, RowMatrix(x0.rows(), x0.cols()));
    for (Eigen::Index r = 0; r < x0.rows(); ++r) {
      const auto seq = rom.predict(x0.row(r).transpose(), steps);
      for (std::size_t k = 0; k <= steps; ++k) out[k].row(r) = seq[k].transpose();
    }
    return out;
  };
}

Predictor cole_hopf_predictor(double nu, double tau, std::size_t n_f, std::size_t modes) {
  return [=](const RowMatrix& x0, std::size_t steps) {
    std::vector<RowMatrix> out(steps + 1, RowMatrix(x0.rows(), x0.cols()));
    for (Eigen::Index r = 0; r < x0.rows(); ++r) {
      const pde::Field1D u0 = x0.row(r).transpose();
      for (std::size_t k = 0; k <= steps; ++k) {
        // a truncated phi that is not positive has no inverse transform; that horizon scores NaN
        try {
          out[k].row(r) = rom::cole_hopf_rom(u0, nu, tau * static_cast<double>(k), n_f, modes).transpose();
        } catch (const SolverError&) {
          out[k].row(r).setConstant(std::numeric_limits<double>::quiet_NaN());
        }
      }
    }
    return out;
  };
}

Predictor oracle_predictor(const pde::TrajectorySet& test) {
  return [&test](const RowMatrix& x0, std::size_t steps) {
    if (static_cast<std::size_t>(x0.rows()) != test.size()) throw ShapeError("oracle_predictor: batch is not the test set");
    std::vector<RowMatrix> out(steps + 1, RowMatrix(x0.rows(), x0.cols()));
    for (std::size_t i = 0; i < test.size(); ++i)
      for (std::size_t k = 0; k <= steps; ++k) out[k].row(static_cast<Eigen::Index>(i)) = test.states[i].row(static_cast<Eigen::Index>(k));
    return out;
  };
}

std::vector<double> horizon_errors(const Predictor& predict, const pde::TrajectorySet& test, std::size_t steps) {
  if (test.size() == 0) throw ConfigError("test", "empty test set");
  if (steps >= test.times.size())
    throw ConfigError("horizons", "test trajectories hold " + std::to_string(test.times.size()) + " times, need " +
                                      std::to_string(steps + 1));
  const auto dim = test.states[0].cols();
  RowMatrix x0(static_cast<Eigen::Index>(test.size()), dim);
  for (std::size_t i = 0; i < test.size(); ++i) x0.row(static_cast<Eigen::Index>(i)) = test.states[i].row(0);
  const auto pred = predict(x0, steps);
  if (pred.size() != steps + 1) throw ShapeError("horizon_errors: predictor returned the wrong number of horizons");
  std::vector<double> err(steps + 1, 0.0);
  for (std::size_t k = 0; k <= steps; ++k) {
    if (pred[k].rows() != x0.rows() || pred[k].cols() != dim) throw ShapeError("horizon_errors: prediction extent mismatch");
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const RowMatrix truth = test.states[i].row(static_cast<Eigen::Index>(k));
      err[k] += l1_relative_error(row_span(pred[k], r), row_span(truth, 0));
    }
    err[k] /= static_cast<double>(test.size());
  }
  return err;
}

void EvalTable::write_csv(std::ostream& os) const {
  os << "method,dim";
  for (std::size_t h = 0; h < horizons.size(); ++h) os << ",h" << h << ",h" << h << "_se";
  os << '\n';
  const auto old = os.precision(17);
  for (const auto& r : rows) {
    if (r.mean.size() != horizons.size() || r.se.size() != horizons.size())
      throw ShapeError("EvalTable: row " + r.method + " does not cover every horizon");
    os << r.method << ',' << r.dim;
    for (std::size_t h = 0; h < horizons.size(); ++h) os << ',' << r.mean[h] << ',' << r.se[h];
    os << '\n';
  }
  os.precision(old);
}

nlohmann::json EvalTable::sidecar() const {
  nlohmann::json j;
  j["horizons_seconds"] = horizons;
  j["metric"] = "L1-relative error, mean over test items, then mean and standard error over trials";
  nlohmann::json trials = nlohmann::json::object();
  for (const auto& r : rows) trials[r.method + "/" + std::to_string(r.dim)] = r.trials;
  j["trials"] = trials;
  return j;
}

EvalRow summarize(const std::string& method, std::size_t dim, const std::vector<std::vector<double>>& per_trial) {
  if (per_trial.empty()) throw MissingArtifactError("summarize: no trials for " + method);
  const std::size_t h = per_trial.front().size();
  EvalRow row{method, dim, std::vector<double>(h, 0.0), std::vector<double>(h, 0.0), per_trial.size()};
  const double n = static_cast<double>(per_trial.size());
  for (const auto& t : per_trial) {
    if (t.size() != h) throw ShapeError("summarize: trials cover different horizons");
    for (std::size_t k = 0; k < h; ++k) row.mean[k] += t[k] / n;
  }
  if (per_trial.size() > 1) {
    for (std::size_t k = 0; k < h; ++k) {
      double ss = 0.0;
      for (const auto& t : per_trial) ss += (t[k] - row.mean[k]) * (t[k] - row.mean[k]);
      row.se[k] = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
  }
  return row;
}

EvalRow multistep_eval(const std::string& method, std::size_t dim, const std::vector<Predictor>& trials,
                       const pde::TrajectorySet& test, std::size_t steps) {
  std::vector<std::vector<double>> per_trial;
  for (const auto& p : trials) {
    if (!p) throw MissingArtifactError("multistep_eval: missing trial for " + method);
    per_trial.push_back(horizon_errors(p, test, steps));
  }
  return summarize(method, dim, per_trial);
}

VarianceStats variance_stats(const RowMatrix& mean, const RowMatrix& logvar) {
  if (mean.rows() < 2) throw ConfigError("batch", "variance statistics need at least two data");
  if (logvar.rows() != mean.rows() || logvar.cols() != mean.cols()) throw ShapeError("variance_stats: mean/logvar extents differ");
  VarianceStats s;
  s.batch = static_cast<std::size_t>(mean.rows());
  const double n = static_cast<double>(mean.rows());
  s.q_mov = logvar.array().exp().colwise().sum().transpose() / n;
  const Eigen::VectorXd mu_bar = mean.colwise().sum().transpose() / n;
  s.q_vom = (mean.array().square().colwise().sum().transpose() / n - mu_bar.array().square()).max(0.0);
  return s;
}

VarianceStats variance_stats(const model::GDVAEModel& model, const RowMatrix& batch) {
  const auto out = model.encoder_outputs(batch);
  if (out.logvar.size() == 0) throw ConfigError("architecture.variance", "variance statistics need an encoder variance");
  return variance_stats(out.mean, out.logvar);
}

std::vector<std::size_t> select_informative_dims(const VarianceStats& stats, double threshold) {
  const auto n = static_cast<std::size_t>(stats.q_vom.size());
  if (n == 0) return {};
  std::vector<double> ratio(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    ratio[i] = stats.q_mov(k) > 0.0 ? stats.q_vom(k) / stats.q_mov(k) : std::numeric_limits<double>::infinity();
  }
  if (std::all_of(ratio.begin(), ratio.end(), [&](double r) { return r == ratio.front(); })) return {};
  const double cut = threshold * median(ratio);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (ratio[i] > cut) out.push_back(i);
  std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) { return ratio[a] > ratio[b]; });
  return out;
}

double continuity_score(const RowMatrix& codes) {
  const auto n = codes.rows();
  if (n < 3) throw ConfigError("grid", "continuity score needs at least three grid points");
  std::vector<double> d(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = (codes.row((i + 1) % n) - codes.row(i)).norm();
  const double med = median(d);
  const double worst = *std::max_element(d.begin(), d.end());
  if (!(med > 0.0)) return worst > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  return worst / med;
}

double continuity_score(const model::GDVAEModel& model, const RowMatrix& grid_states) {
  return continuity_score(model.encode_codes(grid_states));
}

void export_latent_codes(std::ostream& os, const model::GDVAEModel& model, const pde::SnapshotPairSet& set) {
  const auto np = set.params.cols();
  if (set.params.rows() != set.inputs.rows() || set.times.size() != set.inputs.rows())
    throw ShapeError("export_latent_codes: dataset metadata does not cover every pair");
  const RowMatrix z = model.encode_codes(set.inputs);
  for (Eigen::Index p = 0; p < np; ++p) os << (p ? ",alpha" + std::to_string(p + 1) : std::string("alpha")) << ',';
  os << "t";
  for (Eigen::Index c = 0; c < z.cols(); ++c) os << ",z" << c + 1;
  os << '\n';
  const auto old = os.precision(17);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (Eigen::Index p = 0; p < np; ++p) os << set.params(r, p) << ',';
    os << set.times(r);
    for (Eigen::Index c = 0; c < z.cols(); ++c) os << ',' << z(r, c);
    os << '\n';
  }
  os.precision(old);
}

}  // namespace gdvae::analysis
