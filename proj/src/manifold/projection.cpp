#include "gdvae/manifold/projection.hpp"

#include "gdvae/diffcore/ops.hpp"
#include "gdvae/errors.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

namespace gdvae::manifold {

namespace {

constexpr double kDegenerate = 1e-12;

double angle(double y, double x) {
  double a = std::atan2(y, x);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  return a;
}

Mat stationarity_hessian(const ChartEval& e, const Vec& w) {
  const Vec r = w - e.sigma;
  Mat h = e.jacobian.transpose() * e.jacobian;
  for (Eigen::Index k = 0; k < r.size(); ++k) h -= r(k) * e.hessian[static_cast<std::size_t>(k)];
  return h;
}

ProjectionResult finish(const ManifoldAtlas& atlas, std::size_t chart, Vec u, const Vec& w, bool degenerate) {
  ProjectionResult res;
  const ChartEval e = atlas.chart(chart).eval(u);
  res.z = e.sigma;
  res.chart = chart;
  res.u = std::move(u);
  res.residual = stationarity_residual(e, w).norm();
  res.degenerate = degenerate;
  const auto n = static_cast<Eigen::Index>(atlas.embed_dim());
  res.jacobian = degenerate ? Mat::Zero(n, n) : projection_jacobian(res.u, chart, w, atlas);
  return res;
}

struct NewtonOutcome {
  Vec u;
  double residual = 0.0;
  int iterations = 0;
};

NewtonOutcome newton(const Chart& chart, Vec u, const Vec& w, const NewtonOptions& opts) {
  ChartEval e = chart.eval(u);
  Vec g = stationarity_residual(e, w);
  double gnorm = g.norm();
  int it = 0;
  for (; it < opts.max_iterations && gnorm >= opts.tolerance; ++it) {
    const Vec step = -stationarity_hessian(e, w).colPivHouseholderQr().solve(g);
    if (!step.allFinite()) break;
    double scale = 1.0;
    Vec trial;
    ChartEval te;
    Vec tg;
    for (int halvings = 0; halvings <= 30; ++halvings) {
      trial = chart.canonical(u + scale * step);
      te = chart.eval(trial);
      tg = stationarity_residual(te, w);
      if (tg.norm() <= gnorm) break;
      scale *= 0.5;
    }
    u = std::move(trial);
    e = std::move(te);
    g = std::move(tg);
    gnorm = g.norm();
  }
  if (gnorm < opts.tolerance && gnorm > 0.0) {
    // One polishing step: quadratic convergence takes the point to roundoff.
    const Vec polished = chart.canonical(u - stationarity_hessian(e, w).colPivHouseholderQr().solve(g));
    const double pn = stationarity_residual(chart.eval(polished), w).norm();
    if (pn < gnorm) {
      u = polished;
      gnorm = pn;
    }
  }
  return {std::move(u), gnorm, it};
}

}  // namespace

Vec stationarity_residual(const ChartEval& e, const Vec& w) { return e.jacobian.transpose() * (e.sigma - w); }

Mat projection_jacobian(const Vec& u, std::size_t chart, const Vec& w, const ManifoldAtlas& atlas) {
  const ChartEval e = atlas.chart(chart).eval(u);
  const Mat h = stationarity_hessian(e, w);
  Eigen::JacobiSVD<Mat> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec s = svd.singularValues();
  const double smax = s(0), smin = s(s.size() - 1);
  const double condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (smin <= 1e-12 * std::max(1.0, smax)) {
    throw ProjectionError("projection_jacobian: stationarity Hessian is singular (w near the focal/medial set)",
                          stationarity_residual(e, w).norm(), condition);
  }
  const Mat h_inv = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  return e.jacobian * h_inv * e.jacobian.transpose();
}

ProjectionResult project_analytic(const Vec& w, const ManifoldAtlas& atlas) {
  if (static_cast<std::size_t>(w.size()) != atlas.embed_dim()) throw ShapeError("project_analytic: wrong input dimension");
  if (!w.allFinite()) throw NonFiniteError("project_analytic: non-finite input");
  Vec u(static_cast<Eigen::Index>(atlas.intrinsic_dim()));
  bool degenerate = false;
  switch (atlas.tag()) {
    case AtlasTag::circle:
    case AtlasTag::product_of_circles:
    case AtlasTag::cylinder_axis: {
      const auto p = static_cast<Eigen::Index>(atlas.circles());
      for (Eigen::Index c = 0; c < p; ++c) {
        const double x = w(2 * c), y = w(2 * c + 1);
        if (std::hypot(x, y) < kDegenerate) {
          degenerate = true;
          u(c) = 0.0;
        } else {
          u(c) = angle(y, x);
        }
      }
      for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(atlas.axes()); ++a) u(p + a) = w(2 * p + a);
      break;
    }
    case AtlasTag::torus3d: {
      const double rho = std::hypot(w(0), w(1));
      if (rho < kDegenerate) {
        degenerate = true;
        u(0) = 0.0;
      } else {
        u(0) = angle(w(1), w(0));
      }
      const double dr = rho - atlas.param_a();
      if (std::hypot(dr, w(2)) < kDegenerate) {
        degenerate = true;
        u(1) = 0.0;
      } else {
        u(1) = angle(w(2), dr);
      }
      break;
    }
    case AtlasTag::klein4d:
      throw ConfigError("manifold.tag", "klein4d has no analytic projector; use project_chart");
  }
  return finish(atlas, 0, std::move(u), w, degenerate);
}

ProjectionResult project_chart(const Vec& w, const ManifoldAtlas& atlas, const NewtonOptions& opts) {
  if (static_cast<std::size_t>(w.size()) != atlas.embed_dim()) throw ShapeError("project_chart: wrong input dimension");
  if (!w.allFinite()) throw NonFiniteError("project_chart: non-finite input");
  if (!atlas.cloud()) throw ConfigError("manifold.cloud_resolution", "chart projection needs a point-cloud seed");
  const PointCloudSeed& cloud = *atlas.cloud();

  const Vec dist2 = (cloud.points.colwise() - w).colwise().squaredNorm().transpose();
  std::vector<Eigen::Index> seed(atlas.chart_count(), -1);
  for (Eigen::Index j = 0; j < dist2.size(); ++j) {
    Eigen::Index& s = seed[cloud.chart[static_cast<std::size_t>(j)]];
    if (s < 0 || dist2(j) < dist2(s)) s = j;
  }

  std::size_t best_chart = 0;
  NewtonOutcome best;
  double best_dist = std::numeric_limits<double>::infinity();
  double worst_residual = 0.0;
  for (std::size_t k = 0; k < atlas.chart_count(); ++k) {
    if (seed[k] < 0) continue;
    const Chart& chart = atlas.chart(k);
    NewtonOutcome out = newton(chart, cloud.coords.col(seed[k]), w, opts);
    if (!(out.residual < opts.tolerance)) {
      worst_residual = std::max(worst_residual, out.residual);
      continue;
    }
    const double d = (chart.eval(out.u).sigma - w).norm();
    if (d < best_dist) {
      best_dist = d;
      best_chart = k;
      best = std::move(out);
    }
  }
  if (!std::isfinite(best_dist)) {
    throw ProjectionError("project_chart: Newton refinement did not converge", worst_residual);
  }
  const int iterations = best.iterations;
  ProjectionResult res = finish(atlas, best_chart, std::move(best.u), w, false);
  res.iterations = iterations;
  return res;
}

ProjectionResult project(const Vec& w, const ManifoldAtlas& atlas) {
  return atlas.has_analytic_projector() ? project_analytic(w, atlas) : project_chart(w, atlas);
}

diff::Var project_rows(diff::Var w, const ManifoldAtlas& atlas, std::vector<ProjectionResult>* results) {
  const std::size_t n = atlas.embed_dim();
  return diff::custom_gradient(w, [&atlas, results, n](const diff::Tensor& x) {
    if (x.rank() == 0 || x.shape().back() != n) {
      throw ShapeError("project_rows: trailing extent " + diff::to_string(x.shape()) + " does not match embed dim " +
                       std::to_string(n));
    }
    const std::size_t rows = x.size() / n;
    diff::Tensor out(x.shape());
    auto jacobians = std::make_shared<std::vector<Mat>>();
    jacobians->reserve(rows);
    if (results) results->clear();
    for (std::size_t r = 0; r < rows; ++r) {
      const Vec wr = Eigen::Map<const Vec>(x.data() + r * n, static_cast<Eigen::Index>(n));
      ProjectionResult p = project(wr, atlas);
      Eigen::Map<Vec>(out.data() + r * n, static_cast<Eigen::Index>(n)) = p.z;
      jacobians->push_back(p.jacobian);
      if (results) results->push_back(std::move(p));
    }
    diff::VjpFn vjp = [jacobians, n](const diff::Tensor& up) {
      diff::Tensor g(up.shape());
      for (std::size_t r = 0; r < jacobians->size(); ++r) {
        Eigen::Map<Vec>(g.data() + r * n, static_cast<Eigen::Index>(n)) =
            (*jacobians)[r].transpose() * Eigen::Map<const Vec>(up.data() + r * n, static_cast<Eigen::Index>(n));
      }
      return g;
    };
    return std::make_pair(std::move(out), std::move(vjp));
  });
}

double estimate_lipschitz(const ManifoldAtlas& atlas, const std::function<Vec()>& sampler, std::size_t pairs,
                          double perturbation) {
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const Vec w1 = sampler();
    Vec w2 = sampler();
    if (perturbation > 0.0) w2 = w1 + perturbation * (w2 - w1).normalized();
    const double dw = (w1 - w2).norm();
    if (dw == 0.0) continue;
    worst = std::max(worst, (project(w1, atlas).z - project(w2, atlas).z).norm() / dw);
  }
  return worst;
}

}  // namespace gdvae::manifold
