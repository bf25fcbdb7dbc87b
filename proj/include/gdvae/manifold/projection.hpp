#pragma once

#include "gdvae/diffcore/tape.hpp"
#include "gdvae/manifold/atlas.hpp"

#include <functional>

namespace gdvae::manifold {

struct ProjectionResult {
  Vec z;
  std::size_t chart = 0;
  Vec u;
  Mat jacobian;  // N x N, dz/dw
  double residual = 0.0;  // |G(u, w)|
  int iterations = 0;
  bool degenerate = false;
};

struct NewtonOptions {
  double tolerance = 1e-10;
  int max_iterations = 50;
};

/// G(u, w) = grad sigma(u)^T (sigma(u) - w); zero at stationary points of the distance.
Vec stationarity_residual(const ChartEval& e, const Vec& w);

/// dz/dw = grad sigma H^{-1} grad sigma^T with
/// H = grad sigma^T grad sigma - sum_k (w - sigma)_k hess sigma_k.
/// Throws ProjectionError with a condition estimate when H is singular.
Mat projection_jacobian(const Vec& u, std::size_t chart, const Vec& w, const ManifoldAtlas& atlas);

ProjectionResult project_analytic(const Vec& w, const ManifoldAtlas& atlas);
ProjectionResult project_chart(const Vec& w, const ManifoldAtlas& atlas, const NewtonOptions& opts = {});
/// Analytic projector when the atlas has one, chart projection otherwise.
ProjectionResult project(const Vec& w, const ManifoldAtlas& atlas);

/// Row-wise projection of a [B, N] (or [N]) tensor as a tape op; the backward
/// pass applies J^T per row. Optional sink receives one result per row.
diff::Var project_rows(diff::Var w, const ManifoldAtlas& atlas, std::vector<ProjectionResult>* results = nullptr);

/// Largest |Λ(w1) - Λ(w2)| / |w1 - w2| seen over the sample pairs.
double estimate_lipschitz(const ManifoldAtlas& atlas, const std::function<Vec()>& sampler, std::size_t pairs,
                          double perturbation);

}  // namespace gdvae::manifold
