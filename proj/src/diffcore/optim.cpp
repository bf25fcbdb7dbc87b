#include "gdvae/diffcore/optim.hpp"

#include "gdvae/errors.hpp"

#include <algorithm>
#include <cmath>

namespace gdvae::diff {

void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg) {
  for (const Parameter* p : params) {
    if (p->grad.size() != p->value.size()) throw ShapeError("adam: gradient shape mismatch for " + p->name);
    if (!p->grad.all_finite()) throw NonFiniteError("adam: non-finite gradient for " + p->name);
  }
  for (Parameter* p : params) {
    if (p->first_moment.size() != p->value.size()) p->first_moment = Tensor(p->value.shape());
    if (p->second_moment.size() != p->value.size()) p->second_moment = Tensor(p->value.shape());
    ++p->step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p->step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p->step));
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      double& m = p->first_moment[i];
      double& v = p->second_moment[i];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
      p->value[i] -= cfg.learning_rate * (m / c1) / (std::sqrt(v / c2) + cfg.epsilon);
    }
  }
}

double finite_difference_check(const std::function<double(const Tensor&)>& f, const Tensor& x,
                               const Tensor& analytic, double h, double floor) {
  if (analytic.size() != x.size()) throw ShapeError("finite_difference_check: gradient/input size mismatch");
  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    const double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic[i] - fd) / (std::abs(analytic[i]) + floor));
  }
  return worst;
}

void nudge_away_from_kinks(Tensor& x, double margin) {
  for (auto& v : x.values()) {
    if (std::abs(v) < margin) v = v < 0.0 ? -margin : margin;
  }
}

}  // namespace gdvae::diff
