#pragma once

#include "gdvae/diffcore/tape.hpp"

#include <functional>
#include <span>

namespace gdvae::diff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update of every parameter from its accumulated gradient.
/// Throws NonFiniteError (before touching any parameter) if a gradient is NaN/Inf.
void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg);

/// Max over coordinates of |analytic - central difference| / (|analytic| + floor).
double finite_difference_check(const std::function<double(const Tensor&)>& f, const Tensor& x,
                               const Tensor& analytic, double h = 1e-6, double floor = 1e-6);

/// Moves coordinates lying within `margin` of zero out to +-margin so that a
/// central difference of width < margin never straddles a relu kink.
void nudge_away_from_kinks(Tensor& x, double margin);

}  // namespace gdvae::diff
