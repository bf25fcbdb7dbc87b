#pragma once

// Independent references for the PDE tests: quadrature, RK4, refined FD.

#include "gdvae/pde/brusselator.hpp"
#include "gdvae/pde/burgers.hpp"

#include <array>
#include <cmath>
#include <functional>

namespace gdvae::testing {

inline double l1_relative(const Eigen::VectorXd& approx, const Eigen::VectorXd& exact) {
  return (approx - exact).lpNorm<1>() / exact.lpNorm<1>();
}

/// Composite Simpson rule for int_0^x f with `panels` (even) subintervals.
inline double simpson(const std::function<double(double)>& f, double x, int panels = 2000) {
  const double h = x / panels;
  double s = f(0.0) + f(x);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

/// Single-cell Brusselator kinetics integrated with classical RK4.
inline std::array<double, 2> brusselator_ode_rk4(double u, double v, double a, double b, double t, double dt) {
  auto rhs = [a, b](double uu, double vv) {
    return std::array<double, 2>{a - (1.0 + b) * uu + vv * uu * uu, b * uu - vv * uu * uu};
  };
  const long steps = std::lround(t / dt);
  for (long s = 0; s < steps; ++s) {
    const auto k1 = rhs(u, v);
    const auto k2 = rhs(u + 0.5 * dt * k1[0], v + 0.5 * dt * k1[1]);
    const auto k3 = rhs(u + 0.5 * dt * k2[0], v + 0.5 * dt * k2[1]);
    const auto k4 = rhs(u + dt * k3[0], v + dt * k3[1]);
    u += dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    v += dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
  }
  return {u, v};
}

/// FD Burgers on a grid `refine` times finer than n, sampled back onto n points.
inline pde::Field1D burgers_fd_reference(pde::IcFamily family, const std::vector<double>& params, double nu, double t,
                                         std::size_t n, std::size_t refine) {
  const pde::Field1D fine0 = pde::sample_ic(family, params, n * refine);
  const pde::Field1D fine = pde::burgers_solve_fd(fine0, nu, t, pde::burgers_fd_stable_dt(fine0, nu));
  pde::Field1D out(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) out(static_cast<Eigen::Index>(k)) = fine(static_cast<Eigen::Index>(k * refine));
  return out;
}

}  // namespace gdvae::testing
