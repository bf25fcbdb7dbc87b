#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

namespace gdvae::pde {

/// Periodic samples u(x_k), x_k = k/n on [0, 1).
using Field1D = Eigen::VectorXd;

Field1D grid_points(std::size_t n);

/// phi = exp(-(1/2nu) int_0^x u), normalized so max phi = 1. Requires zero-mean u.
Field1D cole_hopf_forward(const Field1D& u, double nu);
/// u = -2 nu phi_x / phi with a spectral derivative.
Field1D cole_hopf_inverse(const Field1D& phi, double nu);

/// Exact viscous Burgers evolution through the heat equation for phi.
/// The initial field is trig-interpolated onto an internal grid, phi's Fourier
/// coefficients are damped by exp(-4 pi^2 k^2 nu t), and u is summed directly
/// from the series at the requested output points.
class SpectralBurgers {
 public:
  SpectralBurgers(const Field1D& u0, double nu, std::size_t modes = 256);

  Field1D evaluate(double t, std::size_t n_out) const;
  double nu() const { return nu_; }
  /// Copy keeping only the modes |k| <= max_k of phi. The truncated phi may change sign;
  /// evaluate then only rejects points where it vanishes.
  SpectralBurgers truncated(std::size_t max_k) const;

 private:
  double nu_;
  bool signed_phi_ = false;
  std::vector<std::complex<double>> phi_hat_;  // index k in [-K/2, K/2), stored as k + K/2
};

Field1D burgers_solve_spectral(const Field1D& u0, double nu, double t, std::size_t modes = 256);

/// Conservative central differences, flux u^2/2 - nu u_x, Heun (RK2) in time.
/// The grid spacing is 1/u0.size(); dt is shrunk so a whole number of steps lands on t.
Field1D burgers_solve_fd(const Field1D& u0, double nu, double t, double dt);

/// Largest dt the FD scheme tolerates on this grid (diffusive and advective limits, with margin).
double burgers_fd_stable_dt(const Field1D& u0, double nu);

enum class IcFamily { u1, periodic, doubly_periodic };

const char* to_string(IcFamily f);
IcFamily ic_family_from_string(const std::string& s);
std::size_t ic_param_count(IcFamily f);

/// u1:      alpha sin(2 pi x) + (1 - alpha) cos^3(2 pi x),  alpha in [0, 1]
/// periodic: cos(2 pi alpha) cos(2 pi x) + sin(2 pi alpha) sin(2 pi x),  alpha in [0, 1]
/// doubly:  cos a1 cos 2pi x + sin a1 sin 2pi x + cos a2 cos 4pi x + sin a2 sin 4pi x,  a_i in [0, 2pi]
Field1D sample_ic(IcFamily family, const std::vector<double>& params, std::size_t n);

}  // namespace gdvae::pde
