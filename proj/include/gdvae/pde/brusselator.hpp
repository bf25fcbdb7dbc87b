#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace gdvae::pde {

using Grid = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Two periodic concentration channels on an ny x nx grid (row = y).
struct Field2D {
  Grid u;
  Grid v;

  std::size_t nx() const { return static_cast<std::size_t>(u.cols()); }
  std::size_t ny() const { return static_cast<std::size_t>(u.rows()); }
  /// Channel-major [2, ny, nx] flattening.
  Eigen::VectorXd flatten() const;
  static Field2D unflatten(const Eigen::VectorXd& flat, std::size_t ny, std::size_t nx);
};

enum class Integrator { explicit_euler, semi_implicit };

const char* to_string(Integrator i);
Integrator integrator_from_string(const std::string& s);

struct BrusselatorParams {
  double d1 = 1.0;
  double d2 = 0.1;
  double a = 1.0;
  double b = 3.0;
  double dt = 1e-3;
  double dx = 1.0;
  Integrator integrator = Integrator::explicit_euler;

  /// Throws ConfigError for non-positive diffusivities or an unstable explicit dt.
  void validate() const;
};

struct BrusselatorTrajectory {
  std::vector<double> times;
  std::vector<Field2D> snapshots;
};

/// Integrates to time `t_end`, recording snapshots at t_first, t_first + stride, ...
/// Laplacian: 5-point central differences with periodic wrap.
BrusselatorTrajectory brusselator_solve(const Field2D& init, const BrusselatorParams& params, double t_end,
                                        double stride, double t_first = 0.0);

/// u = alpha sin(2 pi x/Lx) + (1-alpha) cos^3(2 pi x/Lx), v the same in y; grid spacing 1.
Field2D brusselator_ic(double alpha, std::size_t nx, std::size_t ny);

}  // namespace gdvae::pde
