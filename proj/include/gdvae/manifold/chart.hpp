#pragma once

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

namespace gdvae::manifold {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// sigma(u) with its first and second derivatives.
struct ChartEval {
  Vec sigma;              // N
  Mat jacobian;           // N x m, column j is d sigma / d u_j
  std::vector<Mat> hessian;  // N entries, each m x m: d^2 sigma_k / du_i du_j
};

/// Local parameterization sigma: U -> R^N of a manifold patch. U is a box; axes
/// flagged periodic wrap, the others are clamped only for seeding.
class Chart {
 public:
  virtual ~Chart() = default;

  virtual std::size_t intrinsic_dim() const = 0;
  virtual std::size_t embed_dim() const = 0;
  virtual ChartEval eval(const Vec& u) const = 0;
  /// Equivalent coordinates inside the box (wrapping periodic axes).
  virtual Vec canonical(const Vec& u) const;

  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  bool periodic(std::size_t axis) const { return periodic_.at(axis); }

 protected:
  Chart(Vec lower, Vec upper, std::vector<bool> periodic)
      : lower_(std::move(lower)), upper_(std::move(upper)), periodic_(std::move(periodic)) {}

  Vec lower_;
  Vec upper_;
  std::vector<bool> periodic_;
};

/// Product of `circles` unit circles and `axes` real lines:
/// sigma = (cos u_1, sin u_1, ..., cos u_p, sin u_p, u_{p+1}, ..., u_{p+a}).
/// Covers the circle, the Clifford torus and the cylinder latents.
class CirclesTimesLines final : public Chart {
 public:
  CirclesTimesLines(std::size_t circles, std::size_t axes, double axis_extent = 10.0);
  std::size_t intrinsic_dim() const override { return circles_ + axes_; }
  std::size_t embed_dim() const override { return 2 * circles_ + axes_; }
  ChartEval eval(const Vec& u) const override;

  std::size_t circles() const { return circles_; }
  std::size_t axes() const { return axes_; }

 private:
  std::size_t circles_;
  std::size_t axes_;
};

/// Torus of revolution in R^3 with major radius R and minor radius r.
class TorusChart final : public Chart {
 public:
  TorusChart(double major, double minor);
  std::size_t intrinsic_dim() const override { return 2; }
  std::size_t embed_dim() const override { return 3; }
  ChartEval eval(const Vec& u) const override;

  double major() const { return major_; }
  double minor() const { return minor_; }

 private:
  double major_;
  double minor_;
};

/// Klein bottle in R^4:
///   z1 = (a + b cos u2) cos u1,  z2 = (a + b cos u2) sin u1,
///   z3 = b sin u2 cos(u1/2),     z4 = b sin u2 sin(u1/2).
/// The parameterization is smooth on all of R^2; (u1 + 2pi, u2) names the same
/// point as (u1, -u2), which canonical() uses to fold u1 back into [0, 2pi).
class KleinChart final : public Chart {
 public:
  KleinChart(double a, double b);
  std::size_t intrinsic_dim() const override { return 2; }
  std::size_t embed_dim() const override { return 4; }
  ChartEval eval(const Vec& u) const override;
  Vec canonical(const Vec& u) const override;

  double a() const { return a_; }
  double b() const { return b_; }

 private:
  double a_;
  double b_;
};

ChartEval klein_bottle_chart(double u1, double u2, double a, double b);

}  // namespace gdvae::manifold
