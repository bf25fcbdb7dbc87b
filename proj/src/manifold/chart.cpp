#include "gdvae/manifold/chart.hpp"

#include "gdvae/errors.hpp"

#include <cmath>
#include <numbers>

namespace gdvae::manifold {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double v, double lo, double hi) {
  const double period = hi - lo;
  double r = std::fmod(v - lo, period);
  if (r < 0.0) r += period;
  return lo + r;
}

ChartEval blank(std::size_t n, std::size_t m) {
  ChartEval e;
  e.sigma = Vec::Zero(static_cast<Eigen::Index>(n));
  e.jacobian = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  e.hessian.assign(n, Mat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)));
  return e;
}
}  // namespace

Vec Chart::canonical(const Vec& u) const {
  Vec out = u;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (periodic_[static_cast<std::size_t>(i)]) out(i) = wrap(u(i), lower_(i), upper_(i));
  }
  return out;
}

CirclesTimesLines::CirclesTimesLines(std::size_t circles, std::size_t axes, double axis_extent)
    : Chart(Vec::Zero(static_cast<Eigen::Index>(circles + axes)), Vec::Zero(static_cast<Eigen::Index>(circles + axes)),
            std::vector<bool>(circles + axes, false)),
      circles_(circles),
      axes_(axes) {
  if (circles + axes == 0) throw ShapeError("CirclesTimesLines: empty product");
  for (std::size_t i = 0; i < circles; ++i) {
    upper_(static_cast<Eigen::Index>(i)) = kTwoPi;
    periodic_[i] = true;
  }
  for (std::size_t i = circles; i < circles + axes; ++i) {
    lower_(static_cast<Eigen::Index>(i)) = -axis_extent;
    upper_(static_cast<Eigen::Index>(i)) = axis_extent;
  }
}

ChartEval CirclesTimesLines::eval(const Vec& u) const {
  ChartEval e = blank(embed_dim(), intrinsic_dim());
  for (std::size_t c = 0; c < circles_; ++c) {
    const auto i = static_cast<Eigen::Index>(c);
    const std::size_t r0 = 2 * c;
    const double cs = std::cos(u(i)), sn = std::sin(u(i));
    e.sigma(static_cast<Eigen::Index>(r0)) = cs;
    e.sigma(static_cast<Eigen::Index>(r0 + 1)) = sn;
    e.jacobian(static_cast<Eigen::Index>(r0), i) = -sn;
    e.jacobian(static_cast<Eigen::Index>(r0 + 1), i) = cs;
    e.hessian[r0](i, i) = -cs;
    e.hessian[r0 + 1](i, i) = -sn;
  }
  for (std::size_t a = 0; a < axes_; ++a) {
    const auto i = static_cast<Eigen::Index>(circles_ + a);
    const auto r = static_cast<Eigen::Index>(2 * circles_ + a);
    e.sigma(r) = u(i);
    e.jacobian(r, i) = 1.0;
  }
  return e;
}

TorusChart::TorusChart(double major, double minor)
    : Chart(Vec::Zero(2), Vec::Constant(2, kTwoPi), {true, true}), major_(major), minor_(minor) {
  if (!(major > minor && minor > 0.0)) throw ShapeError("TorusChart: need R > r > 0");
}

ChartEval TorusChart::eval(const Vec& u) const {
  ChartEval e = blank(3, 2);
  const double cu = std::cos(u(0)), su = std::sin(u(0)), cv = std::cos(u(1)), sv = std::sin(u(1));
  const double rho = major_ + minor_ * cv;
  e.sigma << rho * cu, rho * su, minor_ * sv;
  e.jacobian << -rho * su, -minor_ * sv * cu,  //
      rho * cu, -minor_ * sv * su,              //
      0.0, minor_ * cv;
  e.hessian[0] << -rho * cu, minor_ * sv * su, minor_ * sv * su, -minor_ * cv * cu;
  e.hessian[1] << -rho * su, -minor_ * sv * cu, -minor_ * sv * cu, -minor_ * cv * su;
  e.hessian[2] << 0.0, 0.0, 0.0, -minor_ * sv;
  return e;
}

ChartEval klein_bottle_chart(double u1, double u2, double a, double b) {
  ChartEval e = blank(4, 2);
  const double c1 = std::cos(u1), s1 = std::sin(u1);
  const double ch = std::cos(0.5 * u1), sh = std::sin(0.5 * u1);
  const double c2 = std::cos(u2), s2 = std::sin(u2);
  const double rho = a + b * c2;
  e.sigma << rho * c1, rho * s1, b * s2 * ch, b * s2 * sh;
  e.jacobian << -rho * s1, -b * s2 * c1,  //
      rho * c1, -b * s2 * s1,             //
      -0.5 * b * s2 * sh, b * c2 * ch,    //
      0.5 * b * s2 * ch, b * c2 * sh;
  e.hessian[0] << -rho * c1, b * s2 * s1, b * s2 * s1, -b * c2 * c1;
  e.hessian[1] << -rho * s1, -b * s2 * c1, -b * s2 * c1, -b * c2 * s1;
  e.hessian[2] << -0.25 * b * s2 * ch, -0.5 * b * c2 * sh, -0.5 * b * c2 * sh, -b * s2 * ch;
  e.hessian[3] << -0.25 * b * s2 * sh, 0.5 * b * c2 * ch, 0.5 * b * c2 * ch, -b * s2 * sh;
  return e;
}

KleinChart::KleinChart(double a, double b)
    : Chart(Vec::Zero(2), Vec::Constant(2, kTwoPi), {true, true}), a_(a), b_(b) {
  if (!(a > b && b > 0.0)) throw ShapeError("KleinChart: need a > b > 0");
}

ChartEval KleinChart::eval(const Vec& u) const { return klein_bottle_chart(u(0), u(1), a_, b_); }

Vec KleinChart::canonical(const Vec& u) const {
  // Shift u1 by whole turns; every odd turn reflects u2.
  const double turns = std::floor(u(0) / kTwoPi);
  Vec out(2);
  out(0) = u(0) - turns * kTwoPi;
  const bool odd = std::fmod(std::abs(turns), 2.0) == 1.0;
  out(1) = wrap(odd ? -u(1) : u(1), 0.0, kTwoPi);
  return out;
}

}  // namespace gdvae::manifold
