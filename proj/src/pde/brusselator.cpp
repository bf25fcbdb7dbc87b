#include "gdvae/pde/brusselator.hpp"

#include "gdvae/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>

namespace gdvae::pde {

namespace {

constexpr double kPi = std::numbers::pi;
using Complex = std::complex<double>;
using CGrid = Eigen::Array<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void laplacian(const Grid& f, Grid& out, double inv_dx2) {
  const Eigen::Index ny = f.rows(), nx = f.cols();
  for (Eigen::Index i = 0; i < ny; ++i) {
    const double* up = f.data() + ((i + ny - 1) % ny) * nx;
    const double* row = f.data() + i * nx;
    const double* down = f.data() + ((i + 1) % ny) * nx;
    double* o = out.data() + i * nx;
    if (nx == 1) {
      o[0] = (up[0] + down[0] - 2.0 * row[0]) * inv_dx2;
      continue;
    }
    o[0] = (up[0] + down[0] + row[nx - 1] + row[1] - 4.0 * row[0]) * inv_dx2;
    for (Eigen::Index j = 1; j < nx - 1; ++j) {
      o[j] = (up[j] + down[j] + row[j - 1] + row[j + 1] - 4.0 * row[j]) * inv_dx2;
    }
    o[nx - 1] = (up[nx - 1] + down[nx - 1] + row[nx - 2] + row[0] - 4.0 * row[nx - 1]) * inv_dx2;
  }
}

class Fft2 {
 public:
  Fft2(Eigen::Index ny, Eigen::Index nx) : ny_(ny), nx_(nx), row_(static_cast<std::size_t>(nx)), col_(static_cast<std::size_t>(ny)) {}

  CGrid forward(const Grid& f) {
    CGrid out(ny_, nx_);
    for (Eigen::Index i = 0; i < ny_; ++i) {
      for (Eigen::Index j = 0; j < nx_; ++j) row_[static_cast<std::size_t>(j)] = f(i, j);
      fft_.fwd(tmp_, row_);
      for (Eigen::Index j = 0; j < nx_; ++j) out(i, j) = tmp_[static_cast<std::size_t>(j)];
    }
    columns(out, true);
    return out;
  }

  Grid inverse(CGrid f) {
    columns(f, false);
    Grid out(ny_, nx_);
    for (Eigen::Index i = 0; i < ny_; ++i) {
      for (Eigen::Index j = 0; j < nx_; ++j) row_[static_cast<std::size_t>(j)] = f(i, j);
      fft_.inv(tmp_, row_);
      for (Eigen::Index j = 0; j < nx_; ++j) out(i, j) = tmp_[static_cast<std::size_t>(j)].real();
    }
    return out;
  }

 private:
  void columns(CGrid& f, bool fwd) {
    for (Eigen::Index j = 0; j < nx_; ++j) {
      for (Eigen::Index i = 0; i < ny_; ++i) col_[static_cast<std::size_t>(i)] = f(i, j);
      if (fwd) fft_.fwd(tmp_, col_);
      else fft_.inv(tmp_, col_);
      for (Eigen::Index i = 0; i < ny_; ++i) f(i, j) = tmp_[static_cast<std::size_t>(i)];
    }
  }

  Eigen::Index ny_, nx_;
  Eigen::FFT<double> fft_;
  std::vector<Complex> row_, col_, tmp_;
};

/// Eigenvalues of the periodic 5-point Laplacian.
Grid laplacian_symbol(Eigen::Index ny, Eigen::Index nx, double dx) {
  Grid s(ny, nx);
  for (Eigen::Index i = 0; i < ny; ++i) {
    for (Eigen::Index j = 0; j < nx; ++j) {
      s(i, j) = (2.0 * std::cos(2.0 * kPi * static_cast<double>(j) / static_cast<double>(nx)) - 2.0 +
                 2.0 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(ny)) - 2.0) /
                (dx * dx);
    }
  }
  return s;
}

void check_finite(const Field2D& f, double t) {
  const double bound = 1e6;
  if (!f.u.allFinite() || !f.v.allFinite() || f.u.abs().maxCoeff() > bound || f.v.abs().maxCoeff() > bound) {
    throw SolverError("brusselator_solve: solution blew up near t = " + std::to_string(t));
  }
}

}  // namespace

Eigen::VectorXd Field2D::flatten() const {
  const Eigen::Index cells = u.size();
  Eigen::VectorXd out(2 * cells);
  out.head(cells) = Eigen::Map<const Eigen::VectorXd>(u.data(), cells);
  out.tail(cells) = Eigen::Map<const Eigen::VectorXd>(v.data(), cells);
  return out;
}

Field2D Field2D::unflatten(const Eigen::VectorXd& flat, std::size_t ny, std::size_t nx) {
  const auto cells = static_cast<Eigen::Index>(ny * nx);
  if (flat.size() != 2 * cells) throw ShapeError("Field2D::unflatten: size mismatch");
  Field2D f;
  f.u = Eigen::Map<const Grid>(flat.data(), static_cast<Eigen::Index>(ny), static_cast<Eigen::Index>(nx));
  f.v = Eigen::Map<const Grid>(flat.data() + cells, static_cast<Eigen::Index>(ny), static_cast<Eigen::Index>(nx));
  return f;
}

const char* to_string(Integrator i) { return i == Integrator::explicit_euler ? "explicit-euler" : "semi-implicit"; }

Integrator integrator_from_string(const std::string& s) {
  if (s == "explicit-euler") return Integrator::explicit_euler;
  if (s == "semi-implicit") return Integrator::semi_implicit;
  throw ConfigError("brusselator.integrator", "unknown integrator '" + s + "'");
}

void BrusselatorParams::validate() const {
  if (!(d1 >= 0.0 && d2 >= 0.0)) throw ConfigError("brusselator.D", "diffusivities must be non-negative");
  if (!(dt > 0.0 && dx > 0.0)) throw ConfigError("brusselator.dt", "dt and dx must be positive");
  if (integrator == Integrator::explicit_euler && dt > dx * dx / (4.0 * std::max({d1, d2, 1e-300}))) {
    throw ConfigError("brusselator.dt", "explicit Euler needs dt <= dx^2 / (4 D)");
  }
}

BrusselatorTrajectory brusselator_solve(const Field2D& init, const BrusselatorParams& p, double t_end, double stride,
                                        double t_first) {
  p.validate();
  if (init.u.rows() != init.v.rows() || init.u.cols() != init.v.cols()) throw ShapeError("brusselator_solve: channel mismatch");
  if (!(stride > 0.0)) throw ConfigError("brusselator.stride", "snapshot stride must be positive");

  const auto total_steps = static_cast<long>(std::llround(t_end / p.dt));
  const double inv_dx2 = 1.0 / (p.dx * p.dx);
  BrusselatorTrajectory traj;
  auto next_snapshot = [&](std::size_t idx) {
    return static_cast<long>(std::llround((t_first + static_cast<double>(idx) * stride) / p.dt));
  };

  Field2D f = init;
  Grid lu(f.u.rows(), f.u.cols()), lv(f.u.rows(), f.u.cols()), uuv(f.u.rows(), f.u.cols());
  Fft2 fft(f.u.rows(), f.u.cols());
  Grid denom_u, denom_v;
  if (p.integrator == Integrator::semi_implicit) {
    const Grid sym = laplacian_symbol(f.u.rows(), f.u.cols(), p.dx);
    denom_u = 1.0 - p.dt * p.d1 * sym;
    denom_v = 1.0 - p.dt * p.d2 * sym;
  }

  long target = next_snapshot(0);
  for (long step = 0; step <= total_steps; ++step) {
    while (step == target) {
      traj.times.push_back(static_cast<double>(step) * p.dt);
      traj.snapshots.push_back(f);
      target = next_snapshot(traj.times.size());
    }
    if (step == total_steps) break;

    uuv = f.u * f.u * f.v;
    Grid fu = p.a - (1.0 + p.b) * f.u + uuv;
    Grid gv = p.b * f.u - uuv;
    if (p.integrator == Integrator::explicit_euler) {
      laplacian(f.u, lu, inv_dx2);
      laplacian(f.v, lv, inv_dx2);
      f.u += p.dt * (p.d1 * lu + fu);
      f.v += p.dt * (p.d2 * lv + gv);
    } else {
      f.u = fft.inverse(fft.forward(f.u + p.dt * fu) / denom_u.cast<Complex>());
      f.v = fft.inverse(fft.forward(f.v + p.dt * gv) / denom_v.cast<Complex>());
    }
    if ((step & 1023) == 0) check_finite(f, static_cast<double>(step) * p.dt);
  }
  check_finite(f, t_end);
  return traj;
}

Field2D brusselator_ic(double alpha, std::size_t nx, std::size_t ny) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("brusselator.alpha", "alpha must lie in [0, 1]");
  auto profile = [alpha](double s) {
    const double c = std::cos(s);
    return alpha * std::sin(s) + (1.0 - alpha) * c * c * c;
  };
  Field2D f;
  f.u.resize(static_cast<Eigen::Index>(ny), static_cast<Eigen::Index>(nx));
  f.v.resize(static_cast<Eigen::Index>(ny), static_cast<Eigen::Index>(nx));
  for (std::size_t i = 0; i < ny; ++i) {
    for (std::size_t j = 0; j < nx; ++j) {
      f.u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          profile(2.0 * kPi * static_cast<double>(j) / static_cast<double>(nx));
      f.v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          profile(2.0 * kPi * static_cast<double>(i) / static_cast<double>(ny));
    }
  }
  return f;
}

}  // namespace gdvae::pde
