#include "gdvae/pde/burgers.hpp"

#include "gdvae/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

namespace gdvae::pde {

namespace {

constexpr double kPi = std::numbers::pi;
using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

/// Normalized coefficients c_j with f(x_m) = sum_j c_j exp(2 pi i j m / n), j in FFT order.
Spectrum forward(const Field1D& f) {
  Eigen::FFT<double> fft;
  std::vector<Complex> in(f.size()), out;
  for (Eigen::Index i = 0; i < f.size(); ++i) in[static_cast<std::size_t>(i)] = f(i);
  fft.fwd(out, in);
  for (auto& c : out) c /= static_cast<double>(f.size());
  return out;
}

Field1D inverse_real(const Spectrum& c) {
  Eigen::FFT<double> fft;
  Spectrum scaled = c, out;
  for (auto& v : scaled) v *= static_cast<double>(c.size());
  fft.inv(out, scaled);
  Field1D f(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) f(static_cast<Eigen::Index>(i)) = out[i].real();
  return f;
}

/// Signed wavenumber of FFT slot j; the Nyquist slot of an even grid maps to 0
/// so derivatives and antiderivatives drop it.
double wavenumber(std::size_t j, std::size_t n) {
  if (2 * j == n) return 0.0;
  return 2 * j < n ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
}

void require_zero_mean(const Field1D& u) {
  const double mean = u.mean();
  if (std::abs(mean) > 1e-12) {
    throw SolverError("Cole-Hopf transform needs a zero-mean field (mean = " + std::to_string(mean) + ")");
  }
}

}  // namespace

Field1D grid_points(std::size_t n) {
  Field1D x(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) x(static_cast<Eigen::Index>(k)) = static_cast<double>(k) / static_cast<double>(n);
  return x;
}

Field1D cole_hopf_forward(const Field1D& u, double nu) {
  if (nu <= 0.0) throw SolverError("Cole-Hopf transform needs nu > 0");
  require_zero_mean(u);
  const std::size_t n = static_cast<std::size_t>(u.size());
  Spectrum c = forward(u);
  for (std::size_t j = 0; j < n; ++j) {
    const double k = wavenumber(j, n);
    c[j] = k == 0.0 ? Complex(0.0) : c[j] / Complex(0.0, 2.0 * kPi * k);
  }
  Field1D integral = inverse_real(c);
  integral.array() -= integral(0);
  Field1D exponent = -integral / (2.0 * nu);
  exponent.array() -= exponent.maxCoeff();
  if (exponent.minCoeff() < -690.0) throw SolverError("Cole-Hopf transform underflows; amplitude too large for nu");
  return exponent.array().exp().matrix();
}

Field1D cole_hopf_inverse(const Field1D& phi, double nu) {
  if (phi.minCoeff() <= 0.0) throw SolverError("inverse Cole-Hopf transform needs phi > 0");
  const std::size_t n = static_cast<std::size_t>(phi.size());
  Spectrum c = forward(phi);
  for (std::size_t j = 0; j < n; ++j) c[j] *= Complex(0.0, 2.0 * kPi * wavenumber(j, n));
  const Field1D dphi = inverse_real(c);
  return (-2.0 * nu * dphi.array() / phi.array()).matrix();
}

SpectralBurgers::SpectralBurgers(const Field1D& u0, double nu, std::size_t modes) : nu_(nu) {
  const std::size_t n = static_cast<std::size_t>(u0.size());
  if (n >= modes) throw ShapeError("SpectralBurgers: input grid must be coarser than the internal grid");
  require_zero_mean(u0);

  // Trig interpolation of u0 onto the internal grid (Nyquist energy split evenly).
  const Spectrum c = forward(u0);
  Spectrum padded(modes, Complex(0.0));
  for (std::size_t j = 0; j < n; ++j) {
    if (2 * j == n) {
      padded[j] += 0.5 * c[j];
      padded[modes - j] += 0.5 * c[j];
    } else if (2 * j < n) {
      padded[j] = c[j];
    } else {
      padded[modes - (n - j)] = c[j];
    }
  }
  const Field1D u_fine = inverse_real(padded);
  const Spectrum phi = forward(cole_hopf_forward(u_fine, nu));

  phi_hat_.assign(modes, Complex(0.0));
  for (std::size_t j = 0; j < modes; ++j) {
    const double k = 2 * j < modes ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(modes);
    phi_hat_[static_cast<std::size_t>(k + static_cast<double>(modes / 2))] = phi[j];
  }
}

Field1D SpectralBurgers::evaluate(double t, std::size_t n_out) const {
  if (t < 0.0) throw SolverError("SpectralBurgers: negative time");
  const std::size_t modes = phi_hat_.size();
  const long half = static_cast<long>(modes / 2);
  std::vector<Complex> damped(modes);
  for (std::size_t s = 0; s < modes; ++s) {
    const double k = static_cast<double>(static_cast<long>(s) - half);
    damped[s] = phi_hat_[s] * std::exp(-4.0 * kPi * kPi * k * k * nu_ * t);
  }

  Field1D u(static_cast<Eigen::Index>(n_out));
  for (std::size_t j = 0; j < n_out; ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(n_out);
    const Complex base = std::polar(1.0, 2.0 * kPi * x);
    const Complex base_inv = std::conj(base);
    Complex phi = damped[static_cast<std::size_t>(half)];
    Complex dphi(0.0);
    Complex up = base, down = base_inv;
    for (long k = 1; k <= half; ++k) {
      const double w = 2.0 * kPi * static_cast<double>(k);
      const Complex cn = damped[static_cast<std::size_t>(half - k)];
      phi += cn * down;
      dphi += Complex(0.0, -w) * cn * down;
      if (k < half) {
        const Complex cp = damped[static_cast<std::size_t>(half + k)];
        phi += cp * up;
        dphi += Complex(0.0, w) * cp * up;
      }
      up *= base;
      down *= base_inv;
    }
    const double p = signed_phi_ ? std::abs(phi.real()) : phi.real();
    if (!(p > 1e-300)) throw SolverError("SpectralBurgers: phi underflow");
    u(static_cast<Eigen::Index>(j)) = -2.0 * nu_ * dphi.real() / phi.real();
  }
  return u;
}

SpectralBurgers SpectralBurgers::truncated(std::size_t max_k) const {
  SpectralBurgers out = *this;
  out.signed_phi_ = true;
  const auto half = static_cast<long>(phi_hat_.size() / 2);
  for (std::size_t s = 0; s < phi_hat_.size(); ++s) {
    if (std::labs(static_cast<long>(s) - half) > static_cast<long>(max_k)) out.phi_hat_[s] = 0.0;
  }
  return out;
}

Field1D burgers_solve_spectral(const Field1D& u0, double nu, double t, std::size_t modes) {
  return SpectralBurgers(u0, nu, modes).evaluate(t, static_cast<std::size_t>(u0.size()));
}

double burgers_fd_stable_dt(const Field1D& u0, double nu) {
  const double dx = 1.0 / static_cast<double>(u0.size());
  const double umax = std::max(u0.cwiseAbs().maxCoeff(), 1e-12);
  return 0.4 * std::min(dx * dx / (2.0 * nu), dx / umax);
}

Field1D burgers_solve_fd(const Field1D& u0, double nu, double t, double dt) {
  const Eigen::Index n = u0.size();
  if (n < 3) throw SolverError("burgers_solve_fd: need at least 3 grid points");
  if (t == 0.0) return u0;
  const double dx = 1.0 / static_cast<double>(n);
  const auto steps = static_cast<long>(std::ceil(t / dt - 1e-9));
  const double h = t / static_cast<double>(steps);
  const double c_adv = 1.0 / (4.0 * dx), c_diff = nu / (dx * dx);

  auto rhs = [&](const Eigen::ArrayXd& u, Eigen::ArrayXd& out) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double l = u((i + n - 1) % n), r = u((i + 1) % n);
      out(i) = -c_adv * (r * r - l * l) + c_diff * (r - 2.0 * u(i) + l);
    }
  };

  Eigen::ArrayXd u = u0.array(), k1(n), k2(n), mid(n);
  const double bound = 1e3 * std::max(1.0, u.abs().maxCoeff());
  for (long s = 0; s < steps; ++s) {
    rhs(u, k1);
    mid = u + h * k1;
    rhs(mid, k2);
    u += 0.5 * h * (k1 + k2);
    if (!u.allFinite() || u.abs().maxCoeff() > bound) {
      throw SolverError("burgers_solve_fd: solution blew up at step " + std::to_string(s) + "; reduce dt");
    }
  }
  return u.matrix();
}

const char* to_string(IcFamily f) {
  switch (f) {
    case IcFamily::u1: return "u1";
    case IcFamily::periodic: return "periodic";
    case IcFamily::doubly_periodic: return "doubly_periodic";
  }
  return "unknown";
}

IcFamily ic_family_from_string(const std::string& s) {
  for (IcFamily f : {IcFamily::u1, IcFamily::periodic, IcFamily::doubly_periodic}) {
    if (s == to_string(f)) return f;
  }
  throw ConfigError("dataset.family", "unknown initial-condition family '" + s + "'");
}

std::size_t ic_param_count(IcFamily f) { return f == IcFamily::doubly_periodic ? 2 : 1; }

Field1D sample_ic(IcFamily family, const std::vector<double>& params, std::size_t n) {
  if (params.size() != ic_param_count(family)) {
    throw ConfigError("dataset.params", std::string("wrong parameter count for family ") + to_string(family));
  }
  const double hi = family == IcFamily::doubly_periodic ? 2.0 * kPi : 1.0;
  for (double p : params) {
    if (!(p >= 0.0 && p <= hi)) throw ConfigError("dataset.params", "initial-condition parameter out of range");
  }
  const Field1D x = grid_points(n);
  Field1D u(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const double th = 2.0 * kPi * x(static_cast<Eigen::Index>(k));
    double v = 0.0;
    switch (family) {
      case IcFamily::u1: {
        const double c = std::cos(th);
        v = params[0] * std::sin(th) + (1.0 - params[0]) * c * c * c;
        break;
      }
      case IcFamily::periodic: {
        const double a = 2.0 * kPi * params[0];
        v = std::cos(a) * std::cos(th) + std::sin(a) * std::sin(th);
        break;
      }
      case IcFamily::doubly_periodic:
        v = std::cos(params[0]) * std::cos(th) + std::sin(params[0]) * std::sin(th) +
            std::cos(params[1]) * std::cos(2.0 * th) + std::sin(params[1]) * std::sin(2.0 * th);
        break;
    }
    u(static_cast<Eigen::Index>(k)) = v;
  }
  return u;
}

}  // namespace gdvae::pde
