#include "gdvae/diffcore/ops.hpp"

#include "gdvae/errors.hpp"

#include <cmath>

namespace gdvae::diff {

namespace {

Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw ShapeError("op on a detached variable");
  return *a.tape;
}

void same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw ShapeError("operands recorded on different tapes");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

// Batched 4D view of a conv input: [B, C, H, W]. Rank-3 inputs get B = 1.
struct Planes {
  std::size_t batch, channels, height, width;
};

Planes planes_of(const Tensor& x, const char* op) {
  if (x.rank() == 3) return {1, x.extent(0), x.extent(1), x.extent(2)};
  if (x.rank() == 4) return {x.extent(0), x.extent(1), x.extent(2), x.extent(3)};
  throw ShapeError(std::string(op) + ": expected [C,H,W] or [B,C,H,W], got " + to_string(x.shape()));
}

// cols((c*k + ki)*k + kj, oi*wo + oj) = in(c, oi*s - p + ki, oj*s - p + kj)
void im2col(const double* in, std::size_t c_in, std::size_t h, std::size_t w, std::size_t k, ConvGeometry g,
            std::size_t ho, std::size_t wo, double* cols) {
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t c = 0; c < c_in; ++c) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        double* row = cols + ((c * k + ki) * k + kj) * ho * wo;
        for (std::size_t oi = 0; oi < ho; ++oi) {
          const auto ii = static_cast<std::ptrdiff_t>(oi * g.stride + ki) - pad;
          for (std::size_t oj = 0; oj < wo; ++oj) {
            const auto jj = static_cast<std::ptrdiff_t>(oj * g.stride + kj) - pad;
            const bool inside = ii >= 0 && jj >= 0 && ii < static_cast<std::ptrdiff_t>(h) &&
                                jj < static_cast<std::ptrdiff_t>(w);
            row[oi * wo + oj] = inside ? in[(c * h + static_cast<std::size_t>(ii)) * w + static_cast<std::size_t>(jj)] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, std::size_t c_in, std::size_t h, std::size_t w, std::size_t k, ConvGeometry g,
            std::size_t ho, std::size_t wo, double* out) {
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t c = 0; c < c_in; ++c) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const double* row = cols + ((c * k + ki) * k + kj) * ho * wo;
        for (std::size_t oi = 0; oi < ho; ++oi) {
          const auto ii = static_cast<std::ptrdiff_t>(oi * g.stride + ki) - pad;
          if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t oj = 0; oj < wo; ++oj) {
            const auto jj = static_cast<std::ptrdiff_t>(oj * g.stride + kj) - pad;
            if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(w)) continue;
            out[(c * h + static_cast<std::size_t>(ii)) * w + static_cast<std::size_t>(jj)] += row[oi * wo + oj];
          }
        }
      }
    }
  }
}

using ColMatrix = Eigen::Map<RowMatrix>;
using ConstColMatrix = Eigen::Map<const RowMatrix>;

}  // namespace

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, ConvGeometry g) {
  if (g.stride == 0) throw ShapeError("conv: stride must be positive");
  const std::size_t padded = in + 2 * g.padding;
  if (padded < kernel) throw ShapeError("conv: kernel larger than padded input");
  return (padded - kernel) / g.stride + 1;
}

std::size_t tconv_output_extent(std::size_t in, std::size_t kernel, ConvGeometry g) {
  if (in == 0 || g.stride == 0) throw ShapeError("tconv: empty input or zero stride");
  const std::size_t full = (in - 1) * g.stride + kernel;
  if (full <= 2 * g.padding) throw ShapeError("tconv: padding consumes the whole output");
  return full - 2 * g.padding;
}

Var affine(Var x, Var W, std::optional<Var> b) {
  Tape& t = tape_of(x);
  same_tape(x, W);
  const Tensor& xv = x.value();
  const Tensor& Wv = W.value();
  if (Wv.rank() != 2) throw ShapeError("affine: W must be rank 2, got " + to_string(Wv.shape()));
  const std::size_t out = Wv.extent(0), in = Wv.extent(1);
  const bool batched = xv.rank() == 2;
  if (!(batched || xv.rank() == 1) || xv.shape().back() != in) {
    throw ShapeError("affine: x " + to_string(xv.shape()) + " does not conform to W " + to_string(Wv.shape()));
  }
  const std::size_t rows = batched ? xv.extent(0) : 1;
  if (b) {
    same_tape(x, *b);
    if (b->value().size() != out) throw ShapeError("affine: bias " + to_string(b->value().shape()) + " for " + std::to_string(out) + " outputs");
  }

  Tensor y(batched ? Shape{rows, out} : Shape{out});
  ConstColMatrix X(xv.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(in));
  ConstColMatrix Wm(Wv.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  ColMatrix Y(y.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(out));
  Y.noalias() = X * Wm.transpose();
  if (b) {
    Eigen::Map<const Eigen::RowVectorXd> bv(b->value().data(), static_cast<Eigen::Index>(out));
    Y.rowwise() += bv;
  }

  std::vector<std::size_t> inputs{x.id, W.id};
  if (b) inputs.push_back(b->id);
  const auto xi = x.id, wi = W.id;
  const std::optional<std::size_t> bi = b ? std::optional<std::size_t>(b->id) : std::nullopt;
  return t.record(std::move(y), std::move(inputs), [=](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    ConstColMatrix G(g.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(out));
    const Tensor& xs = tp.value(xi);
    const Tensor& ws = tp.value(wi);
    ConstColMatrix Xs(xs.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(in));
    ConstColMatrix Ws(ws.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    if (tp.requires_grad(xi)) {
      Tensor& gx = tp.grad(xi);
      ColMatrix(gx.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(in)).noalias() += G * Ws;
    }
    if (tp.requires_grad(wi)) {
      Tensor& gw = tp.grad(wi);
      ColMatrix(gw.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)).noalias() += G.transpose() * Xs;
    }
    if (bi && tp.requires_grad(*bi)) {
      Tensor& gb = tp.grad(*bi);
      Eigen::Map<Eigen::RowVectorXd>(gb.data(), static_cast<Eigen::Index>(out)) += G.colwise().sum();
    }
  });
}

Var activation(Var x, Activation a) {
  Tape& t = tape_of(x);
  if (a.kind == ActivationKind::identity) return x;
  const double s = a.kind == ActivationKind::relu ? 0.0 : a.slope;
  Tensor y = x.value();
  for (auto& v : y.values()) v = v > 0.0 ? v : s * v;
  const auto xi = x.id;
  return t.record(std::move(y), {xi}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    const Tensor& g = tp.grad(self);
    const Tensor& xs = tp.value(xi);
    Tensor& gx = tp.grad(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += xs[i] > 0.0 ? g[i] : s * g[i];
  });
}

Var conv2d(Var x, Var kernel, std::optional<Var> bias, ConvGeometry g) {
  Tape& t = tape_of(x);
  same_tape(x, kernel);
  const Tensor& xv = x.value();
  const Tensor& kv = kernel.value();
  const Planes p = planes_of(xv, "conv2d");
  if (kv.rank() != 4 || kv.extent(1) != p.channels || kv.extent(2) != kv.extent(3)) {
    throw ShapeError("conv2d: kernel " + to_string(kv.shape()) + " incompatible with input " + to_string(xv.shape()));
  }
  const std::size_t c_out = kv.extent(0), k = kv.extent(2);
  const std::size_t ho = conv_output_extent(p.height, k, g), wo = conv_output_extent(p.width, k, g);
  if (bias && bias->value().size() != c_out) throw ShapeError("conv2d: bias extent mismatch");

  const std::size_t patch = p.channels * k * k, npix = ho * wo;
  Shape out_shape = xv.rank() == 4 ? Shape{p.batch, c_out, ho, wo} : Shape{c_out, ho, wo};
  Tensor y(out_shape);
  ConstColMatrix K(kv.data(), static_cast<Eigen::Index>(c_out), static_cast<Eigen::Index>(patch));
  RowMatrix cols(patch, npix);
  const std::size_t in_stride = p.channels * p.height * p.width, out_stride = c_out * npix;
  for (std::size_t b = 0; b < p.batch; ++b) {
    im2col(xv.data() + b * in_stride, p.channels, p.height, p.width, k, g, ho, wo, cols.data());
    ColMatrix Y(y.data() + b * out_stride, static_cast<Eigen::Index>(c_out), static_cast<Eigen::Index>(npix));
    Y.noalias() = K * cols;
    if (bias) {
      for (std::size_t c = 0; c < c_out; ++c) Y.row(static_cast<Eigen::Index>(c)).array() += bias->value()[c];
    }
  }

  std::vector<std::size_t> inputs{x.id, kernel.id};
  if (bias) inputs.push_back(bias->id);
  const auto xi = x.id, ki = kernel.id;
  const std::optional<std::size_t> bi = bias ? std::optional<std::size_t>(bias->id) : std::nullopt;
  return t.record(std::move(y), std::move(inputs), [=](Tape& tp, std::size_t self) {
    const Tensor& gy = tp.grad(self);
    const Tensor& xs = tp.value(xi);
    const Tensor& ks = tp.value(ki);
    ConstColMatrix Ks(ks.data(), static_cast<Eigen::Index>(c_out), static_cast<Eigen::Index>(patch));
    const bool want_x = tp.requires_grad(xi), want_k = tp.requires_grad(ki);
    const bool want_b = bi && tp.requires_grad(*bi);
    RowMatrix c(patch, npix);
    for (std::size_t b = 0; b < p.batch; ++b) {
      ConstColMatrix G(gy.data() + b * out_stride, static_cast<Eigen::Index>(c_out), static_cast<Eigen::Index>(npix));
      if (want_k) {
        im2col(xs.data() + b * in_stride, p.channels, p.height, p.width, k, g, ho, wo, c.data());
        Tensor& gk = tp.grad(ki);
        ColMatrix(gk.data(), static_cast<Eigen::Index>(c_out), static_cast<Eigen::Index>(patch)).noalias() += G * c.transpose();
      }
      if (want_b) {
        Tensor& gb = tp.grad(*bi);
        for (std::size_t ch = 0; ch < c_out; ++ch) gb[ch] += G.row(static_cast<Eigen::Index>(ch)).sum();
      }
      if (want_x) {
        c.noalias() = Ks.transpose() * G;
        Tensor& gx = tp.grad(xi);
        col2im(c.data(), p.channels, p.height, p.width, k, g, ho, wo, gx.data() + b * in_stride);
      }
    }
  });
}

Var tconv2d(Var x, Var kernel, std::optional<Var> bias, ConvGeometry g) {
  Tape& t = tape_of(x);
  same_tape(x, kernel);
  const Tensor& xv = x.value();
  const Tensor& kv = kernel.value();
  const Planes p = planes_of(xv, "tconv2d");
  if (kv.rank() != 4 || kv.extent(0) != p.channels || kv.extent(2) != kv.extent(3)) {
    throw ShapeError("tconv2d: kernel " + to_string(kv.shape()) + " incompatible with input " + to_string(xv.shape()));
  }
  const std::size_t c_out = kv.extent(1), k = kv.extent(2);
  const std::size_t ho = tconv_output_extent(p.height, k, g), wo = tconv_output_extent(p.width, k, g);
  // The input grid must be exactly the conv2d output grid of the produced image.
  if (conv_output_extent(ho, k, g) != p.height || conv_output_extent(wo, k, g) != p.width) {
    throw ShapeError("tconv2d: geometry is not invertible for input " + to_string(xv.shape()));
  }
  if (bias && bias->value().size() != c_out) throw ShapeError("tconv2d: bias extent mismatch");

  const std::size_t patch = c_out * k * k, npix_in = p.height * p.width, npix_out = ho * wo;
  Shape out_shape = xv.rank() == 4 ? Shape{p.batch, c_out, ho, wo} : Shape{c_out, ho, wo};
  Tensor y(out_shape);
  ConstColMatrix K(kv.data(), static_cast<Eigen::Index>(p.channels), static_cast<Eigen::Index>(patch));
  RowMatrix cols(patch, npix_in);
  const std::size_t in_stride = p.channels * npix_in, out_stride = c_out * npix_out;
  for (std::size_t b = 0; b < p.batch; ++b) {
    ConstColMatrix X(xv.data() + b * in_stride, static_cast<Eigen::Index>(p.channels), static_cast<Eigen::Index>(npix_in));
    cols.noalias() = K.transpose() * X;
    double* yb = y.data() + b * out_stride;
    col2im(cols.data(), c_out, ho, wo, k, g, p.height, p.width, yb);
    if (bias) {
      for (std::size_t c = 0; c < c_out; ++c) {
        for (std::size_t i = 0; i < npix_out; ++i) yb[c * npix_out + i] += bias->value()[c];
      }
    }
  }

  std::vector<std::size_t> inputs{x.id, kernel.id};
  if (bias) inputs.push_back(bias->id);
  const auto xi = x.id, ki = kernel.id;
  const std::optional<std::size_t> bi = bias ? std::optional<std::size_t>(bias->id) : std::nullopt;
  const std::size_t c_in = p.channels, batch = p.batch, hin = p.height, win = p.width;
  return t.record(std::move(y), std::move(inputs), [=](Tape& tp, std::size_t self) {
    const Tensor& gy = tp.grad(self);
    const Tensor& xs = tp.value(xi);
    const Tensor& ks = tp.value(ki);
    ConstColMatrix Ks(ks.data(), static_cast<Eigen::Index>(c_in), static_cast<Eigen::Index>(patch));
    const bool want_x = tp.requires_grad(xi), want_k = tp.requires_grad(ki);
    const bool want_b = bi && tp.requires_grad(*bi);
    RowMatrix c(patch, npix_in);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* gb_out = gy.data() + b * out_stride;
      if (want_b) {
        Tensor& gb = tp.grad(*bi);
        for (std::size_t ch = 0; ch < c_out; ++ch) {
          double s = 0.0;
          for (std::size_t i = 0; i < npix_out; ++i) s += gb_out[ch * npix_out + i];
          gb[ch] += s;
        }
      }
      if (!want_x && !want_k) continue;
      im2col(gb_out, c_out, ho, wo, k, g, hin, win, c.data());
      if (want_x) {
        Tensor& gx = tp.grad(xi);
        ColMatrix(gx.data() + b * in_stride, static_cast<Eigen::Index>(c_in), static_cast<Eigen::Index>(npix_in)).noalias() += Ks * c;
      }
      if (want_k) {
        ConstColMatrix X(xs.data() + b * in_stride, static_cast<Eigen::Index>(c_in), static_cast<Eigen::Index>(npix_in));
        Tensor& gk = tp.grad(ki);
        ColMatrix(gk.data(), static_cast<Eigen::Index>(c_in), static_cast<Eigen::Index>(patch)).noalias() += X * c.transpose();
      }
    }
  });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor y = a.value();
  y += b.value();
  const auto ai = a.id, bi = b.id;
  return tape_of(a).record(std::move(y), {ai, bi}, [=](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ai)) tp.grad(ai) += g;
    if (tp.requires_grad(bi)) tp.grad(bi) += g;
  });
}

Var sub(Var a, Var b) {
  same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
  const auto ai = a.id, bi = b.id;
  return tape_of(a).record(std::move(y), {ai, bi}, [=](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ai)) tp.grad(ai) += g;
    if (tp.requires_grad(bi)) {
      Tensor& gb = tp.grad(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  const auto ai = a.id, bi = b.id;
  return tape_of(a).record(std::move(y), {ai, bi}, [=](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(ai)) {
      Tensor& ga = tp.grad(ai);
      const Tensor& bv = tp.value(bi);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.requires_grad(bi)) {
      Tensor& gb = tp.grad(bi);
      const Tensor& av = tp.value(ai);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var x, double c) {
  Tensor y = x.value();
  for (auto& v : y.values()) v *= c;
  const auto xi = x.id;
  return tape_of(x).record(std::move(y), {xi}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    const Tensor& g = tp.grad(self);
    Tensor& gx = tp.grad(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += c * g[i];
  });
}

Var exp(Var x) {
  Tensor y = x.value();
  for (auto& v : y.values()) v = std::exp(v);
  const auto xi = x.id;
  return tape_of(x).record(std::move(y), {xi}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    const Tensor& g = tp.grad(self);
    const Tensor& yv = tp.value(self);
    Tensor& gx = tp.grad(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * yv[i];
  });
}

Var square(Var x) {
  Tensor y = x.value();
  for (auto& v : y.values()) v *= v;
  const auto xi = x.id;
  return tape_of(x).record(std::move(y), {xi}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    const Tensor& g = tp.grad(self);
    const Tensor& xv = tp.value(xi);
    Tensor& gx = tp.grad(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += 2.0 * xv[i] * g[i];
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const auto xi = x.id;
  return tape_of(x).record(Tensor::scalar(s), {xi}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    const double g = tp.grad(self)[0];
    for (auto& v : tp.grad(xi).values()) v += g;
  });
}

Var reshape(Var x, Shape shape) {
  Tensor y = x.value().reshaped(std::move(shape));
  const auto xi = x.id;
  return tape_of(x).record(std::move(y), {xi}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    Tensor& gx = tp.grad(xi);
    const Tensor& g = tp.grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var select_columns(Var x, std::vector<std::size_t> cols) {
  const Tensor& xv = x.value();
  const bool batched = xv.rank() == 2;
  if (!(batched || xv.rank() == 1)) throw ShapeError("select_columns: rank must be 1 or 2");
  const std::size_t rows = batched ? xv.extent(0) : 1, n = xv.shape().back();
  for (auto c : cols) {
    if (c >= n) throw ShapeError("select_columns: column " + std::to_string(c) + " out of range");
  }
  Tensor y(batched ? Shape{rows, cols.size()} : Shape{cols.size()});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) y[r * cols.size() + j] = xv[r * n + cols[j]];
  }
  const auto xi = x.id;
  return tape_of(x).record(std::move(y), {xi}, [=, cols = std::move(cols)](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    const Tensor& g = tp.grad(self);
    Tensor& gx = tp.grad(xi);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < cols.size(); ++j) gx[r * n + cols[j]] += g[r * cols.size() + j];
    }
  });
}

Var linear_map(Var x, const RowMatrix& M, const Eigen::VectorXd& offset) {
  const Tensor& xv = x.value();
  const bool batched = xv.rank() == 2;
  if (!(batched || xv.rank() == 1) || static_cast<Eigen::Index>(xv.shape().back()) != M.cols()) {
    throw ShapeError("linear_map: x " + to_string(xv.shape()) + " vs matrix " + std::to_string(M.rows()) + "x" +
                     std::to_string(M.cols()));
  }
  if (offset.size() != 0 && offset.size() != M.rows()) throw ShapeError("linear_map: offset extent mismatch");
  const auto rows = static_cast<Eigen::Index>(batched ? xv.extent(0) : 1);
  const auto out = static_cast<std::size_t>(M.rows());
  Tensor y(batched ? Shape{static_cast<std::size_t>(rows), out} : Shape{out});
  ConstColMatrix X(xv.data(), rows, M.cols());
  ColMatrix Y(y.data(), rows, M.rows());
  Y.noalias() = X * M.transpose();
  if (offset.size() != 0) Y.rowwise() += offset.transpose();
  const auto xi = x.id;
  return tape_of(x).record(std::move(y), {xi}, [=](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    const Tensor& g = tp.grad(self);
    Tensor& gx = tp.grad(xi);
    ColMatrix(gx.data(), rows, M.cols()).noalias() += ConstColMatrix(g.data(), rows, M.rows()) * M;
  });
}

Var custom_gradient(Var x, const std::function<std::pair<Tensor, VjpFn>(const Tensor&)>& forward) {
  auto [y, vjp] = forward(x.value());
  if (!vjp) throw ShapeError("custom_gradient: no Jacobian application supplied");
  const auto xi = x.id;
  const Shape in_shape = x.value().shape();
  return tape_of(x).record(std::move(y), {xi}, [=, vjp = std::move(vjp)](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(xi)) return;
    Tensor gx = vjp(tp.grad(self));
    if (gx.shape() != in_shape) {
      throw ShapeError("custom_gradient: Jacobian application returned " + to_string(gx.shape()) + " for input " +
                       to_string(in_shape));
    }
    tp.grad(xi) += gx;
  });
}

}  // namespace gdvae::diff
