#pragma once

#include "gdvae/diffcore/tape.hpp"

#include <functional>
#include <optional>
#include <utility>

namespace gdvae::diff {

enum class ActivationKind { identity, relu, leaky_relu };

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double slope = 0.0;  // leaky_relu only

  static Activation relu() { return {ActivationKind::relu, 0.0}; }
  static Activation leaky(double s) { return {ActivationKind::leaky_relu, s}; }
  static Activation none() { return {ActivationKind::identity, 0.0}; }
};

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, ConvGeometry g);
std::size_t tconv_output_extent(std::size_t in, std::size_t kernel, ConvGeometry g);

/// y = x Wᵀ + b row-wise; x is [in] or [batch, in], W is [out, in], b is [out].
Var affine(Var x, Var W, std::optional<Var> b = std::nullopt);

/// Elementwise activation. The relu subgradient at 0 is 0.
Var activation(Var x, Activation a);
inline Var relu(Var x) { return activation(x, Activation::relu()); }
inline Var leaky_relu(Var x, double s) { return activation(x, Activation::leaky(s)); }

/// Cross-correlation. x is [C_in,H,W] or [B,C_in,H,W]; kernel is [C_out,C_in,k,k]; bias is [C_out].
Var conv2d(Var x, Var kernel, std::optional<Var> bias, ConvGeometry g);

/// Adjoint of conv2d with the same geometry. x is [C_in,H,W] or [B,C_in,H,W];
/// kernel is [C_in,C_out,k,k]; output extent (H-1)*stride - 2*padding + k.
Var tconv2d(Var x, Var kernel, std::optional<Var> bias, ConvGeometry g);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double c);
Var exp(Var x);
Var square(Var x);
/// Sum of every element, as a one-element tensor.
Var sum(Var x);
Var reshape(Var x, Shape shape);
/// Columns `cols` of a [batch, n] (or [n]) tensor.
Var select_columns(Var x, std::vector<std::size_t> cols);

/// Row-wise y = M x + offset with constant M ([n_out, n_in]) and offset ([n_out] or empty).
Var linear_map(Var x, const RowMatrix& M, const Eigen::VectorXd& offset = {});

/// Vector-Jacobian product closure: given dL/d(output) return dL/d(input).
using VjpFn = std::function<Tensor(const Tensor& upstream)>;

/// Node whose forward is evaluated by an arbitrary routine and whose backward is
/// supplied by the caller. `forward` returns the output value and its VJP.
/// Throws ShapeError if the VJP result does not match the input extents.
Var custom_gradient(Var x, const std::function<std::pair<Tensor, VjpFn>(const Tensor&)>& forward);

/// Square of the Frobenius norm of (a - b), summed over everything.
inline Var sum_squared_error(Var a, Var b) { return sum(square(sub(a, b))); }

}  // namespace gdvae::diff
