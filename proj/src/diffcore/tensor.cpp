#include "gdvae/diffcore/tensor.hpp"

#include "gdvae/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace gdvae::diff {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(values.begin(), values.end()) {
  if (values_.size() != element_count(shape_)) {
    throw ShapeError("tensor: " + std::to_string(values_.size()) + " values for shape " + to_string(shape_));
  }
}

Tensor::Tensor(std::initializer_list<std::size_t> shape, std::initializer_list<double> values)
    : Tensor(Shape(shape), std::vector<double>(values)) {}

double Tensor::item() const {
  if (values_.size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape_));
  return values_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (element_count(shape) != values_.size()) {
    throw ShapeError("reshape " + to_string(shape_) + " -> " + to_string(shape));
  }
  Tensor out;
  out.shape_ = std::move(shape);
  out.values_ = values_;
  return out;
}

namespace {
std::pair<Eigen::Index, Eigen::Index> matrix_dims(const Shape& shape, std::size_t n) {
  if (shape.size() <= 1) return {1, static_cast<Eigen::Index>(n)};
  const auto rows = static_cast<Eigen::Index>(shape[0]);
  return {rows, rows == 0 ? 0 : static_cast<Eigen::Index>(n) / rows};
}
}  // namespace

MatrixMap Tensor::matrix() {
  auto [r, c] = matrix_dims(shape_, values_.size());
  return MatrixMap(values_.data(), r, c);
}

ConstMatrixMap Tensor::matrix() const {
  auto [r, c] = matrix_dims(shape_, values_.size());
  return ConstMatrixMap(values_.data(), r, c);
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.size() != size()) {
    throw ShapeError("+= between " + to_string(shape_) + " and " + to_string(other.shape_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw ShapeError("max_abs_diff size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw ShapeError("dot size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace gdvae::diff
