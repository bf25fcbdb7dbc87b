#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace gdvae::diff {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
/// Aligned like Eigen-owned buffers, so vectorized reductions over a map do not depend on
/// where the heap placed the data (which would make results vary between runs).
using Storage = std::vector<double, Eigen::aligned_allocator<double>>;

/// Dense row-major array of doubles with shape metadata.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);
  Tensor(std::initializer_list<std::size_t> shape, std::initializer_list<double> values);

  static Tensor scalar(double v) { return Tensor(Shape{1}, std::vector<double>{v}); }
  static Tensor vector(std::vector<double> v) {
    Shape s{v.size()};
    return Tensor(std::move(s), std::move(v));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const Storage& storage() const noexcept { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  /// The single value of a one-element tensor.
  double item() const;

  /// Same values, new shape; element counts must agree.
  Tensor reshaped(Shape shape) const;

  /// View as (leading extent) x (product of remaining extents). Rank-1 tensors are one row.
  MatrixMap matrix();
  ConstMatrixMap matrix() const;

  bool all_finite() const noexcept;
  void fill(double v);

  Tensor& operator+=(const Tensor& other);

 private:
  Shape shape_;
  Storage values_;
};

bool same_shape(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);
double dot(const Tensor& a, const Tensor& b);

}  // namespace gdvae::diff
