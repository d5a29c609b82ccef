#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hippd {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);

/// Dense row-major tensor of doubles. Vectors are rank 1, matrices rank 2,
/// scalars are rank 1 with a single element.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor scalar(double value);
  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }
  double item() const;

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> row(std::size_t r) const;
  std::span<double> row(std::size_t r);

  bool all_finite() const noexcept;
  void fill(double value);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

enum class UnaryOp { sigmoid, tanh };
enum class BinaryOp { add, subtract, multiply };

double sigmoid(double x);

Tensor apply(UnaryOp op, const Tensor& a);
Tensor apply(BinaryOp op, const Tensor& a, const Tensor& b);
Tensor clamp(const Tensor& a, double lo, double hi);

// Max-subtracted softmax over a rank-1 tensor.
Tensor softmax(const Tensor& v);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matvec(const Tensor& a, const Tensor& x);
Tensor transpose(const Tensor& a);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

double max_abs_difference(const Tensor& a, const Tensor& b);

}  // namespace hippd
