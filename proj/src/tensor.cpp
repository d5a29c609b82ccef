#include "hippd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hippd {

namespace {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  }
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  for (auto extent : shape_) {
    if (extent == 0) throw std::invalid_argument("tensor extents must be positive");
  }
  values_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  for (auto extent : shape_) {
    if (extent == 0) throw std::invalid_argument("tensor extents must be positive");
  }
  if (values_.size() != element_count(shape_)) {
    throw std::invalid_argument("tensor value count " + std::to_string(values_.size()) +
                                " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const auto n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::identity(std::size_t n) {
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) out.at(i, i) = 1.0;
  return out;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw std::invalid_argument("rows(): tensor is not rank 2");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw std::invalid_argument("cols(): tensor is not rank 2");
  return shape_[1];
}

double Tensor::item() const {
  if (values_.size() != 1) throw std::invalid_argument("item(): tensor is not a scalar");
  return values_[0];
}

std::span<const double> Tensor::row(std::size_t r) const {
  const auto width = cols();
  return std::span<const double>(values_).subspan(r * width, width);
}

std::span<double> Tensor::row(std::size_t r) {
  const auto width = cols();
  return std::span<double>(values_).subspan(r * width, width);
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor apply(UnaryOp op, const Tensor& a) {
  Tensor out = a;
  for (auto& v : out.values()) v = op == UnaryOp::sigmoid ? sigmoid(v) : std::tanh(v);
  return out;
}

Tensor apply(BinaryOp op, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "elementwise");
  Tensor out = a;
  auto dst = out.values();
  auto rhs = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    switch (op) {
      case BinaryOp::add: dst[i] += rhs[i]; break;
      case BinaryOp::subtract: dst[i] -= rhs[i]; break;
      case BinaryOp::multiply: dst[i] *= rhs[i]; break;
    }
  }
  return out;
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  Tensor out = a;
  for (auto& v : out.values()) v = std::clamp(v, lo, hi);
  return out;
}

Tensor softmax(const Tensor& v) {
  if (v.empty()) throw std::invalid_argument("softmax: empty input");
  if (v.rank() != 1) throw std::invalid_argument("softmax: expected a rank-1 tensor");
  const auto in = v.values();
  const double peak = *std::max_element(in.begin(), in.end());
  Tensor out(v.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = std::exp(in[i] - peak);
    total += out[i];
  }
  for (auto& x : out.values()) x /= total;
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw std::invalid_argument("matmul: operands must be rank 2");
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ " + shape_string(a.shape()) +
                                " x " + shape_string(b.shape()));
  }
  const auto n = a.rows(), k = a.cols(), m = b.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a.at(i, p);
      if (aip == 0.0) continue;
      const auto brow = b.row(p);
      auto orow = out.row(i);
      for (std::size_t j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

Tensor matvec(const Tensor& a, const Tensor& x) {
  if (a.rank() != 2 || x.rank() != 1) throw std::invalid_argument("matvec: expected matrix and vector");
  if (a.cols() != x.size()) {
    throw std::invalid_argument("matvec: dimension mismatch " + shape_string(a.shape()) + " x " +
                                shape_string(x.shape()));
  }
  Tensor out({a.rows()});
  const auto xv = x.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * xv[j];
    out[i] = acc;
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  const auto n = a.rows(), m = a.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double max_abs_difference(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_difference");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace hippd
