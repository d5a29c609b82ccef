#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hippd/rng.hpp"
#include "hippd/tensor.hpp"

namespace hippd {

using ParamId = std::size_t;

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor first_moment;
  Tensor second_moment;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Named trainable tensors with gradient and Adam moment accumulators.
/// Gradient and moment tensors always share their parameter's shape.
class ParameterStore {
 public:
  ParamId add(std::string name, Tensor init);
  /// Xavier-uniform matrix, bound sqrt(6 / (fan_in + fan_out)).
  ParamId add_xavier(std::string name, std::size_t rows, std::size_t cols, Rng& rng);
  ParamId add_zeros(std::string name, Shape shape);

  std::optional<ParamId> find(std::string_view name) const;
  ParamId id(std::string_view name) const;

  Parameter& operator[](ParamId id) { return params_.at(id); }
  const Parameter& operator[](ParamId id) const { return params_.at(id); }
  std::size_t size() const noexcept { return params_.size(); }
  std::span<const Parameter> params() const noexcept { return params_; }
  std::span<Parameter> params() noexcept { return params_; }

  std::uint64_t step() const noexcept { return step_; }
  void set_step(std::uint64_t step) { step_ = step; }

  void zero_grad();
  /// One Adam update from the accumulated gradients; zeroes them afterwards.
  void adam_step(double learning_rate, const AdamConfig& cfg = {});

  /// Copies parameter values from `other`, which must hold the same names and shapes.
  void assign_values(const ParameterStore& other);

  std::size_t total_elements() const;

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, ParamId> index_;
  std::uint64_t step_ = 0;
};

}  // namespace hippd
