#include "hippd/parameter_store.hpp"

#include <cmath>
#include <stdexcept>

namespace hippd {

ParamId ParameterStore::add(std::string name, Tensor init) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  const ParamId id = params_.size();
  index_.emplace(name, id);
  Parameter p;
  p.name = std::move(name);
  p.grad = Tensor::zeros_like(init);
  p.first_moment = Tensor::zeros_like(init);
  p.second_moment = Tensor::zeros_like(init);
  p.value = std::move(init);
  params_.push_back(std::move(p));
  return id;
}

ParamId ParameterStore::add_xavier(std::string name, std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor init({rows, cols});
  for (auto& v : init.values()) v = rng.uniform(-bound, bound);
  return add(std::move(name), std::move(init));
}

ParamId ParameterStore::add_zeros(std::string name, Shape shape) {
  return add(std::move(name), Tensor(std::move(shape)));
}

std::optional<ParamId> ParameterStore::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ParamId ParameterStore::id(std::string_view name) const {
  if (auto found = find(name)) return *found;
  throw std::invalid_argument("unknown parameter '" + std::string(name) + "'");
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

void ParameterStore::adam_step(double learning_rate, const AdamConfig& cfg) {
  ++step_;
  const double t = static_cast<double>(step_);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& p : params_) {
    auto value = p.value.values();
    auto grad = p.grad.values();
    auto m = p.first_moment.values();
    auto v = p.second_moment.values();
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
  zero_grad();
}

void ParameterStore::assign_values(const ParameterStore& other) {
  if (other.size() != size()) throw std::invalid_argument("assign_values: parameter count differs");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name ||
        params_[i].value.shape() != other.params_[i].value.shape()) {
      throw std::invalid_argument("assign_values: parameter '" + params_[i].name + "' differs");
    }
    params_[i].value = other.params_[i].value;
  }
}

std::size_t ParameterStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

}  // namespace hippd
