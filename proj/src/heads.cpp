#include "hippd/heads.hpp"

#include <algorithm>
#include <stdexcept>

namespace hippd {

BinaryHeads BinaryHeads::create(ParameterStore& store, const std::string& prefix, std::size_t width, Rng& rng) {
  return BinaryHeads{store.add_xavier(prefix + ".w_bin", kDimensions, width, rng),
                     store.add_zeros(prefix + ".b_bin", {kDimensions})};
}

MulticlassHead MulticlassHead::create(ParameterStore& store, const std::string& prefix, std::size_t width,
                                      Rng& rng) {
  return MulticlassHead{store.add_xavier(prefix + ".W_16", kTypes, width, rng),
                        store.add_zeros(prefix + ".b_16", {kTypes})};
}

Var binary_heads(Var features, Var weights, Var bias) {
  if (weights.value().rows() != kDimensions || weights.value().cols() != features.size() ||
      bias.size() != kDimensions) {
    throw std::invalid_argument("binary_heads: width mismatch");
  }
  return ad::sigmoid(ad::add(ad::matvec(weights, features), bias));
}

std::array<int, kDimensions> binary_predictions(std::span<const double> probabilities) {
  if (probabilities.size() != kDimensions) throw std::invalid_argument("binary_predictions: expected 4 values");
  std::array<int, kDimensions> out{};
  for (std::size_t d = 0; d < kDimensions; ++d) out[d] = probabilities[d] > 0.5 ? 1 : 0;
  return out;
}

Var multiclass_head(Var features, Var weights, Var bias) {
  if (weights.value().rows() != kTypes || weights.value().cols() != features.size() || bias.size() != kTypes) {
    throw std::invalid_argument("multiclass_head: width mismatch");
  }
  return ad::softmax(ad::add(ad::matvec(weights, features), bias));
}

int type_prediction(std::span<const double> type_probabilities) {
  if (type_probabilities.size() != kTypes) throw std::invalid_argument("type_prediction: expected 16 values");
  return static_cast<int>(argmax(type_probabilities));
}

JointLoss joint_loss(Var binary_probs, Var type_probs, const MbtiLabels& labels, int type_index) {
  if (type_index != labels.type_index()) {
    throw std::invalid_argument("joint_loss: type index " + std::to_string(type_index) +
                                " disagrees with the binary labels");
  }
  if (binary_probs.size() != kDimensions || type_probs.size() != kTypes) {
    throw std::invalid_argument("joint_loss: expected 4 binary and 16 type probabilities");
  }
  constexpr double lo = kProbabilityClamp, hi = 1.0 - kProbabilityClamp;
  JointLoss out;
  auto p = ad::clamp(binary_probs, lo, hi);
  std::optional<Var> total;
  for (std::size_t d = 0; d < kDimensions; ++d) {
    auto pd = ad::slice(p, d, 1);
    // -log p for a positive label, -log(1 - p) otherwise.
    auto term = labels.bits[d] ? ad::scale(ad::log(pd), -1.0) : ad::scale(ad::log(ad::affine(pd, -1.0, 1.0)), -1.0);
    out.binary[d] = term.item();
    total = total ? ad::add(*total, term) : term;
  }
  auto ce = ad::scale(ad::log(ad::clamp(ad::slice(type_probs, static_cast<std::size_t>(type_index), 1), lo, hi)), -1.0);
  out.multiclass = ce.item();
  out.total = ad::add(*total, ce);
  return out;
}

JointLoss joint_loss(Var binary_probs, Var type_probs, const MbtiLabels& labels) {
  return joint_loss(binary_probs, type_probs, labels, labels.type_index());
}

std::vector<double> compute_pe(std::span<const double> losses) {
  if (losses.empty()) throw std::invalid_argument("compute_pe: empty batch");
  const auto [lo_it, hi_it] = std::minmax_element(losses.begin(), losses.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> pe(losses.size(), 0.0);
  if (!(hi > lo)) return pe;
  for (std::size_t i = 0; i < losses.size(); ++i) pe[i] = std::clamp((losses[i] - lo) / (hi - lo), 0.0, 1.0);
  return pe;
}

}  // namespace hippd
