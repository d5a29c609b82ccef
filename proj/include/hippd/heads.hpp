#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "hippd/autograd.hpp"
#include "hippd/encoder.hpp"
#include "hippd/parameter_store.hpp"

namespace hippd {

inline constexpr std::size_t kDimensions = 4;
inline constexpr std::size_t kTypes = 16;
inline constexpr double kProbabilityClamp = 1e-12;

/// Four sigmoid heads stored as a 4 x h weight matrix (row d is w_bin^(d)) and a 4-vector of biases.
struct BinaryHeads {
  ParamId weights;
  ParamId bias;
  static BinaryHeads create(ParameterStore& store, const std::string& prefix, std::size_t width, Rng& rng);
};

struct MulticlassHead {
  ParamId weights;  // 16 x h
  ParamId bias;     // 16
  static MulticlassHead create(ParameterStore& store, const std::string& prefix, std::size_t width, Rng& rng);
};

/// p^(d) = sigmoid(w_bin^(d) . y + b_bin^(d)) for the four dimensions.
Var binary_heads(Var features, Var weights, Var bias);
/// 1 iff p > 0.5; exactly 0.5 maps to 0.
std::array<int, kDimensions> binary_predictions(std::span<const double> probabilities);

/// softmax(W_16 y + b_16).
Var multiclass_head(Var features, Var weights, Var bias);
int type_prediction(std::span<const double> type_probabilities);

struct JointLoss {
  Var total;
  std::array<double, kDimensions> binary{};
  double multiclass = 0.0;
};

/// Sum of four binary cross-entropies and the 16-way cross-entropy, natural log,
/// probabilities clamped to [1e-12, 1 - 1e-12].
JointLoss joint_loss(Var binary_probs, Var type_probs, const MbtiLabels& labels, int type_index);
JointLoss joint_loss(Var binary_probs, Var type_probs, const MbtiLabels& labels);

/// Mini-batch min-max rescaling to [0,1]; all zeros when the batch has no spread.
std::vector<double> compute_pe(std::span<const double> losses);

struct PredictionBundle {
  std::array<double, kDimensions> binary_probs{};
  std::array<int, kDimensions> binary_preds{};
  std::array<double, kTypes> type_probs{};
  int type_pred = 0;
  double loss_total = 0.0;
  std::array<double, kDimensions> loss_binary{};
  double loss_multiclass = 0.0;
  double pe = 0.0;
};

}  // namespace hippd
