#pragma once

#include <optional>

#include "hippd/config.hpp"
#include "hippd/heads.hpp"
#include "hippd/memory.hpp"
#include "hippd/routing.hpp"

namespace hippd {

struct ForwardResult {
  Var binary_probs;
  Var type_probs;
  std::optional<JointLoss> loss;
  std::size_t winner = 0;
  std::size_t specialists_evaluated = 0;
};

/// Full composition: pooling, working memory, gating, specialists, heads.
/// Ablation flags in the config replace exactly one stage each.
class HippdModel {
 public:
  /// Parameters are drawn from a stream forked off cfg.seed.
  explicit HippdModel(TrainConfig cfg);

  const TrainConfig& config() const noexcept { return cfg_; }
  ParameterStore& params() noexcept { return store_; }
  const ParameterStore& params() const noexcept { return store_; }
  std::size_t specialists() const noexcept { return pool_.size(); }

  /// `rows` is the user's M x d post matrix. In training the routing is a
  /// Gumbel-Softmax relaxation at temperature `tau` and every specialist runs;
  /// in evaluation only the argmax winner runs and `tau` is ignored. `rng`
  /// supplies dropout masks, Gumbel noise and random-routing draws.
  ForwardResult forward(Tape& tape, const Tensor& rows, const MbtiLabels* labels, Mode mode, double pe, double tau,
                        Rng& rng);

 private:
  TrainConfig cfg_;
  ParameterStore store_;
  std::optional<ParamId> query_;
  std::optional<GateParameters> gates_;
  std::optional<PerceptronMemoryParameters> perceptron_;
  std::optional<ParamId> projection_;
  GatingParameters gating_;
  SpecialistPool pool_;
  BinaryHeads binary_;
  MulticlassHead multiclass_;
};

}  // namespace hippd
