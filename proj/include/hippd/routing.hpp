#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hippd/autograd.hpp"
#include "hippd/parameter_store.hpp"
#include "hippd/rng.hpp"

namespace hippd {

/// Linear gating network s_k = w_k . m + b_k, stored as a K x d matrix and a K-vector.
struct GatingParameters {
  ParamId weights;
  ParamId bias;
  double lambda = 0.1;

  static GatingParameters create(ParameterStore& store, const std::string& prefix, std::size_t specialists,
                                 std::size_t width, Rng& rng, double lambda = 0.1);
};

struct TemperatureSchedule {
  double tau_start = 1.0;
  double tau_end = 0.1;
  std::size_t anneal_epochs = 20;
};

struct RoutingDecision {
  Var scores;                  // s
  Var modulated;               // s'
  std::optional<Var> relaxed;  // p, training only
  std::size_t winner = 0;      // k*
};

Var suitability_scores(Var m, Var weights, Var bias);

/// s' = mean(s) + (1 - lambda pe)(s - mean(s)). Contracts the logits toward
/// their mean in proportion to the error; order of the scores is preserved.
Var modulate_scores(Var scores, double pe, double lambda);

/// Linear decay from tau_start at epoch 0 to tau_end at anneal_epochs, constant after.
double temperature_at(std::size_t epoch, const TemperatureSchedule& schedule);

/// p = softmax((s' + g) / tau) with g standard Gumbel noise (not differentiated).
Var gumbel_softmax_route(Var scores, double tau, Rng& rng);
Var gumbel_softmax_route(Var scores, double tau, const Tensor& noise);

/// Winner-take-all index; ties go to the lowest index.
std::size_t argmax_route(std::span<const double> scores);

/// Training: sum_k p_k y_k over all K outputs. Evaluation: the winner's output,
/// which must be the only one required. Missing required outputs throw.
Var routed_output(const RoutingDecision& decision, std::span<const std::optional<Var>> outputs, Mode mode);

enum class SpecialistKind { mlp, recurrent, conv };

std::string to_string(SpecialistKind kind);
SpecialistKind specialist_kind_from_string(const std::string& name);

struct SpecialistConfig {
  std::size_t mlp_hidden = 128;
  std::size_t recurrent_hidden = 32;
  std::size_t conv_channels = 32;
};

/// K independently parameterized specialists emitting width-h features.
///   mlp:       W2 tanh(W1 m + b1) + b2
///   recurrent: LSTM over the post rows, final hidden state concatenated with m, then linear
///   conv:      width-3 convolution over the post rows, tanh, max over positions,
///              concatenated with m, then linear
class SpecialistPool {
 public:
  static SpecialistPool create(ParameterStore& store, const std::vector<SpecialistKind>& kinds,
                               std::size_t memory_width, std::size_t embedding_width, std::size_t output_width,
                               const SpecialistConfig& cfg, Rng& rng);

  std::size_t size() const noexcept { return members_.size(); }
  SpecialistKind kind(std::size_t k) const { return members_.at(k).kind; }
  std::size_t output_width() const noexcept { return output_width_; }
  std::size_t memory_width() const noexcept { return memory_width_; }

  Var forward(std::size_t k, Var m, Var rows, Tape& tape, ParameterStore& store) const;

 private:
  struct Member {
    SpecialistKind kind;
    std::vector<ParamId> params;
  };

  Var forward_mlp(const Member& s, Var m, Tape& tape, ParameterStore& store) const;
  Var forward_recurrent(const Member& s, Var m, Var rows, Tape& tape, ParameterStore& store) const;
  Var forward_conv(const Member& s, Var m, Var rows, Tape& tape, ParameterStore& store) const;

  std::vector<Member> members_;
  std::size_t memory_width_ = 0;
  std::size_t embedding_width_ = 0;
  std::size_t output_width_ = 0;
  SpecialistConfig cfg_;
};

}  // namespace hippd
