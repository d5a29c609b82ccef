#include "hippd/model.hpp"

#include <cmath>
#include <stdexcept>

namespace hippd {
namespace {
constexpr std::uint64_t kInitStream = 1;
}

HippdModel::HippdModel(TrainConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng = Rng(cfg_.seed).fork(kInitStream);
  const std::size_t d = cfg_.d;
  if (cfg_.encoder_config().pooling == Pooling::attention) {
    const double bound = std::sqrt(6.0 / static_cast<double>(d + 1));
    Tensor q({d});
    for (auto& v : q.values()) v = rng.uniform(-bound, bound);
    query_ = store_.add("encoder.query", std::move(q));
  }
  if (cfg_.flags.mlp_memory) {
    perceptron_ = PerceptronMemoryParameters::create(store_, "memory", d, rng);
  } else if (!cfg_.flags.no_memory) {
    gates_ = GateParameters::create(store_, "memory", d, rng);
  }
  std::size_t width = d;
  if (cfg_.projection_width > 0) {
    projection_ = store_.add_xavier("memory.projection", cfg_.projection_width, d, rng);
    width = cfg_.projection_width;
  }
  gating_ = GatingParameters::create(store_, "gating", cfg_.K, width, rng, cfg_.lambda);
  pool_ = SpecialistPool::create(store_, cfg_.specialist_kinds(), width, d, cfg_.h, cfg_.specialist_config(), rng);
  binary_ = BinaryHeads::create(store_, "heads", cfg_.h, rng);
  multiclass_ = MulticlassHead::create(store_, "heads", cfg_.h, rng);
}

ForwardResult HippdModel::forward(Tape& tape, const Tensor& rows, const MbtiLabels* labels, Mode mode, double pe,
                                  double tau, Rng& rng) {
  if (rows.shape().size() != 2 || rows.rows() == 0 || rows.cols() != cfg_.d) {
    throw std::invalid_argument("HippdModel::forward: expected a non-empty M x " + std::to_string(cfg_.d) +
                                " post matrix");
  }
  if (cfg_.flags.no_pe || mode == Mode::eval) pe = 0.0;

  auto h = tape.constant(rows);
  auto z = query_ ? attention_pool(h, tape.param(store_, *query_)) : ad::mean_rows(h);

  Var m = z;
  if (perceptron_) {
    m = perceptron_memory(z, tape, store_, *perceptron_);
  } else if (gates_) {
    const auto weights = GateWeights::bind(tape, store_, *gates_);
    m = run_memory(z, rows.rows(), weights, pe, cfg_.memory_config(), mode, rng).m;
  }
  if (projection_) m = project_memory(m, tape.param(store_, *projection_));

  RoutingDecision decision;
  decision.scores = suitability_scores(m, tape.param(store_, gating_.weights), tape.param(store_, gating_.bias));
  decision.modulated = modulate_scores(decision.scores, pe, cfg_.lambda);

  const std::size_t K = pool_.size();
  std::vector<std::optional<Var>> outputs(K);
  Mode combine = mode;
  if (cfg_.flags.random_routing) {
    decision.winner = rng.below(K);
    combine = Mode::eval;
  } else if (cfg_.flags.soft_routing) {
    decision.relaxed = ad::softmax(decision.modulated);
    decision.winner = argmax_route(decision.relaxed->value().values());
    combine = Mode::train;
  } else if (mode == Mode::train) {
    decision.relaxed = gumbel_softmax_route(decision.modulated, tau, rng);
    decision.winner = argmax_route(decision.relaxed->value().values());
  } else {
    decision.winner = argmax_route(decision.modulated.value().values());
  }

  ForwardResult out;
  for (std::size_t k = 0; k < K; ++k) {
    if (combine == Mode::eval && k != decision.winner) continue;
    outputs[k] = pool_.forward(k, m, h, tape, store_);
    ++out.specialists_evaluated;
  }
  auto y = routed_output(decision, outputs, combine);

  out.winner = decision.winner;
  out.binary_probs = binary_heads(y, tape.param(store_, binary_.weights), tape.param(store_, binary_.bias));
  out.type_probs = multiclass_head(y, tape.param(store_, multiclass_.weights), tape.param(store_, multiclass_.bias));
  if (labels) out.loss = joint_loss(out.binary_probs, out.type_probs, *labels);
  return out;
}

}  // namespace hippd
