#include "hippd/routing.hpp"

#include <stdexcept>

namespace hippd {

GatingParameters GatingParameters::create(ParameterStore& store, const std::string& prefix,
                                          std::size_t specialists, std::size_t width, Rng& rng, double lambda) {
  if (specialists < 2) throw std::invalid_argument("routing needs at least two specialists");
  GatingParameters p;
  p.weights = store.add_xavier(prefix + ".w", specialists, width, rng);
  p.bias = store.add_zeros(prefix + ".b", {specialists});
  p.lambda = lambda;
  return p;
}

Var suitability_scores(Var m, Var weights, Var bias) {
  if (weights.value().cols() != m.size() || weights.value().rows() != bias.size()) {
    throw std::invalid_argument("suitability_scores: width mismatch");
  }
  return ad::add(ad::matvec(weights, m), bias);
}

Var modulate_scores(Var scores, double pe, double lambda) {
  if (!(pe >= 0.0 && pe <= 1.0)) throw std::invalid_argument("modulate_scores: pe must lie in [0,1]");
  if (lambda < 0.0) throw std::invalid_argument("modulate_scores: lambda must be non-negative");
  if (lambda * pe >= 1.0) throw std::invalid_argument("modulate_scores: lambda * pe must be below 1");
  if (pe == 0.0) return scores;
  return ad::contract_about_mean(scores, 1.0 - lambda * pe);
}

double temperature_at(std::size_t epoch, const TemperatureSchedule& schedule) {
  if (!(schedule.tau_start >= schedule.tau_end && schedule.tau_end > 0.0)) {
    throw std::invalid_argument("temperature schedule requires tau_start >= tau_end > 0");
  }
  if (epoch >= schedule.anneal_epochs) return schedule.tau_end;
  const double fraction = static_cast<double>(epoch) / static_cast<double>(schedule.anneal_epochs);
  return schedule.tau_start + (schedule.tau_end - schedule.tau_start) * fraction;
}

Var gumbel_softmax_route(Var scores, double tau, const Tensor& noise) {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax_route: tau must be positive");
  if (noise.shape() != scores.shape()) throw std::invalid_argument("gumbel_softmax_route: noise shape mismatch");
  auto perturbed = ad::add(scores, scores.tape().constant(noise));
  return ad::softmax(ad::scale(perturbed, 1.0 / tau));
}

Var gumbel_softmax_route(Var scores, double tau, Rng& rng) {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax_route: tau must be positive");
  return gumbel_softmax_route(scores, tau, sample_gumbel(scores.shape(), rng));
}

std::size_t argmax_route(std::span<const double> scores) { return argmax(scores); }

Var routed_output(const RoutingDecision& decision, std::span<const std::optional<Var>> outputs, Mode mode) {
  if (mode == Mode::eval) {
    if (decision.winner >= outputs.size() || !outputs[decision.winner]) {
      throw std::invalid_argument("routed_output: missing the winning specialist's output");
    }
    return *outputs[decision.winner];
  }
  if (!decision.relaxed) throw std::invalid_argument("routed_output: training requires relaxed weights");
  const auto& p = *decision.relaxed;
  if (p.size() != outputs.size()) throw std::invalid_argument("routed_output: weight/output count mismatch");
  std::optional<Var> mixture;
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    if (!outputs[k]) throw std::invalid_argument("routed_output: missing specialist output " + std::to_string(k));
    auto term = ad::scale_by(*outputs[k], ad::slice(p, k, 1));
    mixture = mixture ? ad::add(*mixture, term) : term;
  }
  return *mixture;
}

std::string to_string(SpecialistKind kind) {
  switch (kind) {
    case SpecialistKind::mlp: return "mlp";
    case SpecialistKind::recurrent: return "recurrent";
    case SpecialistKind::conv: return "conv";
  }
  return "unknown";
}

SpecialistKind specialist_kind_from_string(const std::string& name) {
  if (name == "mlp") return SpecialistKind::mlp;
  if (name == "recurrent") return SpecialistKind::recurrent;
  if (name == "conv") return SpecialistKind::conv;
  throw std::invalid_argument("unknown specialist kind '" + name + "'");
}

SpecialistPool SpecialistPool::create(ParameterStore& store, const std::vector<SpecialistKind>& kinds,
                                      std::size_t memory_width, std::size_t embedding_width,
                                      std::size_t output_width, const SpecialistConfig& cfg, Rng& rng) {
  SpecialistPool pool;
  pool.memory_width_ = memory_width;
  pool.embedding_width_ = embedding_width;
  pool.output_width_ = output_width;
  pool.cfg_ = cfg;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const std::string prefix = "specialist" + std::to_string(k) + "." + to_string(kinds[k]);
    Member s{kinds[k], {}};
    switch (kinds[k]) {
      case SpecialistKind::mlp:
        s.params = {store.add_xavier(prefix + ".W1", cfg.mlp_hidden, memory_width, rng),
                    store.add_zeros(prefix + ".b1", {cfg.mlp_hidden}),
                    store.add_xavier(prefix + ".W2", output_width, cfg.mlp_hidden, rng),
                    store.add_zeros(prefix + ".b2", {output_width})};
        break;
      case SpecialistKind::recurrent: {
        const auto hidden = cfg.recurrent_hidden;
        s.params = {store.add_xavier(prefix + ".W", 4 * hidden, embedding_width + hidden, rng),
                    store.add_zeros(prefix + ".b", {4 * hidden}),
                    store.add_xavier(prefix + ".W_out", output_width, hidden + memory_width, rng),
                    store.add_zeros(prefix + ".b_out", {output_width})};
        break;
      }
      case SpecialistKind::conv:
        s.params = {store.add_xavier(prefix + ".kernel", cfg.conv_channels, 3 * embedding_width, rng),
                    store.add_zeros(prefix + ".b", {cfg.conv_channels}),
                    store.add_xavier(prefix + ".W_out", output_width, cfg.conv_channels + memory_width, rng),
                    store.add_zeros(prefix + ".b_out", {output_width})};
        break;
    }
    pool.members_.push_back(std::move(s));
  }
  return pool;
}

Var SpecialistPool::forward(std::size_t k, Var m, Var rows, Tape& tape, ParameterStore& store) const {
  if (k >= members_.size()) throw std::invalid_argument("specialist index " + std::to_string(k) + " out of range");
  if (m.size() != memory_width_) throw std::invalid_argument("specialist input width mismatch");
  const auto& s = members_[k];
  switch (s.kind) {
    case SpecialistKind::mlp: return forward_mlp(s, m, tape, store);
    case SpecialistKind::recurrent: return forward_recurrent(s, m, rows, tape, store);
    case SpecialistKind::conv: return forward_conv(s, m, rows, tape, store);
  }
  throw std::logic_error("unreachable specialist kind");
}

Var SpecialistPool::forward_mlp(const Member& s, Var m, Tape& tape, ParameterStore& store) const {
  auto hidden = ad::tanh(ad::add(ad::matvec(tape.param(store, s.params[0]), m), tape.param(store, s.params[1])));
  return ad::add(ad::matvec(tape.param(store, s.params[2]), hidden), tape.param(store, s.params[3]));
}

Var SpecialistPool::forward_recurrent(const Member& s, Var m, Var rows, Tape& tape, ParameterStore& store) const {
  const auto hidden = cfg_.recurrent_hidden;
  auto w = tape.param(store, s.params[0]);
  auto b = tape.param(store, s.params[1]);
  Var h = tape.constant(Tensor({hidden}));
  Var c = tape.constant(Tensor({hidden}));
  for (std::size_t t = 0; t < rows.value().rows(); ++t) {
    const Var in[] = {ad::row(rows, t), h};
    auto pre = ad::add(ad::matvec(w, ad::concat(in)), b);
    auto i = ad::sigmoid(ad::slice(pre, 0, hidden));
    auto f = ad::sigmoid(ad::slice(pre, hidden, hidden));
    auto o = ad::sigmoid(ad::slice(pre, 2 * hidden, hidden));
    auto g = ad::tanh(ad::slice(pre, 3 * hidden, hidden));
    c = ad::add(ad::mul(f, c), ad::mul(i, g));
    h = ad::mul(o, ad::tanh(c));
  }
  const Var features[] = {h, m};
  return ad::add(ad::matvec(tape.param(store, s.params[2]), ad::concat(features)), tape.param(store, s.params[3]));
}

Var SpecialistPool::forward_conv(const Member& s, Var m, Var rows, Tape& tape, ParameterStore& store) const {
  auto maps = ad::tanh(ad::conv1d_same(rows, tape.param(store, s.params[0]), tape.param(store, s.params[1])));
  const Var features[] = {ad::max_rows(maps), m};
  return ad::add(ad::matvec(tape.param(store, s.params[2]), ad::concat(features)), tape.param(store, s.params[3]));
}

}  // namespace hippd
