#include "hippd/trainer.hpp"

#include <cmath>
#include <numeric>

#include "hippd/errors.hpp"

namespace hippd {
namespace {

constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kEvalStream = 3;

std::vector<const UserDocument*> require_labels(std::vector<const UserDocument*> users) {
  for (const auto* u : users)
    if (!u->labels) throw DataError("user '" + u->user_id + "' has no labels");
  return users;
}

}  // namespace

EncodedCorpus::EncodedCorpus(const Encoder& encoder, const std::vector<UserDocument>& docs) {
  for (const auto& doc : docs) rows_.emplace(doc.user_id, encoder.encode(doc).rows);
}

const Tensor& EncodedCorpus::rows(const std::string& user_id) const {
  auto it = rows_.find(user_id);
  if (it == rows_.end()) throw DataError("user '" + user_id + "' was not encoded");
  return it->second;
}

std::vector<UserPrediction> predict_users(HippdModel& model, const EncodedCorpus& corpus,
                                          std::span<const UserDocument* const> users) {
  Rng rng = Rng(model.config().seed).fork(kEvalStream);
  std::vector<UserPrediction> out;
  out.reserve(users.size());
  for (const auto* user : users) {
    Tape tape(false);
    auto result = model.forward(tape, corpus.rows(user->user_id), nullptr, Mode::eval, 0.0, 1.0, rng);
    UserPrediction p;
    p.user_id = user->user_id;
    p.binary = binary_predictions(result.binary_probs.value().values());
    p.type = type_prediction(result.type_probs.value().values());
    p.specialist = result.winner;
    p.specialists_evaluated = result.specialists_evaluated;
    out.push_back(std::move(p));
  }
  return out;
}

MetricsReport evaluate(HippdModel& model, const EncodedCorpus& corpus, std::span<const UserDocument* const> users) {
  const auto labeled = require_labels({users.begin(), users.end()});
  const auto predictions = predict_users(model, corpus, labeled);
  std::vector<MbtiLabels> labels;
  std::vector<int> styles;
  bool all_styled = true;
  for (const auto* u : labeled) {
    labels.push_back(*u->labels);
    all_styled = all_styled && u->style.has_value();
    styles.push_back(u->style.value_or(0));
  }
  if (!all_styled) styles.clear();
  return compute_metrics(predictions, labels, model.specialists(), styles);
}

MetricsReport evaluate(const Checkpoint& ckpt, const std::vector<std::string>& user_ids,
                       const std::vector<UserDocument>& data, const EmbeddingTable* embeddings) {
  const auto docs = preprocess(data);
  const auto users = select_users(docs, user_ids);
  auto model = ckpt.restore();
  const Encoder encoder(ckpt.config.encoder_config(), embeddings);
  std::vector<UserDocument> subset;
  for (const auto* u : users) subset.push_back(*u);
  const EncodedCorpus corpus(encoder, subset);
  auto report = evaluate(model, corpus, users);
  report.best_epoch = ckpt.epoch;
  return report;
}

TrainResult train(const TrainConfig& cfg, const std::vector<UserDocument>& data, const EmbeddingTable* embeddings,
                  const ProgressFn& progress) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  return train(cfg, data, stratified_split(data, cfg.split_seed), embeddings, progress);
}

TrainResult train(const TrainConfig& cfg, const std::vector<UserDocument>& data, const DatasetSplit& split,
                  const EmbeddingTable* embeddings, const ProgressFn& progress) {
  cfg.validate();
  const auto docs = preprocess(data);
  const auto train_users = require_labels(select_users(docs, split.train));
  auto val_users = require_labels(select_users(docs, split.validation));
  const auto test_users = require_labels(select_users(docs, split.test));
  if (train_users.empty()) throw std::invalid_argument("train: empty training split");
  if (val_users.empty()) val_users = train_users;

  const Encoder encoder(cfg.encoder_config(), embeddings);
  const EncodedCorpus corpus(encoder, docs);
  HippdModel model(cfg);
  Rng rng = Rng(cfg.seed).fork(kTrainStream);

  std::vector<std::size_t> order(train_users.size());
  std::iota(order.begin(), order.end(), 0);
  double pe = 0.0;
  double best_f1 = -1.0;
  std::optional<Checkpoint> best;
  std::vector<double> loss_curve;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double tau = temperature_at(epoch, cfg.temperature());
    shuffle(order, rng);
    double epoch_loss = 0.0;
    std::size_t batch = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      Tape tape;
      std::vector<double> losses;
      std::optional<Var> total;
      for (std::size_t i = start; i < end; ++i) {
        const auto* user = train_users[order[i]];
        auto result = model.forward(tape, corpus.rows(user->user_id), &*user->labels, Mode::train, pe, tau, rng);
        losses.push_back(result.loss->total.item());
        total = total ? ad::add(*total, result.loss->total) : result.loss->total;
      }
      auto mean = ad::scale(*total, 1.0 / static_cast<double>(losses.size()));
      if (!std::isfinite(mean.item())) throw DivergenceError(epoch, batch, mean.item());
      tape.backward(mean);
      model.params().adam_step(cfg.learning_rate);
      for (const auto& param : model.params().params())
        if (!param.value.all_finite()) throw DivergenceError(epoch, batch, mean.item());
      epoch_loss += mean.item() * static_cast<double>(losses.size());

      const auto normalized = compute_pe(losses);
      pe = cfg.flags.no_pe ? 0.0
                           : std::accumulate(normalized.begin(), normalized.end(), 0.0) /
                                 static_cast<double>(normalized.size());
    }
    loss_curve.push_back(epoch_loss / static_cast<double>(order.size()));

    const auto val = evaluate(model, corpus, val_users);
    if (progress) progress({epoch, loss_curve.back(), val.average_macro_f1, tau});
    if (val.average_macro_f1 > best_f1) {
      best_f1 = val.average_macro_f1;
      best = make_checkpoint(model, epoch, rng);
    }
  }

  TrainResult result{*best, {}, split};
  auto retained = best->restore();
  result.report = evaluate(retained, corpus, test_users.empty() ? val_users : test_users);
  result.report.loss_curve = loss_curve;
  result.report.best_epoch = best->epoch;
  return result;
}

}  // namespace hippd
