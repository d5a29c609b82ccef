#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hippd/checkpoint.hpp"
#include "hippd/dataset.hpp"
#include "hippd/metrics.hpp"
#include "hippd/model.hpp"

namespace hippd {

struct EpochSummary {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double validation_macro_f1 = 0.0;
  double temperature = 0.0;
};

using ProgressFn = std::function<void(const EpochSummary&)>;

struct TrainResult {
  Checkpoint checkpoint;  // best validation average Macro-F1
  MetricsReport report;   // test split, evaluated with the retained parameters
  DatasetSplit split;
};

/// Encoded post matrices, one per document of the corpus it was built from.
class EncodedCorpus {
 public:
  EncodedCorpus(const Encoder& encoder, const std::vector<UserDocument>& docs);
  const Tensor& rows(const std::string& user_id) const;

 private:
  std::map<std::string, Tensor> rows_;
};

/// Leakage-filters `data`, splits it with cfg.split_seed (unless a split is
/// given) and trains. Each batch is run with the previous batch's mean
/// normalized prediction error (0 for the first batch); the retained parameters
/// are those of the epoch with the best validation average Macro-F1.
TrainResult train(const TrainConfig& cfg, const std::vector<UserDocument>& data,
                  const EmbeddingTable* embeddings = nullptr, const ProgressFn& progress = {});
TrainResult train(const TrainConfig& cfg, const std::vector<UserDocument>& data, const DatasetSplit& split,
                  const EmbeddingTable* embeddings = nullptr, const ProgressFn& progress = {});

/// Evaluation-mode predictions: no dropout, pe = 0, argmax routing.
std::vector<UserPrediction> predict_users(HippdModel& model, const EncodedCorpus& corpus,
                                          std::span<const UserDocument* const> users);

/// Metrics over `users`, which must all be labeled. Routing purity is reported
/// when every user carries a latent style.
MetricsReport evaluate(HippdModel& model, const EncodedCorpus& corpus, std::span<const UserDocument* const> users);
/// Leakage-filters `data`, restores the checkpoint and evaluates the named users.
MetricsReport evaluate(const Checkpoint& ckpt, const std::vector<std::string>& user_ids,
                       const std::vector<UserDocument>& data, const EmbeddingTable* embeddings = nullptr);

}  // namespace hippd
