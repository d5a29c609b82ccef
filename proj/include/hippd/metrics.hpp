#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hippd/heads.hpp"
#include "json.hpp"

namespace hippd {

struct BinaryMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;  // mean of the F1 of class 1 and class 0
};

struct MulticlassMetrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

/// F1 from raw counts; 0 when the class is neither present nor predicted.
double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
double precision_from_counts(std::size_t tp, std::size_t fp);
double recall_from_counts(std::size_t tp, std::size_t fn);

BinaryMetrics binary_metrics(std::span<const int> labels, std::span<const int> predictions);
/// Macro averages run over all `classes`, absent classes contributing 0.
MulticlassMetrics multiclass_metrics(std::span<const int> labels, std::span<const int> predictions,
                                     std::size_t classes = kTypes);

struct UserPrediction {
  std::string user_id;
  std::array<int, kDimensions> binary{};
  int type = 0;
  std::size_t specialist = 0;
  std::size_t specialists_evaluated = 0;
};

struct MetricsReport {
  std::size_t users = 0;
  std::array<BinaryMetrics, kDimensions> dimensions{};
  double average_macro_f1 = 0.0;
  double average_accuracy = 0.0;
  MulticlassMetrics types;
  double agreement = 0.0;  // fraction of users whose binary bits spell the predicted type
  std::vector<std::size_t> routing_histogram;
  std::optional<double> routing_purity;
  std::vector<double> loss_curve;
  std::size_t best_epoch = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&);
};

bool operator==(const BinaryMetrics& a, const BinaryMetrics& b);
bool operator==(const MulticlassMetrics& a, const MulticlassMetrics& b);

/// `labels[i]` belongs to `predictions[i]`; `styles` (optional, same length)
/// enables routing purity.
MetricsReport compute_metrics(std::span<const UserPrediction> predictions, std::span<const MbtiLabels> labels,
                              std::size_t specialists, std::span<const int> styles = {});

/// Pooled fraction of users routed to their style's modal specialist.
double routing_purity(std::span<const int> styles, std::span<const std::size_t> specialists);

nlohmann::json to_json(const MetricsReport& report);

}  // namespace hippd
