#include "hippd/metrics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace hippd {

double precision_from_counts(std::size_t tp, std::size_t fp) {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double recall_from_counts(std::size_t tp, std::size_t fn) {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  const double p = precision_from_counts(tp, fp);
  const double r = recall_from_counts(tp, fn);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

BinaryMetrics binary_metrics(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) throw std::invalid_argument("binary_metrics: length mismatch");
  if (labels.empty()) throw std::invalid_argument("binary_metrics: no examples");
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool y = labels[i] != 0, p = predictions[i] != 0;
    tp += y && p;
    tn += !y && !p;
    fp += !y && p;
    fn += y && !p;
  }
  BinaryMetrics m;
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(labels.size());
  m.macro_f1 = (f1_from_counts(tp, fp, fn) + f1_from_counts(tn, fn, fp)) / 2.0;
  return m;
}

MulticlassMetrics multiclass_metrics(std::span<const int> labels, std::span<const int> predictions,
                                     std::size_t classes) {
  if (labels.size() != predictions.size()) throw std::invalid_argument("multiclass_metrics: length mismatch");
  if (labels.empty()) throw std::invalid_argument("multiclass_metrics: no examples");
  std::vector<std::size_t> tp(classes), fp(classes), fn(classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]), p = static_cast<std::size_t>(predictions[i]);
    if (y >= classes || p >= classes) throw std::invalid_argument("multiclass_metrics: class out of range");
    if (y == p) {
      ++tp[y];
      ++correct;
    } else {
      ++fp[p];
      ++fn[y];
    }
  }
  MulticlassMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  for (std::size_t c = 0; c < classes; ++c) {
    m.macro_precision += precision_from_counts(tp[c], fp[c]);
    m.macro_recall += recall_from_counts(tp[c], fn[c]);
    m.macro_f1 += f1_from_counts(tp[c], fp[c], fn[c]);
  }
  const auto n = static_cast<double>(classes);
  m.macro_precision /= n;
  m.macro_recall /= n;
  m.macro_f1 /= n;
  return m;
}

double routing_purity(std::span<const int> styles, std::span<const std::size_t> specialists) {
  if (styles.size() != specialists.size()) throw std::invalid_argument("routing_purity: length mismatch");
  if (styles.empty()) throw std::invalid_argument("routing_purity: no examples");
  std::map<int, std::map<std::size_t, std::size_t>> counts;
  for (std::size_t i = 0; i < styles.size(); ++i) ++counts[styles[i]][specialists[i]];
  std::size_t modal = 0;
  for (const auto& [style, hist] : counts) {
    std::size_t best = 0;
    for (const auto& [k, c] : hist) best = std::max(best, c);
    modal += best;
  }
  return static_cast<double>(modal) / static_cast<double>(styles.size());
}

MetricsReport compute_metrics(std::span<const UserPrediction> predictions, std::span<const MbtiLabels> labels,
                              std::size_t specialists, std::span<const int> styles) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("compute_metrics: length mismatch");
  if (predictions.empty()) throw std::invalid_argument("compute_metrics: no predictions");
  const std::size_t n = predictions.size();
  MetricsReport r;
  r.users = n;
  for (std::size_t d = 0; d < kDimensions; ++d) {
    std::vector<int> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = labels[i].bits[d];
      p[i] = predictions[i].binary[d];
    }
    r.dimensions[d] = binary_metrics(y, p);
    r.average_macro_f1 += r.dimensions[d].macro_f1;
    r.average_accuracy += r.dimensions[d].accuracy;
  }
  r.average_macro_f1 /= static_cast<double>(kDimensions);
  r.average_accuracy /= static_cast<double>(kDimensions);

  std::vector<int> y(n), p(n);
  std::size_t agree = 0;
  r.routing_histogram.assign(specialists, 0);
  std::vector<std::size_t> winners(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = labels[i].type_index();
    p[i] = predictions[i].type;
    MbtiLabels bits;
    bits.bits = predictions[i].binary;
    agree += bits.type_index() == predictions[i].type;
    if (predictions[i].specialist >= specialists) throw std::invalid_argument("compute_metrics: specialist out of range");
    ++r.routing_histogram[predictions[i].specialist];
    winners[i] = predictions[i].specialist;
  }
  r.types = multiclass_metrics(y, p, kTypes);
  r.agreement = static_cast<double>(agree) / static_cast<double>(n);
  if (!styles.empty()) r.routing_purity = routing_purity(styles, winners);
  return r;
}

bool operator==(const BinaryMetrics& a, const BinaryMetrics& b) {
  return a.accuracy == b.accuracy && a.macro_f1 == b.macro_f1;
}

bool operator==(const MulticlassMetrics& a, const MulticlassMetrics& b) {
  return a.accuracy == b.accuracy && a.macro_precision == b.macro_precision && a.macro_recall == b.macro_recall &&
         a.macro_f1 == b.macro_f1;
}

bool operator==(const MetricsReport& a, const MetricsReport& b) {
  return a.users == b.users && a.dimensions == b.dimensions && a.average_macro_f1 == b.average_macro_f1 &&
         a.average_accuracy == b.average_accuracy && a.types == b.types && a.agreement == b.agreement &&
         a.routing_histogram == b.routing_histogram && a.routing_purity == b.routing_purity &&
         a.loss_curve == b.loss_curve && a.best_epoch == b.best_epoch;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json out;
  out["users"] = r.users;
  for (std::size_t d = 0; d < kDimensions; ++d) {
    out["dimensions"][std::string(kDimensionNames[d])] = {{"accuracy", r.dimensions[d].accuracy},
                                                          {"macro_f1", r.dimensions[d].macro_f1}};
  }
  out["average_macro_f1"] = r.average_macro_f1;
  out["average_accuracy"] = r.average_accuracy;
  out["types"] = {{"accuracy", r.types.accuracy},
                  {"macro_precision", r.types.macro_precision},
                  {"macro_recall", r.types.macro_recall},
                  {"macro_f1", r.types.macro_f1}};
  out["agreement"] = r.agreement;
  out["routing_histogram"] = r.routing_histogram;
  out["routing_purity"] = r.routing_purity ? nlohmann::json(*r.routing_purity) : nlohmann::json(nullptr);
  out["loss_curve"] = r.loss_curve;
  out["best_epoch"] = r.best_epoch;
  return out;
}

}  // namespace hippd
