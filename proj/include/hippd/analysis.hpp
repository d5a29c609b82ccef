#pragma once

#include <string>
#include <vector>

#include "hippd/encoder.hpp"
#include "json.hpp"

namespace hippd {

struct CorpusAnalysis {
  std::vector<std::string> words;                      // most frequent first
  std::vector<std::size_t> frequencies;                // token counts
  std::vector<std::vector<std::size_t>> cooccurrence;  // documents containing both words
  std::vector<double> mutual_information;              // nats, presence vs 16-type label
  std::size_t documents = 0;
};

/// Mutual information in nats of a contingency table of counts (rows: one
/// variable, columns: the other). Empty cells contribute nothing.
double mutual_information(const std::vector<std::vector<double>>& counts);

/// A document is one user. Words are lowercased tokens after the leakage
/// filter; frequency ties break alphabetically. Mutual information uses only
/// labeled users.
CorpusAnalysis analyze_corpus(const std::vector<UserDocument>& docs, std::size_t top_k = 10);

nlohmann::json to_json(const CorpusAnalysis& analysis);

}  // namespace hippd
