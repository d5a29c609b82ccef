#include "hippd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "hippd/dataset.hpp"

namespace hippd {

double mutual_information(const std::vector<std::vector<double>>& counts) {
  if (counts.empty() || counts.front().empty()) throw std::invalid_argument("mutual_information: empty table");
  const std::size_t cols = counts.front().size();
  std::vector<double> row_sum(counts.size(), 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].size() != cols) throw std::invalid_argument("mutual_information: ragged table");
    for (std::size_t j = 0; j < cols; ++j) {
      if (counts[i][j] < 0.0) throw std::invalid_argument("mutual_information: negative count");
      row_sum[i] += counts[i][j];
      col_sum[j] += counts[i][j];
      total += counts[i][j];
    }
  }
  if (total <= 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (counts[i][j] <= 0.0) continue;
      const double pxy = counts[i][j] / total;
      mi += pxy * std::log(pxy / ((row_sum[i] / total) * (col_sum[j] / total)));
    }
  }
  return std::max(mi, 0.0);
}

CorpusAnalysis analyze_corpus(const std::vector<UserDocument>& docs, std::size_t top_k) {
  if (docs.empty()) throw std::invalid_argument("analyze_corpus: empty corpus");
  std::map<std::string, std::size_t> frequency;
  std::vector<std::set<std::string>> present(docs.size());
  for (std::size_t u = 0; u < docs.size(); ++u) {
    for (const auto& post : docs[u].posts) {
      for (auto& token : tokenize(leakage_filter(post))) {
        ++frequency[token];
        present[u].insert(std::move(token));
      }
    }
  }

  std::vector<std::pair<std::string, std::size_t>> ranked(frequency.begin(), frequency.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > top_k) ranked.resize(top_k);

  CorpusAnalysis out;
  out.documents = docs.size();
  const std::size_t k = ranked.size();
  for (const auto& [word, count] : ranked) {
    out.words.push_back(word);
    out.frequencies.push_back(count);
  }
  out.cooccurrence.assign(k, std::vector<std::size_t>(k, 0));
  for (const auto& words : present) {
    for (std::size_t a = 0; a < k; ++a) {
      if (!words.count(out.words[a])) continue;
      for (std::size_t b = 0; b < k; ++b) out.cooccurrence[a][b] += words.count(out.words[b]);
    }
  }
  for (std::size_t a = 0; a < k; ++a) {
    std::vector<std::vector<double>> table(2, std::vector<double>(16, 0.0));
    for (std::size_t u = 0; u < docs.size(); ++u) {
      if (!docs[u].labels) continue;
      table[present[u].count(out.words[a]) ? 1 : 0][docs[u].labels->type_index()] += 1.0;
    }
    out.mutual_information.push_back(mutual_information(table));
  }
  return out;
}

nlohmann::json to_json(const CorpusAnalysis& a) {
  nlohmann::json out;
  out["documents"] = a.documents;
  out["words"] = a.words;
  out["frequencies"] = a.frequencies;
  out["cooccurrence"] = a.cooccurrence;
  out["mutual_information"] = a.mutual_information;
  return out;
}

}  // namespace hippd
