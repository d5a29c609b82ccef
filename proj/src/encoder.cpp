#include "hippd/encoder.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hippd/errors.hpp"

namespace hippd {

namespace {

constexpr std::array<char, 4> kNegativeLetter = {'I', 'S', 'T', 'P'};
constexpr std::array<char, 4> kPositiveLetter = {'E', 'N', 'F', 'J'};

}  // namespace

MbtiLabels MbtiLabels::from_type_index(int index) {
  if (index < 0 || index > 15) throw std::invalid_argument("type index out of range");
  return MbtiLabels{{(index >> 3) & 1, (index >> 2) & 1, (index >> 1) & 1, index & 1}};
}

std::string MbtiLabels::code() const {
  std::string out(4, ' ');
  for (std::size_t d = 0; d < 4; ++d) out[d] = bits[d] ? kPositiveLetter[d] : kNegativeLetter[d];
  return out;
}

std::optional<MbtiLabels> MbtiLabels::from_code(std::string_view code) {
  if (code.size() != 4) return std::nullopt;
  MbtiLabels labels;
  for (std::size_t d = 0; d < 4; ++d) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(code[d])));
    if (c == kPositiveLetter[d]) {
      labels.bits[d] = 1;
    } else if (c == kNegativeLetter[d]) {
      labels.bits[d] = 0;
    } else {
      return std::nullopt;
    }
  }
  return labels;
}

int UserDocument::type_index() const {
  if (!labels) throw std::invalid_argument("user '" + user_id + "' has no labels");
  return labels->type_index();
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ULL;
  }
  return hash;
}

Tensor hash_embed_post(std::string_view text, std::size_t d) {
  if (d < 8) throw std::invalid_argument("embedding width must be at least 8");
  Tensor out({d});
  const auto tokens = tokenize(text);
  if (tokens.empty()) return out;

  std::size_t features = 0;
  auto add_feature = [&](std::string_view feature) {
    const auto h = fnv1a64(feature);
    out[h % d] += (h >> 63) ? -1.0 : 1.0;
    ++features;
  };
  for (const auto& tok : tokens) add_feature(tok);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) add_feature(tokens[i] + "_" + tokens[i + 1]);

  const double norm = 1.0 / std::sqrt(static_cast<double>(features));
  for (auto& v : out.values()) v *= norm;
  return out;
}

std::size_t posts_within_budget(const UserDocument& doc, std::size_t max_tokens) {
  if (doc.posts.empty()) return 0;
  std::size_t used = 0, kept = 0;
  for (const auto& post : doc.posts) {
    used += tokenize(post).size();
    if (used > max_tokens) break;
    ++kept;
  }
  return std::max<std::size_t>(kept, 1);
}

Encoder::Encoder(EncoderConfig cfg, const EmbeddingTable* precomputed)
    : cfg_(cfg), precomputed_(precomputed) {
  if (cfg_.d < 8) throw std::invalid_argument("encoder width d must be at least 8");
  if (cfg_.max_tokens_per_user < 1) throw std::invalid_argument("max_tokens_per_user must be positive");
  if (cfg_.provider == EncoderProvider::precomputed && precomputed_ == nullptr) {
    throw std::invalid_argument("precomputed provider requires a loaded embedding table");
  }
}

EmbeddingMatrix Encoder::encode(const UserDocument& doc) const {
  if (doc.posts.empty()) throw std::invalid_argument("user '" + doc.user_id + "' has no posts");
  const auto kept = posts_within_budget(doc, cfg_.max_tokens_per_user);

  if (cfg_.provider == EncoderProvider::precomputed) {
    auto it = precomputed_->find(doc.user_id);
    if (it == precomputed_->end()) throw MissingEmbeddingError(doc.user_id);
    const auto& src = it->second.rows;
    if (src.cols() != cfg_.d) {
      throw DataError("precomputed width " + std::to_string(src.cols()) + " for user '" + doc.user_id +
                      "' differs from encoder width " + std::to_string(cfg_.d));
    }
    const auto rows = std::min(kept, src.rows());
    auto values = src.values().subspan(0, rows * cfg_.d);
    return EmbeddingMatrix{Tensor::matrix(rows, cfg_.d, {values.begin(), values.end()}), std::nullopt};
  }

  Tensor rows({kept, cfg_.d});
  for (std::size_t i = 0; i < kept; ++i) {
    const auto h = hash_embed_post(doc.posts[i], cfg_.d);
    std::copy(h.values().begin(), h.values().end(), rows.row(i).begin());
  }
  return EmbeddingMatrix{std::move(rows), std::nullopt};
}

Tensor mean_pool(const Tensor& rows) {
  if (rows.empty()) throw std::invalid_argument("pool: empty embedding matrix");
  Tensor out({rows.cols()});
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto r = rows.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  for (auto& v : out.values()) v /= static_cast<double>(rows.rows());
  return out;
}

Var attention_weights(Var rows, Var query) { return ad::softmax(ad::matvec(rows, query)); }

Var attention_pool(Var rows, Var query) {
  return ad::matvec(ad::transpose(rows), attention_weights(rows, query));
}

Var pool(Var rows, Pooling strategy, std::optional<Var> query) {
  if (rows.value().empty()) throw std::invalid_argument("pool: empty embedding matrix");
  if (strategy == Pooling::mean) return ad::mean_rows(rows);
  if (!query) throw std::invalid_argument("attention pooling requires a query vector");
  return attention_pool(rows, *query);
}

EmbeddingTable load_precomputed_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  std::size_t width = 0;
  {
    constexpr std::string_view prefix = "HIPPD-EMB v1 d=";
    if (line.rfind(prefix, 0) != 0) throw ParseError("expected header '" + std::string(prefix) + "<width>'", 1);
    const auto digits = std::string_view(line).substr(prefix.size());
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), width);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || width == 0) {
      throw ParseError("invalid width in header", 1);
    }
  }

  std::map<std::string, std::vector<double>> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) throw ParseError("expected <user_id>\\t<post_index>\\t<values>", line_no);
    const std::string user = line.substr(0, tab1);
    if (user.empty()) throw ParseError("empty user_id", line_no);

    std::size_t index = 0;
    {
      const auto field = std::string_view(line).substr(tab1 + 1, tab2 - tab1 - 1);
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), index);
      if (ec != std::errc() || ptr != field.data() + field.size()) throw ParseError("invalid post index", line_no);
    }
    auto& rows = values[user];
    const auto have = rows.size() / width;
    if (index < have) {
      throw ParseError("duplicate post index " + std::to_string(index) + " for user '" + user + "'", line_no);
    }
    if (index != have) {
      throw ParseError("post index " + std::to_string(index) + " for user '" + user + "' is not contiguous",
                       line_no);
    }

    std::istringstream fields(line.substr(tab2 + 1));
    std::string tok;
    std::size_t count = 0;
    while (fields >> tok) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
        throw ParseError("invalid value '" + tok + "'", line_no);
      }
      rows.push_back(v);
      ++count;
    }
    if (count != width) {
      throw ParseError("row has " + std::to_string(count) + " values, header declares d=" + std::to_string(width),
                       line_no);
    }
  }

  EmbeddingTable table;
  for (auto& [user, flat] : values) {
    const auto rows = flat.size() / width;
    table.emplace(user, EmbeddingMatrix{Tensor::matrix(rows, width, std::move(flat)), std::nullopt});
  }
  return table;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  if (table.empty()) throw std::invalid_argument("write_embeddings: empty table");
  const auto width = table.begin()->second.width();
  std::ofstream out(path);
  if (!out) throw DataError("cannot write embedding file " + path.string());
  out << "HIPPD-EMB v1 d=" << width << '\n';
  char buf[32];
  for (const auto& [user, m] : table) {
    if (m.width() != width) throw std::invalid_argument("write_embeddings: inconsistent widths");
    for (std::size_t i = 0; i < m.count(); ++i) {
      out << user << '\t' << i << '\t';
      const auto r = m.rows.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", r[j]);
        out << (j ? " " : "") << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace hippd
