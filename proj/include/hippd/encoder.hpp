#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hippd/autograd.hpp"
#include "hippd/tensor.hpp"

namespace hippd {

/// The four MBTI dimensions in order I/E, S/N, T/F, P/J. Bit 1 means E, N, F, J.
struct MbtiLabels {
  std::array<int, 4> bits{};

  int type_index() const { return 8 * bits[0] + 4 * bits[1] + 2 * bits[2] + bits[3]; }
  static MbtiLabels from_type_index(int index);
  /// Four-letter code such as "INFJ".
  std::string code() const;
  static std::optional<MbtiLabels> from_code(std::string_view code);

  friend bool operator==(const MbtiLabels&, const MbtiLabels&) = default;
};

inline constexpr std::array<std::string_view, 4> kDimensionNames = {"IE", "SN", "TF", "PJ"};

struct UserDocument {
  std::string user_id;
  std::vector<std::string> posts;
  std::optional<MbtiLabels> labels;
  /// Latent style of synthetic users; absent for real data.
  std::optional<int> style;

  int type_index() const;

  friend bool operator==(const UserDocument&, const UserDocument&) = default;
};

struct EmbeddingMatrix {
  Tensor rows;  // M x d
  std::optional<Tensor> pooled;

  std::size_t count() const { return rows.rows(); }
  std::size_t width() const { return rows.cols(); }
};

using EmbeddingTable = std::map<std::string, EmbeddingMatrix>;

enum class EncoderProvider { hashed_ngram, precomputed };
enum class Pooling { mean, attention };

struct EncoderConfig {
  EncoderProvider provider = EncoderProvider::hashed_ngram;
  std::size_t d = 64;
  Pooling pooling = Pooling::attention;
  std::size_t max_tokens_per_user = 2048;
};

/// Lowercased whitespace tokens.
std::vector<std::string> tokenize(std::string_view text);
std::uint64_t fnv1a64(std::string_view bytes);

/// Signed hashed unigram+bigram features. Bigrams join adjacent tokens with '_'.
/// Each feature adds +1 (bit 63 clear) or -1 (bit 63 set) at hash mod d; the
/// sum is scaled by 1/sqrt(feature count). Empty text maps to zeros.
Tensor hash_embed_post(std::string_view text, std::size_t d);

/// Number of leading posts whose cumulative token count fits the budget,
/// never less than one.
std::size_t posts_within_budget(const UserDocument& doc, std::size_t max_tokens);

/// Produces the per-post matrix H_u for a user. The precomputed provider reads
/// rows from a table loaded with load_precomputed_embeddings.
class Encoder {
 public:
  explicit Encoder(EncoderConfig cfg, const EmbeddingTable* precomputed = nullptr);

  const EncoderConfig& config() const noexcept { return cfg_; }
  EmbeddingMatrix encode(const UserDocument& doc) const;

 private:
  EncoderConfig cfg_;
  const EmbeddingTable* precomputed_;
};

Tensor mean_pool(const Tensor& rows);
/// Attention weights softmax(H q).
Var attention_weights(Var rows, Var query);
/// z = H^T softmax(H q).
Var attention_pool(Var rows, Var query);
/// Mean pooling ignores `query`; attention pooling requires it.
Var pool(Var rows, Pooling strategy, std::optional<Var> query = std::nullopt);

/// Text format: header `HIPPD-EMB v1 d=<width>`, then one line per post
/// `<user_id>\t<post_index>\t<v1> ... <vd>`; post indices 0-based and contiguous.
EmbeddingTable load_precomputed_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

}  // namespace hippd
