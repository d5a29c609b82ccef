#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hippd/encoder.hpp"

namespace hippd {

/// Synthetic corpus with latent writing styles. Each user draws a style
/// uniformly and each label bit independently at its positive rate. A post
/// carries one marker word per dimension, chosen by (style, dimension, bit), among
/// filler words from the style's own slice of the vocabulary. With probability
/// `token_noise` each word is then replaced by a uniform vocabulary word.
struct GeneratorConfig {
  std::size_t users = 600;
  std::size_t posts_per_user = 8;
  std::size_t vocabulary = 2000;
  std::size_t styles = 3;
  std::size_t words_per_post = 12;
  /// P(bit = 1) for I/E, S/N, T/F, P/J; 1 means E, N, F, J.
  std::array<double, 4> positive_rates = {0.23, 0.5, 0.5, 0.5};
  double token_noise = 0.0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

std::string vocabulary_word(std::size_t index);
/// Vocabulary index of the marker for (style, dimension, bit).
std::size_t marker_index(std::size_t style, std::size_t dimension, int bit);

std::vector<UserDocument> generate_synthetic(const GeneratorConfig& cfg, std::uint64_t seed);

}  // namespace hippd
