#include "hippd/synthetic.hpp"

#include <cstdio>
#include <stdexcept>

#include "hippd/rng.hpp"

namespace hippd {

void GeneratorConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("generator: ") + what);
  };
  require(users >= 1, "users must be positive");
  require(posts_per_user >= 1, "posts_per_user must be positive");
  require(styles >= 1, "styles must be positive");
  require(words_per_post >= 4, "words_per_post must be at least 4");
  require(vocabulary >= styles * 9, "vocabulary too small for the markers and one filler word per style");
  for (double r : positive_rates) require(r > 0.0 && r < 1.0, "positive rates must lie in (0,1)");
  require(token_noise >= 0.0 && token_noise <= 1.0, "token_noise must lie in [0,1]");
}

std::string vocabulary_word(std::size_t index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "w%05zu", index);
  return buf;
}

std::size_t marker_index(std::size_t style, std::size_t dimension, int bit) {
  return style * 8 + dimension * 2 + static_cast<std::size_t>(bit != 0);
}

std::vector<UserDocument> generate_synthetic(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const std::size_t markers = cfg.styles * 8;
  const std::size_t slice = (cfg.vocabulary - markers) / cfg.styles;

  std::vector<UserDocument> docs;
  docs.reserve(cfg.users);
  for (std::size_t u = 0; u < cfg.users; ++u) {
    UserDocument doc;
    char id[24];
    std::snprintf(id, sizeof id, "user%05zu", u);
    doc.user_id = id;
    const auto style = rng.below(cfg.styles);
    doc.style = static_cast<int>(style);
    MbtiLabels labels;
    for (std::size_t d = 0; d < 4; ++d) labels.bits[d] = rng.bernoulli(cfg.positive_rates[d]) ? 1 : 0;
    doc.labels = labels;

    for (std::size_t p = 0; p < cfg.posts_per_user; ++p) {
      std::vector<std::size_t> words;
      for (std::size_t d = 0; d < 4; ++d) words.push_back(marker_index(style, d, labels.bits[d]));
      while (words.size() < cfg.words_per_post) words.push_back(markers + style * slice + rng.below(slice));
      shuffle(words, rng);
      std::string post;
      for (auto w : words) {
        if (cfg.token_noise > 0.0 && rng.bernoulli(cfg.token_noise)) w = rng.below(cfg.vocabulary);
        if (!post.empty()) post += ' ';
        post += vocabulary_word(w);
      }
      doc.posts.push_back(std::move(post));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace hippd
