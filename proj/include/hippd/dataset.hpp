#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hippd/encoder.hpp"

namespace hippd {

/// One record per line:
///   {"user_id": "...", "posts": ["..."], "labels": {"IE":0|1, "SN":0|1, "TF":0|1, "PJ":0|1}}
/// `labels` may be omitted for inference. A four-letter code string ("INFJ") is
/// also accepted for `labels`. Synthetic corpora add an integer "style".
std::vector<UserDocument> load_jsonl_dataset(const std::filesystem::path& path);
std::vector<UserDocument> parse_jsonl_dataset(std::istream& in);
UserDocument parse_user_record(std::string_view line, std::size_t line_number = 0);
std::string format_user_record(const UserDocument& doc);
void write_jsonl_dataset(const std::filesystem::path& path, const std::vector<UserDocument>& docs);

/// True if the token, stripped of leading and trailing punctuation, equals one
/// of the 16 MBTI codes ignoring case.
bool is_label_token(std::string_view token);
/// Drops label tokens from a post. Remaining tokens keep their order and are
/// joined by single spaces.
std::string leakage_filter(std::string_view post);
std::vector<std::string> leakage_filter(const std::vector<std::string>& posts);
/// Applies the leakage filter to every post of every user.
std::vector<UserDocument> preprocess(std::vector<UserDocument> docs);
/// Total label tokens remaining in a corpus.
std::size_t count_label_tokens(const std::vector<UserDocument>& docs);

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  std::uint64_t seed = 0;

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

/// Strata are type indices. Each stratum with at least five users is shuffled
/// and cut 60/20/20 (rounded half up for train and validation); users of smaller
/// strata are pooled, shuffled and cut the same way. Unlabeled users are rejected.
DatasetSplit stratified_split(const std::vector<UserDocument>& docs, std::uint64_t seed);

void write_split(const std::filesystem::path& path, const DatasetSplit& split);
DatasetSplit load_split(const std::filesystem::path& path);

/// Documents named by `ids`, in that order. Unknown ids throw DataError.
std::vector<const UserDocument*> select_users(const std::vector<UserDocument>& docs,
                                              const std::vector<std::string>& ids);

}  // namespace hippd
