#include "hippd/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hippd/errors.hpp"
#include "hippd/rng.hpp"
#include "json.hpp"

namespace hippd {

using nlohmann::json;

namespace {

MbtiLabels parse_labels(const json& value, std::size_t line) {
  if (value.is_string()) {
    const auto code = value.get<std::string>();
    auto labels = MbtiLabels::from_code(code);
    if (!labels) throw DataError("line " + std::to_string(line) + ": unknown label '" + code + "'");
    return *labels;
  }
  if (!value.is_object()) throw ParseError("labels must be an object or a type code", line);
  MbtiLabels labels;
  for (const auto& [key, bit] : value.items()) {
    auto it = std::find(kDimensionNames.begin(), kDimensionNames.end(), key);
    if (it == kDimensionNames.end()) throw DataError("line " + std::to_string(line) + ": unknown label '" + key + "'");
    if (!bit.is_number_integer() || (bit.get<int>() != 0 && bit.get<int>() != 1)) {
      throw DataError("line " + std::to_string(line) + ": label " + key + " has value '" + bit.dump() +
                      "', expected 0 or 1");
    }
    labels.bits[it - kDimensionNames.begin()] = bit.get<int>();
  }
  if (value.size() != kDimensionNames.size()) {
    throw DataError("line " + std::to_string(line) + ": labels need all of IE, SN, TF, PJ");
  }
  return labels;
}

void cut(std::vector<std::string> ids, Rng& rng, DatasetSplit& out) {
  shuffle(ids, rng);
  const std::size_t n = ids.size();
  const std::size_t n_train = (6 * n + 5) / 10;
  const std::size_t n_val = std::min((2 * n + 5) / 10, n - n_train);
  for (std::size_t i = 0; i < n; ++i) {
    auto& part = i < n_train ? out.train : i < n_train + n_val ? out.validation : out.test;
    part.push_back(std::move(ids[i]));
  }
}

}  // namespace

UserDocument parse_user_record(std::string_view line, std::size_t line_number) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_number);
  }
  if (!record.is_object()) throw ParseError("record must be a JSON object", line_number);

  UserDocument doc;
  auto id = record.find("user_id");
  if (id == record.end() || !id->is_string()) throw ParseError("missing string field 'user_id'", line_number);
  doc.user_id = id->get<std::string>();

  auto posts = record.find("posts");
  if (posts == record.end() || !posts->is_array()) throw ParseError("missing array field 'posts'", line_number);
  for (const auto& p : *posts) {
    if (!p.is_string()) throw ParseError("posts must be strings", line_number);
    doc.posts.push_back(p.get<std::string>());
  }

  if (auto labels = record.find("labels"); labels != record.end() && !labels->is_null()) {
    doc.labels = parse_labels(*labels, line_number);
  }
  if (auto style = record.find("style"); style != record.end()) {
    if (!style->is_number_integer()) throw ParseError("style must be an integer", line_number);
    doc.style = style->get<int>();
  }
  for (const auto& [key, value] : record.items()) {
    if (key != "user_id" && key != "posts" && key != "labels" && key != "style") {
      throw ParseError("unknown field '" + key + "'", line_number);
    }
  }
  return doc;
}

std::vector<UserDocument> parse_jsonl_dataset(std::istream& in) {
  std::vector<UserDocument> docs;
  std::set<std::string> seen;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto doc = parse_user_record(line, number);
    if (!seen.insert(doc.user_id).second) throw ParseError("duplicate user_id '" + doc.user_id + "'", number);
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<UserDocument> load_jsonl_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  return parse_jsonl_dataset(in);
}

std::string format_user_record(const UserDocument& doc) {
  json record;
  record["user_id"] = doc.user_id;
  record["posts"] = doc.posts;
  if (doc.labels) {
    json labels = json::object();
    for (std::size_t d = 0; d < kDimensionNames.size(); ++d) labels[std::string(kDimensionNames[d])] = doc.labels->bits[d];
    record["labels"] = labels;
  }
  if (doc.style) record["style"] = *doc.style;
  return record.dump();
}

void write_jsonl_dataset(const std::filesystem::path& path, const std::vector<UserDocument>& docs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset " + path.string());
  for (const auto& doc : docs) out << format_user_record(doc) << '\n';
}

bool is_label_token(std::string_view token) {
  auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  while (!token.empty() && !alnum(token.front())) token.remove_prefix(1);
  while (!token.empty() && !alnum(token.back())) token.remove_suffix(1);
  return token.size() == 4 && MbtiLabels::from_code(token).has_value();
}

std::string leakage_filter(std::string_view post) {
  std::string out;
  std::istringstream in{std::string(post)};
  std::string token;
  while (in >> token) {
    if (is_label_token(token)) continue;
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

std::vector<std::string> leakage_filter(const std::vector<std::string>& posts) {
  std::vector<std::string> out;
  out.reserve(posts.size());
  for (const auto& p : posts) out.push_back(leakage_filter(p));
  return out;
}

std::vector<UserDocument> preprocess(std::vector<UserDocument> docs) {
  for (auto& doc : docs) doc.posts = leakage_filter(doc.posts);
  return docs;
}

std::size_t count_label_tokens(const std::vector<UserDocument>& docs) {
  std::size_t count = 0;
  for (const auto& doc : docs) {
    for (const auto& post : doc.posts) {
      std::istringstream in(post);
      std::string token;
      while (in >> token) count += is_label_token(token);
    }
  }
  return count;
}

DatasetSplit stratified_split(const std::vector<UserDocument>& docs, std::uint64_t seed) {
  if (docs.empty()) throw std::invalid_argument("stratified_split: empty dataset");
  std::map<int, std::vector<std::string>> strata;
  for (const auto& doc : docs) {
    if (!doc.labels) throw DataError("stratified_split: user '" + doc.user_id + "' has no labels");
    strata[doc.labels->type_index()].push_back(doc.user_id);
  }
  DatasetSplit out;
  out.seed = seed;
  Rng rng(seed);
  std::vector<std::string> pooled;
  for (auto& [type, ids] : strata) {
    if (ids.size() >= 5) {
      cut(std::move(ids), rng, out);
    } else {
      pooled.insert(pooled.end(), ids.begin(), ids.end());
    }
  }
  if (!pooled.empty()) cut(std::move(pooled), rng, out);
  return out;
}

void write_split(const std::filesystem::path& path, const DatasetSplit& split) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write split " + path.string());
  json doc{{"seed", split.seed}, {"train", split.train}, {"validation", split.validation}, {"test", split.test}};
  out << doc.dump(2) << '\n';
}

DatasetSplit load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split " + path.string());
  try {
    const auto doc = json::parse(in);
    DatasetSplit split;
    split.seed = doc.at("seed").get<std::uint64_t>();
    split.train = doc.at("train").get<std::vector<std::string>>();
    split.validation = doc.at("validation").get<std::vector<std::string>>();
    split.test = doc.at("test").get<std::vector<std::string>>();
    return split;
  } catch (const json::exception& e) {
    throw ParseError(std::string("split file: ") + e.what(), 0);
  }
}

std::vector<const UserDocument*> select_users(const std::vector<UserDocument>& docs,
                                              const std::vector<std::string>& ids) {
  std::map<std::string_view, const UserDocument*> index;
  for (const auto& doc : docs) index.emplace(doc.user_id, &doc);
  std::vector<const UserDocument*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("split references unknown user '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

}  // namespace hippd
