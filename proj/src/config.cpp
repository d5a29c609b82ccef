#include "hippd/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "hippd/errors.hpp"

namespace hippd {
namespace {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("config key '" + key + "': cannot parse value '" + value + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end || value.empty()) bad_value(key, value);
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

struct Field {
  std::string key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

template <typename T>
Field unsigned_field(std::string key, T TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return std::to_string(c.*member); },
          [member, key](TrainConfig& c, const std::string& v) { c.*member = static_cast<T>(parse_u64(key, v)); }};
}

Field real_field(std::string key, double TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return format_real(c.*member); },
          [member, key](TrainConfig& c, const std::string& v) { c.*member = parse_real(key, v); }};
}

Field flag_field(std::string key, bool AblationFlags::*member) {
  return {key, [member](const TrainConfig& c) { return std::string(c.flags.*member ? "true" : "false"); },
          [member, key](TrainConfig& c, const std::string& v) { c.flags.*member = parse_bool(key, v); }};
}

Field text_field(std::string key, std::string TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return c.*member; },
          [member](TrainConfig& c, const std::string& v) { c.*member = v; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(unsigned_field("seed", &TrainConfig::seed));
    f.push_back(unsigned_field("split_seed", &TrainConfig::split_seed));
    f.push_back(unsigned_field("d", &TrainConfig::d));
    f.push_back(unsigned_field("h", &TrainConfig::h));
    f.push_back(unsigned_field("K", &TrainConfig::K));
    f.push_back(unsigned_field("epochs", &TrainConfig::epochs));
    f.push_back(unsigned_field("batch_size", &TrainConfig::batch_size));
    f.push_back(real_field("learning_rate", &TrainConfig::learning_rate));
    f.push_back({"pooling",
                 [](const TrainConfig& c) { return std::string(c.pooling == Pooling::mean ? "mean" : "attention"); },
                 [](TrainConfig& c, const std::string& v) {
                   if (v == "mean") c.pooling = Pooling::mean;
                   else if (v == "attention") c.pooling = Pooling::attention;
                   else bad_value("pooling", v);
                 }});
    f.push_back(real_field("alpha", &TrainConfig::alpha));
    f.push_back(real_field("beta", &TrainConfig::beta));
    f.push_back(real_field("lambda", &TrainConfig::lambda));
    f.push_back(real_field("dropout", &TrainConfig::dropout));
    f.push_back(real_field("positional_coeff", &TrainConfig::positional_coeff));
    f.push_back(unsigned_field("projection_width", &TrainConfig::projection_width));
    f.push_back(real_field("tau_start", &TrainConfig::tau_start));
    f.push_back(real_field("tau_end", &TrainConfig::tau_end));
    f.push_back(unsigned_field("anneal_epochs", &TrainConfig::anneal_epochs));
    f.push_back(flag_field("no_memory", &AblationFlags::no_memory));
    f.push_back(flag_field("mlp_memory", &AblationFlags::mlp_memory));
    f.push_back(flag_field("no_pe", &AblationFlags::no_pe));
    f.push_back(flag_field("soft_routing", &AblationFlags::soft_routing));
    f.push_back(flag_field("random_routing", &AblationFlags::random_routing));
    f.push_back(flag_field("mean_pooling", &AblationFlags::mean_pooling));
    f.push_back({"encoder",
                 [](const TrainConfig& c) {
                   return std::string(c.encoder == EncoderProvider::precomputed ? "precomputed" : "hashed_ngram");
                 },
                 [](TrainConfig& c, const std::string& v) {
                   if (v == "hashed_ngram") c.encoder = EncoderProvider::hashed_ngram;
                   else if (v == "precomputed") c.encoder = EncoderProvider::precomputed;
                   else bad_value("encoder", v);
                 }});
    f.push_back(unsigned_field("max_tokens_per_user", &TrainConfig::max_tokens_per_user));
    f.push_back(unsigned_field("mlp_hidden", &TrainConfig::mlp_hidden));
    f.push_back(unsigned_field("recurrent_hidden", &TrainConfig::recurrent_hidden));
    f.push_back(unsigned_field("conv_channels", &TrainConfig::conv_channels));
    f.push_back(text_field("data_path", &TrainConfig::data_path));
    f.push_back(text_field("embeddings_path", &TrainConfig::embeddings_path));
    f.push_back(text_field("checkpoint_path", &TrainConfig::checkpoint_path));
    f.push_back(text_field("out_path", &TrainConfig::out_path));
    return f;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  throw std::invalid_argument("unknown config key '" + key + "'");
}

}  // namespace

EncoderConfig TrainConfig::encoder_config() const {
  return EncoderConfig{encoder, d, flags.mean_pooling ? Pooling::mean : pooling, max_tokens_per_user};
}

MemoryModulationConfig TrainConfig::memory_config() const {
  MemoryModulationConfig m{alpha, beta, dropout, positional_coeff, std::nullopt};
  if (projection_width > 0) m.projection_width = projection_width;
  return m;
}

TemperatureSchedule TrainConfig::temperature() const { return TemperatureSchedule{tau_start, tau_end, anneal_epochs}; }

SpecialistConfig TrainConfig::specialist_config() const {
  return SpecialistConfig{mlp_hidden, recurrent_hidden, conv_channels};
}

std::vector<SpecialistKind> TrainConfig::specialist_kinds() const {
  static constexpr SpecialistKind cycle[] = {SpecialistKind::mlp, SpecialistKind::recurrent, SpecialistKind::conv};
  std::vector<SpecialistKind> kinds;
  for (std::size_t k = 0; k < K; ++k) kinds.push_back(cycle[k % 3]);
  return kinds;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("config: ") + what);
  };
  require(d >= 8, "d must be at least 8");
  require(h >= 1, "h must be positive");
  require(K >= 2, "K must be at least 2");
  require(epochs >= 1, "epochs must be positive");
  require(batch_size >= 1, "batch_size must be positive");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(alpha >= 0.0 && beta >= 0.0, "alpha and beta must be non-negative");
  require(lambda >= 0.0 && lambda < 1.0, "lambda must lie in [0,1)");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0,1)");
  require(tau_start > 0.0 && tau_end > 0.0, "tau_start and tau_end must be positive");
  require(max_tokens_per_user >= 1, "max_tokens_per_user must be positive");
  require(mlp_hidden >= 1 && recurrent_hidden >= 1 && conv_channels >= 1, "specialist sizes must be positive");
  require(!(flags.no_memory && flags.mlp_memory), "no_memory and mlp_memory are exclusive");
  require(!(flags.soft_routing && flags.random_routing), "soft_routing and random_routing are exclusive");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

std::map<std::string, std::string> to_key_values(const TrainConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& f : fields()) out[f.key] = f.get(cfg);
  return out;
}

TrainConfig from_key_values(const std::map<std::string, std::string>& values, TrainConfig base) {
  for (const auto& [key, value] : values) field(key).set(base, value);
  return base;
}

std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", number);
    auto key = trim(std::string_view(text).substr(0, eq));
    auto value = trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", number);
    field(key);
    if (!out.emplace(key, value).second) throw ParseError("duplicate key '" + key + "'", number);
  }
  return out;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  return from_key_values(read_key_value_file(path), std::move(base));
}

void write_config(const std::filesystem::path& path, const TrainConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write config file " + path.string());
  for (const auto& f : fields()) out << f.key << " = " << f.get(cfg) << '\n';
}

}  // namespace hippd
