#include "hippd/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "hippd/errors.hpp"

namespace hippd {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "hippd-checkpoint";

[[noreturn]] void corrupt(const std::string& field, const std::string& why) {
  throw ParseError("checkpoint field '" + field + "': " + why, 0);
}

const json& require(const json& doc, const std::string& key, const std::string& path) {
  if (!doc.is_object()) corrupt(path, "expected an object");
  auto it = doc.find(key);
  if (it == doc.end()) corrupt(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

Tensor read_tensor(const json& values, const Shape& shape, const std::string& field) {
  if (!values.is_array()) corrupt(field, "expected an array");
  std::size_t expected = 1;
  for (auto s : shape) expected *= s;
  if (values.size() != expected) {
    corrupt(field, "expected " + std::to_string(expected) + " values, found " + std::to_string(values.size()));
  }
  std::vector<double> data;
  data.reserve(expected);
  for (const auto& v : values) {
    if (!v.is_number()) corrupt(field, "non-numeric value");
    data.push_back(v.get<double>());
  }
  return Tensor(shape, std::move(data));
}

bool same_bits(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  auto x = a.values(), y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::memcmp(&x[i], &y[i], sizeof(double)) != 0) return false;
  return true;
}

}  // namespace

HippdModel Checkpoint::restore() const {
  HippdModel model(config);
  auto& target = model.params();
  if (target.size() != params.size()) {
    throw DataError("checkpoint has " + std::to_string(params.size()) + " parameters, model expects " +
                    std::to_string(target.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& src = params.params()[i];
    auto& dst = target.params()[i];
    if (src.name != dst.name || src.value.shape() != dst.value.shape()) {
      throw DataError("checkpoint parameter '" + src.name + "' does not match model parameter '" + dst.name + "'");
    }
    dst.value = src.value;
    dst.first_moment = src.first_moment;
    dst.second_moment = src.second_moment;
  }
  target.set_step(params.step());
  return model;
}

Checkpoint make_checkpoint(const HippdModel& model, std::size_t epoch, const Rng& rng) {
  Checkpoint ckpt{model.config(), model.params(), epoch, rng.serialize()};
  ckpt.params.zero_grad();
  return ckpt;
}

json to_json(const Checkpoint& ckpt) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kCheckpointVersion;
  doc["config"] = to_key_values(ckpt.config);
  doc["epoch"] = ckpt.epoch;
  doc["adam_step"] = ckpt.params.step();
  doc["rng_state"] = ckpt.rng_state;
  json params = json::array();
  for (const auto& p : ckpt.params.params()) {
    auto flat = [](const Tensor& t) { return std::vector<double>(t.values().begin(), t.values().end()); };
    params.push_back({{"name", p.name},
                      {"shape", p.value.shape()},
                      {"value", flat(p.value)},
                      {"first_moment", flat(p.first_moment)},
                      {"second_moment", flat(p.second_moment)}});
  }
  doc["parameters"] = std::move(params);
  return doc;
}

Checkpoint checkpoint_from_json(const json& doc) {
  try {
    const auto& format = require(doc, "format", "");
    if (!format.is_string() || format.get<std::string>() != kFormat) corrupt("format", "not a checkpoint");
    const auto& version = require(doc, "version", "");
    if (!version.is_number_integer() || version.get<int>() != kCheckpointVersion) {
      corrupt("version", "unsupported version " + version.dump() + ", expected " + std::to_string(kCheckpointVersion));
    }

    const auto& cfg = require(doc, "config", "");
    if (!cfg.is_object()) corrupt("config", "expected an object");
    std::map<std::string, std::string> values;
    for (const auto& [key, value] : cfg.items()) {
      if (!value.is_string()) corrupt("config." + key, "expected a string");
      values[key] = value.get<std::string>();
    }
    Checkpoint ckpt;
    try {
      ckpt.config = from_key_values(values);
    } catch (const std::invalid_argument& e) {
      corrupt("config", e.what());
    }

    const auto& epoch = require(doc, "epoch", "");
    if (!epoch.is_number_unsigned()) corrupt("epoch", "expected a non-negative integer");
    ckpt.epoch = epoch.get<std::size_t>();
    const auto& step = require(doc, "adam_step", "");
    if (!step.is_number_unsigned()) corrupt("adam_step", "expected a non-negative integer");
    const auto& rng = require(doc, "rng_state", "");
    if (!rng.is_string()) corrupt("rng_state", "expected a string");
    ckpt.rng_state = rng.get<std::string>();
    try {
      Rng::deserialize(ckpt.rng_state);
    } catch (const std::invalid_argument&) {
      corrupt("rng_state", "malformed generator state");
    }

    const auto& params = require(doc, "parameters", "");
    if (!params.is_array()) corrupt("parameters", "expected an array");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string at = "parameters[" + std::to_string(i) + "]";
      const auto& p = params[i];
      const auto& name = require(p, "name", at);
      if (!name.is_string()) corrupt(at + ".name", "expected a string");
      const auto& shape_json = require(p, "shape", at);
      Shape shape;
      if (!shape_json.is_array()) corrupt(at + ".shape", "expected an array");
      for (const auto& s : shape_json) {
        if (!s.is_number_unsigned()) corrupt(at + ".shape", "expected non-negative integers");
        shape.push_back(s.get<std::size_t>());
      }
      const auto id = ckpt.params.add(name.get<std::string>(), read_tensor(require(p, "value", at), shape, at + ".value"));
      ckpt.params[id].first_moment = read_tensor(require(p, "first_moment", at), shape, at + ".first_moment");
      ckpt.params[id].second_moment = read_tensor(require(p, "second_moment", at), shape, at + ".second_moment");
    }
    ckpt.params.set_step(step.get<std::uint64_t>());
    return ckpt;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), 0);
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << to_json(ckpt).dump() << '\n';
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint is truncated or not JSON: ") + e.what(), 0);
  }
  return checkpoint_from_json(doc);
}

bool identical(const Checkpoint& a, const Checkpoint& b) {
  if (!(a.config == b.config) || a.epoch != b.epoch || a.rng_state != b.rng_state) return false;
  if (a.params.size() != b.params.size() || a.params.step() != b.params.step()) return false;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    const auto& x = a.params.params()[i];
    const auto& y = b.params.params()[i];
    if (x.name != y.name || !same_bits(x.value, y.value) || !same_bits(x.first_moment, y.first_moment) ||
        !same_bits(x.second_moment, y.second_moment)) {
      return false;
    }
  }
  return true;
}

}  // namespace hippd
