#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hippd/encoder.hpp"
#include "hippd/memory.hpp"
#include "hippd/routing.hpp"

namespace hippd {

/// Ablations. Each flag bypasses exactly one component.
struct AblationFlags {
  bool no_memory = false;       // pooled vector goes straight to routing
  bool mlp_memory = false;      // gated cell replaced by a one-hidden-layer perceptron
  bool no_pe = false;           // prediction error pinned to 0
  bool soft_routing = false;    // softmax mixture over all specialists, train and eval
  bool random_routing = false;  // winner drawn uniformly
  bool mean_pooling = false;    // overrides attention pooling

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct TrainConfig {
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  std::size_t d = 64;
  std::size_t h = 32;
  std::size_t K = 3;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 1e-4;
  Pooling pooling = Pooling::attention;
  double alpha = 0.1;
  double beta = 0.1;
  double lambda = 0.1;
  double dropout = 0.2;
  double positional_coeff = 0.1;
  std::size_t projection_width = 0;  // 0: no projection
  double tau_start = 1.0;
  double tau_end = 0.1;
  std::size_t anneal_epochs = 20;
  AblationFlags flags;
  EncoderProvider encoder = EncoderProvider::hashed_ngram;
  std::size_t max_tokens_per_user = 2048;
  std::size_t mlp_hidden = 128;
  std::size_t recurrent_hidden = 32;
  std::size_t conv_channels = 32;
  std::string data_path;
  std::string embeddings_path;
  std::string checkpoint_path;
  std::string out_path;

  EncoderConfig encoder_config() const;
  MemoryModulationConfig memory_config() const;
  TemperatureSchedule temperature() const;
  SpecialistConfig specialist_config() const;
  /// Specialist kinds cycle mlp, recurrent, conv over the K slots.
  std::vector<SpecialistKind> specialist_kinds() const;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Every config key, in canonical order. Keys equal the TrainConfig field names
/// (ablation flags appear under their own names).
const std::vector<std::string>& config_keys();

/// Flat key/value form. Reals use %.17g so values round-trip exactly.
std::map<std::string, std::string> to_key_values(const TrainConfig& cfg);
/// Applies each pair on top of `base`. Unknown keys and unparsable values throw
/// std::invalid_argument naming the key.
TrainConfig from_key_values(const std::map<std::string, std::string>& values, TrainConfig base = {});

/// Reads `key = value` lines; blank lines and lines starting with '#' are skipped.
/// Malformed lines throw ParseError with the line number; unknown keys throw
/// std::invalid_argument.
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path);
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});
void write_config(const std::filesystem::path& path, const TrainConfig& cfg);

}  // namespace hippd
