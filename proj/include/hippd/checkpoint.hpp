#pragma once

#include <filesystem>
#include <string>

#include "hippd/config.hpp"
#include "hippd/model.hpp"
#include "hippd/parameter_store.hpp"
#include "json.hpp"

namespace hippd {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  ParameterStore params;  // values and Adam moments
  std::size_t epoch = 0;  // epoch whose parameters these are
  std::string rng_state;

  /// Rebuilds the model and installs the stored tensors.
  HippdModel restore() const;
};

Checkpoint make_checkpoint(const HippdModel& model, std::size_t epoch, const Rng& rng);

nlohmann::json to_json(const Checkpoint& ckpt);
/// Errors name the missing or malformed field.
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// True when configs, epochs, rng states and every tensor match bit for bit.
bool identical(const Checkpoint& a, const Checkpoint& b);

}  // namespace hippd
