#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ekl/model.hpp"
#include "ekl/trainer.hpp"

namespace ekl {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ModelParams params;
  TrainConfig cfg;
  std::vector<EpochStats> history;
  std::uint32_t num_entities = 0;
  std::uint32_t num_relations = 0;
};

// Two-file artifact in `dir`: checkpoint.json (format version, config echo,
// vocabulary sizes, tensor shapes, metric history) and checkpoint.bin (the
// tensors as raw little-endian doubles, row-major, concatenated in the order
// listed in the JSON). Round-trips are bit-exact.
void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params,
                     const TrainConfig& cfg, const std::vector<EpochStats>& history);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace ekl
