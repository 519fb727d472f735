#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ekl/event_log.hpp"
#include "ekl/kg.hpp"

namespace ekl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape of the synthetic smart factory. Defaults reproduce the reference
// digital twin: 180 devices on 4 lines, 55 processes, 59 materials (the
// first `products` of which are the product variants), 728 event types,
// a 60k-occurrence log, and ~6.3k triples over 11 relations.
struct FactoryConfig {
  int lines = 4;
  int equipment_total = 180;
  int processes = 55;
  int materials = 59;  // total Material-class entities, products included
  int products = 4;
  int events_total = 728;
  long long log_length = 60000;
  double event_noise = 0.1;
  std::uint64_t seed = 0;

  // Secondary shape knobs; clamped automatically for tiny worlds.
  int devices_per_station = 5;
  int skill_count = 12;
  int skills_per_device = 8;
  int involved_per_process = 20;
  int inputs_per_process = 12;
  int outputs_per_process = 12;
  int producers_per_material = 3;
  int event_class_count = 20;

  void validate() const;  // throws ConfigError naming the violated constraint

  static FactoryConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Walk topology: per-line device chains and each device's event types.
struct WorldTopology {
  std::vector<EntityId> devices;                    // generation order
  std::vector<std::vector<std::size_t>> line_chain; // per line, indices into devices
  std::vector<std::vector<EntityId>> device_events; // parallel to devices
  std::vector<EntityId> all_events;
};

struct GroundTruth {
  std::vector<std::pair<EntityId, EntityId>> event_source;  // event -> emitting device
  std::vector<int> device_line;                             // parallel to topology.devices
  std::vector<std::vector<EntityId>> product_routing;       // process chains per product
};

struct GeneratedWorld {
  FactoryConfig config;
  KnowledgeGraph kg;
  WorldTopology topology;
  GroundTruth ground_truth;
  std::vector<EventOccurrence> log;
};

// Token random walk along each line's device chain: at each tick the active
// line's token emits one of its device's events with probability 1-noise
// (otherwise a uniformly random event) and advances to the connected
// successor. Lines are interleaved round-robin; timestamps are 0,1,2,...
std::vector<EventOccurrence> simulate_log(const WorldTopology& topology, long long length,
                                          double noise, std::uint64_t seed);

// Pure function of cfg: identical configs produce identical worlds.
GeneratedWorld generate(const FactoryConfig& cfg);

// Writes triples.tsv, classes.tsv, occurrences.csv, ground_truth.tsv.
void write_world(const GeneratedWorld& world, const std::filesystem::path& dir);

}  // namespace ekl
