#include "ekl/factory.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ekl/rng.hpp"

namespace ekl {

namespace {

std::string numbered(const char* prefix, int i, int total) {
  std::size_t width = 1;
  for (int t = total; t >= 10; t /= 10) ++width;
  std::string num = std::to_string(i + 1);
  std::string out(prefix);
  out.push_back('_');
  if (num.size() < width) out.append(width - num.size(), '0');
  out += num;
  return out;
}

// First k of a partial Fisher-Yates over [0, n).
std::vector<std::uint32_t> sample_distinct(Rng& rng, std::uint32_t n, std::uint32_t k) {
  std::vector<std::uint32_t> idx(n);
  for (std::uint32_t i = 0; i < n; ++i) idx[i] = i;
  for (std::uint32_t i = 0; i < k; ++i) {
    std::uint32_t j = i + static_cast<std::uint32_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

// Splits `total` into `parts` contiguous groups, earlier groups one larger.
std::vector<int> split_even(int total, int parts) {
  std::vector<int> sizes(parts, total / parts);
  for (int i = 0; i < total % parts; ++i) ++sizes[i];
  return sizes;
}

}  // namespace

void FactoryConfig::validate() const {
  auto positive = [](long long v, const char* name) {
    if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(lines, "lines");
  positive(equipment_total, "equipment_total");
  positive(processes, "processes");
  positive(materials, "materials");
  positive(products, "products");
  positive(events_total, "events_total");
  positive(log_length, "log_length");
  positive(devices_per_station, "devices_per_station");
  positive(skill_count, "skill_count");
  positive(skills_per_device, "skills_per_device");
  positive(involved_per_process, "involved_per_process");
  positive(inputs_per_process, "inputs_per_process");
  positive(outputs_per_process, "outputs_per_process");
  positive(producers_per_material, "producers_per_material");
  positive(event_class_count, "event_class_count");
  if (equipment_total < lines)
    throw ConfigError("equipment_total >= lines violated");
  if (events_total < equipment_total)
    throw ConfigError("events_total >= equipment_total violated (each device emits >= 1 event type)");
  if (materials < products)
    throw ConfigError("materials >= products violated (products are Material-class roots)");
  if (event_noise < 0.0 || event_noise > 1.0)
    throw ConfigError("event_noise must be in [0, 1]");
}

FactoryConfig FactoryConfig::from_json(const nlohmann::json& j) {
  FactoryConfig c;
  c.lines = j.value("lines", c.lines);
  c.equipment_total = j.value("equipment_total", c.equipment_total);
  c.processes = j.value("processes", c.processes);
  c.materials = j.value("materials", c.materials);
  c.products = j.value("products", c.products);
  c.events_total = j.value("events_total", c.events_total);
  c.log_length = j.value("log_length", c.log_length);
  c.event_noise = j.value("event_noise", c.event_noise);
  c.seed = j.value("seed", c.seed);
  c.devices_per_station = j.value("devices_per_station", c.devices_per_station);
  c.skill_count = j.value("skill_count", c.skill_count);
  c.skills_per_device = j.value("skills_per_device", c.skills_per_device);
  c.involved_per_process = j.value("involved_per_process", c.involved_per_process);
  c.inputs_per_process = j.value("inputs_per_process", c.inputs_per_process);
  c.outputs_per_process = j.value("outputs_per_process", c.outputs_per_process);
  c.producers_per_material = j.value("producers_per_material", c.producers_per_material);
  c.event_class_count = j.value("event_class_count", c.event_class_count);
  return c;
}

nlohmann::json FactoryConfig::to_json() const {
  return nlohmann::json{{"lines", lines},
                        {"equipment_total", equipment_total},
                        {"processes", processes},
                        {"materials", materials},
                        {"products", products},
                        {"events_total", events_total},
                        {"log_length", log_length},
                        {"event_noise", event_noise},
                        {"seed", seed},
                        {"devices_per_station", devices_per_station},
                        {"skill_count", skill_count},
                        {"skills_per_device", skills_per_device},
                        {"involved_per_process", involved_per_process},
                        {"inputs_per_process", inputs_per_process},
                        {"outputs_per_process", outputs_per_process},
                        {"producers_per_material", producers_per_material},
                        {"event_class_count", event_class_count}};
}

std::vector<EventOccurrence> simulate_log(const WorldTopology& topology, long long length,
                                          double noise, std::uint64_t seed) {
  Rng rng(seed);
  const int lines = static_cast<int>(topology.line_chain.size());
  std::vector<std::size_t> pos(lines, 0);
  std::vector<EventOccurrence> log;
  log.reserve(static_cast<std::size_t>(length));
  for (long long t = 0; t < length; ++t) {
    const int l = static_cast<int>(t % lines);
    const auto& chain = topology.line_chain[l];
    const std::size_t device_idx = chain[pos[l]];
    EntityId emitted;
    if (noise > 0.0 && rng.real01() < noise) {
      emitted = topology.all_events[rng.below(topology.all_events.size())];
    } else {
      const auto& own = topology.device_events[device_idx];
      emitted = own[rng.below(own.size())];
    }
    log.push_back(EventOccurrence{t, emitted});
    pos[l] = (pos[l] + 1) % chain.size();
  }
  return log;
}

GeneratedWorld generate(const FactoryConfig& cfg) {
  cfg.validate();
  GeneratedWorld world;
  world.config = cfg;
  KnowledgeGraph& kg = world.kg;
  Rng rng(derive_seed(cfg.seed, 0));

  // --- entities ---
  std::vector<EntityId> line_ids;
  for (int l = 0; l < cfg.lines; ++l)
    line_ids.push_back(kg.add_entity(numbered("line", l, cfg.lines), EntityClass::Other));

  const std::vector<int> devices_per_line = split_even(cfg.equipment_total, cfg.lines);

  struct Station {
    EntityId id;
    int line;
    std::vector<std::size_t> devices;  // indices into topology.devices
  };
  std::vector<Station> stations;
  WorldTopology& topo = world.topology;
  topo.line_chain.resize(cfg.lines);
  world.ground_truth.device_line.clear();

  int station_counter = 0;
  int device_counter = 0;
  // Station count is known up front so names get stable padding.
  int total_stations = 0;
  for (int l = 0; l < cfg.lines; ++l)
    total_stations += (devices_per_line[l] + cfg.devices_per_station - 1) / cfg.devices_per_station;

  for (int l = 0; l < cfg.lines; ++l) {
    const int n_dev = devices_per_line[l];
    const int n_st = (n_dev + cfg.devices_per_station - 1) / cfg.devices_per_station;
    std::vector<std::size_t> station_ix;
    for (int s = 0; s < n_st; ++s) {
      Station st;
      st.id = kg.add_entity(numbered("station", station_counter++, total_stations),
                            EntityClass::Other);
      st.line = l;
      station_ix.push_back(stations.size());
      stations.push_back(st);
    }
    for (int d = 0; d < n_dev; ++d) {
      EntityId dev = kg.add_entity(numbered("device", device_counter++, cfg.equipment_total),
                                   EntityClass::Equipment);
      std::size_t dev_idx = topo.devices.size();
      topo.devices.push_back(dev);
      world.ground_truth.device_line.push_back(l);
      topo.line_chain[l].push_back(dev_idx);
      stations[station_ix[d / cfg.devices_per_station]].devices.push_back(dev_idx);
    }
  }

  std::vector<EntityId> process_ids;
  for (int p = 0; p < cfg.processes; ++p)
    process_ids.push_back(kg.add_entity(numbered("process", p, cfg.processes), EntityClass::Process));

  std::vector<EntityId> material_ids;  // products first, then plain materials
  for (int p = 0; p < cfg.products; ++p)
    material_ids.push_back(kg.add_entity(numbered("product", p, cfg.products), EntityClass::Material));
  for (int m = 0; m < cfg.materials - cfg.products; ++m)
    material_ids.push_back(
        kg.add_entity(numbered("material", m, cfg.materials - cfg.products), EntityClass::Material));

  std::vector<EntityId> skill_ids;
  for (int s = 0; s < cfg.skill_count; ++s)
    skill_ids.push_back(kg.add_entity(numbered("skill", s, cfg.skill_count), EntityClass::Other));

  std::vector<EntityId> evclass_ids;
  for (int c = 0; c < cfg.event_class_count; ++c)
    evclass_ids.push_back(
        kg.add_entity(numbered("evclass", c, cfg.event_class_count), EntityClass::Other));

  const std::vector<int> events_per_device = split_even(cfg.events_total, cfg.equipment_total);
  int event_counter = 0;
  topo.device_events.resize(topo.devices.size());
  for (std::size_t d = 0; d < topo.devices.size(); ++d) {
    for (int e = 0; e < events_per_device[d]; ++e) {
      EntityId ev = kg.add_entity(numbered("event", event_counter++, cfg.events_total),
                                  EntityClass::Event);
      topo.device_events[d].push_back(ev);
      topo.all_events.push_back(ev);
      world.ground_truth.event_source.emplace_back(ev, topo.devices[d]);
    }
  }

  // Process routing: contiguous blocks of processes per product, each routed
  // on line (product mod lines).
  const std::vector<int> procs_per_product = split_even(cfg.processes, cfg.products);
  world.ground_truth.product_routing.resize(cfg.products);
  std::vector<int> process_line(cfg.processes);
  {
    int next = 0;
    for (int p = 0; p < cfg.products; ++p) {
      for (int i = 0; i < procs_per_product[p]; ++i) {
        world.ground_truth.product_routing[p].push_back(process_ids[next]);
        process_line[next] = p % cfg.lines;
        ++next;
      }
    }
  }

  // --- triples (relation interning order fixes the 11 relation ids) ---
  RelationId has_part = kg.add_relation("hasPart");
  for (const Station& st : stations) kg.add_triple({line_ids[st.line], has_part, st.id});
  for (const Station& st : stations)
    for (std::size_t d : st.devices) kg.add_triple({st.id, has_part, topo.devices[d]});
  for (int m = cfg.products; m < cfg.materials; ++m)
    kg.add_triple({material_ids[m % cfg.products], has_part, material_ids[m]});

  RelationId connected_to = kg.add_relation("connectedTo");
  for (int l = 0; l < cfg.lines; ++l) {
    const auto& chain = topo.line_chain[l];
    for (std::size_t i = 0; i + 1 < chain.size(); ++i)
      kg.add_triple({topo.devices[chain[i]], connected_to, topo.devices[chain[i + 1]]});
  }

  RelationId follows = kg.add_relation("follows");
  for (const auto& routing : world.ground_truth.product_routing)
    for (std::size_t i = 0; i + 1 < routing.size(); ++i)
      kg.add_triple({routing[i + 1], follows, routing[i]});

  RelationId involved = kg.add_relation("involvedEquipment");
  for (int p = 0; p < cfg.processes; ++p) {
    const auto& chain = topo.line_chain[process_line[p]];
    const std::uint32_t k = static_cast<std::uint32_t>(
        std::min<std::size_t>(cfg.involved_per_process, chain.size()));
    for (std::uint32_t pick : sample_distinct(rng, static_cast<std::uint32_t>(chain.size()), k))
      kg.add_triple({process_ids[p], involved, topo.devices[chain[pick]]});
  }

  RelationId has_skill = kg.add_relation("hasSkill");
  for (const EntityId dev : topo.devices) {
    const std::uint32_t k =
        static_cast<std::uint32_t>(std::min(cfg.skills_per_device, cfg.skill_count));
    for (std::uint32_t pick : sample_distinct(rng, static_cast<std::uint32_t>(cfg.skill_count), k))
      kg.add_triple({dev, has_skill, skill_ids[pick]});
  }

  RelationId has_input = kg.add_relation("hasInput");
  RelationId has_output = kg.add_relation("hasOutput");
  for (int p = 0; p < cfg.processes; ++p) {
    const std::uint32_t n = static_cast<std::uint32_t>(cfg.materials);
    const std::uint32_t k_in =
        static_cast<std::uint32_t>(std::min(cfg.inputs_per_process, cfg.materials));
    for (std::uint32_t pick : sample_distinct(rng, n, k_in))
      kg.add_triple({process_ids[p], has_input, material_ids[pick]});
    const std::uint32_t k_out =
        static_cast<std::uint32_t>(std::min(cfg.outputs_per_process, cfg.materials));
    for (std::uint32_t pick : sample_distinct(rng, n, k_out))
      kg.add_triple({process_ids[p], has_output, material_ids[pick]});
  }

  RelationId located_in = kg.add_relation("locatedIn");
  for (std::size_t d = 0; d < topo.devices.size(); ++d)
    kg.add_triple({topo.devices[d], located_in, line_ids[world.ground_truth.device_line[d]]});
  for (const Station& st : stations) kg.add_triple({st.id, located_in, line_ids[st.line]});
  for (int p = 0; p < cfg.processes; ++p)
    kg.add_triple({process_ids[p], located_in, line_ids[process_line[p]]});

  RelationId produced_by = kg.add_relation("producedBy");
  for (int m = 0; m < cfg.materials; ++m) {
    const std::uint32_t k =
        static_cast<std::uint32_t>(std::min(cfg.producers_per_material, cfg.processes));
    for (std::uint32_t pick : sample_distinct(rng, static_cast<std::uint32_t>(cfg.processes), k))
      kg.add_triple({material_ids[m], produced_by, process_ids[pick]});
  }

  RelationId is_a = kg.add_relation("isA");
  for (int e = 0; e < cfg.events_total; ++e)
    kg.add_triple({topo.all_events[e], is_a, evclass_ids[e % cfg.event_class_count]});

  RelationId has_source = kg.add_relation("hasSource");
  for (const auto& [ev, dev] : world.ground_truth.event_source)
    kg.add_triple({ev, has_source, dev});

  world.log = simulate_log(topo, cfg.log_length, cfg.event_noise, derive_seed(cfg.seed, 1));
  return world;
}

void write_world(const GeneratedWorld& world, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "triples.tsv");
    world.kg.write_triples(out);
  }
  {
    std::ofstream out(dir / "classes.tsv");
    world.kg.write_classes(out);
  }
  {
    std::ofstream out(dir / "occurrences.csv");
    write_occurrences_csv(out, world.log, world.kg);
  }
  {
    std::ofstream out(dir / "ground_truth.tsv");
    for (const auto& [ev, dev] : world.ground_truth.event_source)
      out << world.kg.entity_name(ev) << '\t' << world.kg.entity_name(dev) << '\n';
  }
}

}  // namespace ekl
