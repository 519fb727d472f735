#include "ekl/kg.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace ekl {

const char* to_string(EntityClass c) {
  switch (c) {
    case EntityClass::Equipment: return "Equipment";
    case EntityClass::Process: return "Process";
    case EntityClass::Material: return "Material";
    case EntityClass::Event: return "Event";
    case EntityClass::Other: return "Other";
  }
  return "Other";
}

std::optional<EntityClass> parse_entity_class(std::string_view s) {
  if (s == "Equipment") return EntityClass::Equipment;
  if (s == "Process") return EntityClass::Process;
  if (s == "Material") return EntityClass::Material;
  if (s == "Event") return EntityClass::Event;
  if (s == "Other") return EntityClass::Other;
  return std::nullopt;
}

std::uint32_t Vocab::intern(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it != index_.end()) return it->second;
  std::uint32_t id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  index_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> Vocab::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EntityId KnowledgeGraph::add_entity(std::string_view name, EntityClass cls) {
  std::uint32_t before = entities_.size();
  std::uint32_t id = entities_.intern(name);
  if (id == before) classes_.push_back(cls);
  return EntityId{id};
}

RelationId KnowledgeGraph::add_relation(std::string_view name) {
  return RelationId{relations_.intern(name)};
}

bool KnowledgeGraph::add_triple(const Triple& t) {
  if (!triple_set_.insert(t).second) {
    ++duplicates_;
    return false;
  }
  triples_.push_back(t);
  return true;
}

std::optional<EntityId> KnowledgeGraph::find_entity(std::string_view name) const {
  auto id = entities_.find(name);
  if (!id) return std::nullopt;
  return EntityId{*id};
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view name) const {
  auto id = relations_.find(name);
  if (!id) return std::nullopt;
  return RelationId{*id};
}

std::vector<Triple> KnowledgeGraph::triples_of_relation(RelationId r) const {
  std::vector<Triple> out;
  for (const Triple& t : triples_)
    if (t.relation == r) out.push_back(t);
  return out;
}

std::vector<EntityId> KnowledgeGraph::entities_of_class(EntityClass c) const {
  std::vector<EntityId> out;
  for (std::uint32_t i = 0; i < num_entities(); ++i)
    if (classes_[i] == c) out.push_back(EntityId{i});
  return out;
}

void KnowledgeGraph::write_triples(std::ostream& out) const {
  for (const Triple& t : triples_) {
    out << entity_name(t.head) << '\t' << relation_name(t.relation) << '\t'
        << entity_name(t.tail) << '\n';
  }
}

void KnowledgeGraph::write_classes(std::ostream& out) const {
  for (std::uint32_t i = 0; i < num_entities(); ++i)
    out << entities_.name(i) << '\t' << to_string(classes_[i]) << '\n';
}

namespace {

// Splits a line on tabs. Returns false if the line is blank or a comment.
bool split_fields(const std::string& line, std::vector<std::string_view>& fields) {
  fields.clear();
  std::string_view sv(line);
  if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
  if (sv.empty()) return false;
  if (sv.front() == '#') return false;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= sv.size(); ++i) {
    if (i == sv.size() || sv[i] == '\t') {
      fields.push_back(sv.substr(start, i - start));
      start = i + 1;
    }
  }
  return true;
}

}  // namespace

std::vector<Triple> ingest_into(KnowledgeGraph& kg, std::istream& in, const ClassMap* class_map) {
  std::vector<Triple> parsed;
  std::string line;
  std::vector<std::string_view> fields;
  std::size_t line_no = 0;
  auto class_of = [&](std::string_view name) {
    if (class_map) {
      auto it = class_map->find(std::string(name));
      if (it != class_map->end()) return it->second;
    }
    return EntityClass::Other;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!split_fields(line, fields)) continue;
    if (fields.size() != 3)
      throw ParseError("line " + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                       std::to_string(fields.size()));
    if (fields[0].empty() || fields[1].empty() || fields[2].empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty entity or relation name");
    EntityId h = kg.add_entity(fields[0], class_of(fields[0]));
    RelationId r = kg.add_relation(fields[1]);
    EntityId t = kg.add_entity(fields[2], class_of(fields[2]));
    kg.add_triple(Triple{h, r, t});
    parsed.push_back(Triple{h, r, t});
  }
  return parsed;
}

KnowledgeGraph KnowledgeGraph::ingest(std::istream& in, const ClassMap* class_map) {
  KnowledgeGraph kg;
  ingest_into(kg, in, class_map);
  return kg;
}

std::array<ClassStats, kEntityClassCount> degree_stats(const KnowledgeGraph& kg) {
  std::vector<std::size_t> in_deg(kg.num_entities(), 0), out_deg(kg.num_entities(), 0);
  for (const Triple& t : kg.triples()) {
    ++out_deg[t.head.value];
    ++in_deg[t.tail.value];
  }
  std::array<ClassStats, kEntityClassCount> stats{};
  std::array<std::size_t, kEntityClassCount> in_sum{}, out_sum{};
  for (std::uint32_t i = 0; i < kg.num_entities(); ++i) {
    int c = static_cast<int>(kg.entity_class(EntityId{i}));
    ++stats[c].count;
    in_sum[c] += in_deg[i];
    out_sum[c] += out_deg[i];
  }
  for (int c = 0; c < kEntityClassCount; ++c) {
    if (stats[c].count > 0) {
      stats[c].avg_in = static_cast<double>(in_sum[c]) / static_cast<double>(stats[c].count);
      stats[c].avg_out = static_cast<double>(out_sum[c]) / static_cast<double>(stats[c].count);
    }
  }
  return stats;
}

ClassMap read_class_file(std::istream& in) {
  ClassMap map;
  std::string line;
  std::vector<std::string_view> fields;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!split_fields(line, fields)) continue;
    if (fields.size() != 2)
      throw ParseError("line " + std::to_string(line_no) + ": expected 2 tab-separated fields, got " +
                       std::to_string(fields.size()));
    auto cls = parse_entity_class(fields[1]);
    if (!cls)
      throw ParseError("line " + std::to_string(line_no) + ": unknown entity class '" +
                       std::string(fields[1]) + "'");
    if (fields[0].empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty entity name");
    map[std::string(fields[0])] = *cls;
  }
  return map;
}

KnowledgeGraph load_kg_files(const std::string& triples_path, const std::string& classes_path) {
  ClassMap classes;
  if (!classes_path.empty()) {
    std::ifstream cf(classes_path);
    if (!cf) throw std::runtime_error("cannot open class file: " + classes_path);
    classes = read_class_file(cf);
  }
  std::ifstream tf(triples_path);
  if (!tf) throw std::runtime_error("cannot open triple file: " + triples_path);
  return KnowledgeGraph::ingest(tf, classes_path.empty() ? nullptr : &classes);
}

}  // namespace ekl
