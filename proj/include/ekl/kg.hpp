#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ekl {

struct EntityId {
  std::uint32_t value = 0;
  friend auto operator<=>(const EntityId&, const EntityId&) = default;
};

struct RelationId {
  std::uint32_t value = 0;
  friend auto operator<=>(const RelationId&, const RelationId&) = default;
};

enum class EntityClass : std::uint8_t { Equipment, Process, Material, Event, Other };
inline constexpr int kEntityClassCount = 5;

const char* to_string(EntityClass c);
std::optional<EntityClass> parse_entity_class(std::string_view s);

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const {
    std::uint64_t x = (std::uint64_t(t.head.value) << 42) ^
                      (std::uint64_t(t.relation.value) << 21) ^ t.tail.value;
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    return static_cast<std::size_t>(x);
  }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

// Thrown by ingestion on malformed input; message carries the line number.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Interned name table. Ids are dense and assigned in first-appearance order,
// which anchors every downstream seeded computation.
class Vocab {
 public:
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const { return names_[id]; }
  std::uint32_t size() const { return static_cast<std::uint32_t>(names_.size()); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

using ClassMap = std::unordered_map<std::string, EntityClass>;

// Immutable after construction; triples keep ingestion order with
// duplicate-free set semantics.
class KnowledgeGraph {
 public:
  EntityId add_entity(std::string_view name, EntityClass cls = EntityClass::Other);
  RelationId add_relation(std::string_view name);
  // Returns false (and counts a duplicate) when the triple is already present.
  bool add_triple(const Triple& t);

  std::uint32_t num_entities() const { return entities_.size(); }
  std::uint32_t num_relations() const { return relations_.size(); }
  const std::vector<Triple>& triples() const { return triples_; }
  std::size_t duplicate_count() const { return duplicates_; }

  const std::string& entity_name(EntityId e) const { return entities_.name(e.value); }
  const std::string& relation_name(RelationId r) const { return relations_.name(r.value); }
  EntityClass entity_class(EntityId e) const { return classes_[e.value]; }
  std::optional<EntityId> find_entity(std::string_view name) const;
  std::optional<RelationId> find_relation(std::string_view name) const;
  bool contains(const Triple& t) const { return triple_set_.count(t) > 0; }

  std::vector<Triple> triples_of_relation(RelationId r) const;
  std::vector<EntityId> entities_of_class(EntityClass c) const;

  void write_triples(std::ostream& out) const;
  void write_classes(std::ostream& out) const;

  // Parses the TSV triple stream (head TAB relation TAB tail, '#' comments,
  // blank lines skipped). Entities missing from class_map default to Other.
  static KnowledgeGraph ingest(std::istream& in, const ClassMap* class_map = nullptr);

 private:
  Vocab entities_;
  Vocab relations_;
  std::vector<EntityClass> classes_;
  std::vector<Triple> triples_;
  TripleSet triple_set_;
  std::size_t duplicates_ = 0;
};

struct ClassStats {
  std::size_t count = 0;
  double avg_in = 0.0;
  double avg_out = 0.0;
};

// Per-class entity count and mean in/out triple degree.
std::array<ClassStats, kEntityClassCount> degree_stats(const KnowledgeGraph& kg);

ClassMap read_class_file(std::istream& in);

// Same parse as KnowledgeGraph::ingest, but extends an existing graph so one
// vocabulary can span several triple files (train/valid/test splits). Returns
// the triples of this stream in file order.
std::vector<Triple> ingest_into(KnowledgeGraph& kg, std::istream& in,
                                const ClassMap* class_map = nullptr);

KnowledgeGraph load_kg_files(const std::string& triples_path,
                             const std::string& classes_path = std::string());

}  // namespace ekl
