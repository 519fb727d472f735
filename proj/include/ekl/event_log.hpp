#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ekl/kg.hpp"

namespace ekl {

struct EventOccurrence {
  std::int64_t timestamp_ms = 0;
  EntityId event;
  friend auto operator<=>(const EventOccurrence&, const EventOccurrence&) = default;
};

struct Sequence {
  std::vector<EntityId> events;
};

struct SequenceDataset {
  std::vector<Sequence> sequences;
  std::size_t total_events() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.events.size();
    return n;
  }
};

struct SkipgramPair {
  EntityId center;
  EntityId context;
  friend auto operator<=>(const SkipgramPair&, const SkipgramPair&) = default;
};

struct PrefixInstance {
  std::vector<EntityId> prefix;  // immediate predecessors, oldest first
  EntityId target;
};

// Splits the (stably sorted) occurrence stream into sequences wherever the
// inter-arrival gap exceeds gap_ms. Flattening the result reproduces the
// sorted input order.
SequenceDataset sessionize(std::vector<EventOccurrence> occurrences, std::int64_t gap_ms);

// One pair per (center, context) position with 0 < |j-k| <= window, emitted
// in scan order: centers ascending, contexts ascending within the window.
std::vector<SkipgramPair> skipgram_pairs(const SequenceDataset& ds, int window);

// One instance per position k >= 2 of each sequence: target = k-th event,
// prefix = up to `width` immediate predecessors (all k-1 when width is empty).
std::vector<PrefixInstance> prefix_instances(const SequenceDataset& ds,
                                             std::optional<int> width);

// Splits sequences longer than max_len into consecutive chunks. Used to keep
// full-prefix BPTT bounded on long logs.
SequenceDataset chunk_sequences(const SequenceDataset& ds, std::size_t max_len);

// Occurrence CSV: header "timestamp_ms,event"; event names must be
// Event-class entities of kg.
std::vector<EventOccurrence> read_occurrences_csv(std::istream& in, const KnowledgeGraph& kg);
void write_occurrences_csv(std::ostream& out, const std::vector<EventOccurrence>& occ,
                           const KnowledgeGraph& kg);

// Sequence file: one sequence per line, space-separated event entity names.
SequenceDataset read_sequence_file(std::istream& in, const KnowledgeGraph& kg);

}  // namespace ekl
