#include "ekl/event_log.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <string>

namespace ekl {

SequenceDataset sessionize(std::vector<EventOccurrence> occurrences, std::int64_t gap_ms) {
  std::stable_sort(occurrences.begin(), occurrences.end(),
                   [](const EventOccurrence& a, const EventOccurrence& b) {
                     return a.timestamp_ms < b.timestamp_ms;
                   });
  SequenceDataset ds;
  for (std::size_t i = 0; i < occurrences.size(); ++i) {
    bool new_sequence =
        i == 0 || occurrences[i].timestamp_ms - occurrences[i - 1].timestamp_ms > gap_ms;
    if (new_sequence) ds.sequences.emplace_back();
    ds.sequences.back().events.push_back(occurrences[i].event);
  }
  return ds;
}

std::vector<SkipgramPair> skipgram_pairs(const SequenceDataset& ds, int window) {
  std::vector<SkipgramPair> pairs;
  for (const Sequence& s : ds.sequences) {
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(s.events.size());
    for (std::ptrdiff_t k = 0; k < m; ++k) {
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, k - window);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(m - 1, k + window);
      for (std::ptrdiff_t j = lo; j <= hi; ++j) {
        if (j == k) continue;
        pairs.push_back(SkipgramPair{s.events[k], s.events[j]});
      }
    }
  }
  return pairs;
}

std::vector<PrefixInstance> prefix_instances(const SequenceDataset& ds,
                                             std::optional<int> width) {
  std::vector<PrefixInstance> out;
  for (const Sequence& s : ds.sequences) {
    const std::size_t m = s.events.size();
    for (std::size_t k = 1; k < m; ++k) {
      std::size_t take = width ? std::min<std::size_t>(static_cast<std::size_t>(*width), k) : k;
      PrefixInstance inst;
      inst.prefix.assign(s.events.begin() + (k - take), s.events.begin() + k);
      inst.target = s.events[k];
      out.push_back(std::move(inst));
    }
  }
  return out;
}

SequenceDataset chunk_sequences(const SequenceDataset& ds, std::size_t max_len) {
  SequenceDataset out;
  for (const Sequence& s : ds.sequences) {
    for (std::size_t start = 0; start < s.events.size(); start += max_len) {
      std::size_t end = std::min(start + max_len, s.events.size());
      Sequence chunk;
      chunk.events.assign(s.events.begin() + start, s.events.begin() + end);
      out.sequences.push_back(std::move(chunk));
    }
  }
  return out;
}

namespace {

void require_event_class(const KnowledgeGraph& kg, EntityId e, std::size_t line_no) {
  if (kg.entity_class(e) != EntityClass::Event)
    throw ParseError("line " + std::to_string(line_no) + ": entity '" + kg.entity_name(e) +
                     "' is not Event class");
}

}  // namespace

std::vector<EventOccurrence> read_occurrences_csv(std::istream& in, const KnowledgeGraph& kg) {
  std::vector<EventOccurrence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "timestamp_ms,event")
        throw ParseError("line 1: expected header 'timestamp_ms,event'");
      continue;
    }
    std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError("line " + std::to_string(line_no) + ": expected 2 comma-separated fields");
    std::int64_t ts = 0;
    auto res = std::from_chars(line.data(), line.data() + comma, ts);
    if (res.ec != std::errc() || res.ptr != line.data() + comma)
      throw ParseError("line " + std::to_string(line_no) + ": bad timestamp '" +
                       line.substr(0, comma) + "'");
    std::string name = line.substr(comma + 1);
    auto e = kg.find_entity(name);
    if (!e)
      throw ParseError("line " + std::to_string(line_no) + ": unknown event entity '" + name + "'");
    require_event_class(kg, *e, line_no);
    out.push_back(EventOccurrence{ts, *e});
  }
  return out;
}

void write_occurrences_csv(std::ostream& out, const std::vector<EventOccurrence>& occ,
                           const KnowledgeGraph& kg) {
  out << "timestamp_ms,event\n";
  for (const EventOccurrence& o : occ)
    out << o.timestamp_ms << ',' << kg.entity_name(o.event) << '\n';
}

SequenceDataset read_sequence_file(std::istream& in, const KnowledgeGraph& kg) {
  SequenceDataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    Sequence seq;
    std::size_t pos = 0;
    while (pos < line.size()) {
      std::size_t sp = line.find(' ', pos);
      if (sp == std::string::npos) sp = line.size();
      if (sp > pos) {
        std::string name = line.substr(pos, sp - pos);
        auto e = kg.find_entity(name);
        if (!e)
          throw ParseError("line " + std::to_string(line_no) + ": unknown event entity '" + name +
                           "'");
        require_event_class(kg, *e, line_no);
        seq.events.push_back(*e);
      }
      pos = sp + 1;
    }
    if (!seq.events.empty()) ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

}  // namespace ekl
