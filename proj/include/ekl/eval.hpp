#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ekl/event_log.hpp"
#include "ekl/kg.hpp"
#include "ekl/model.hpp"
#include "ekl/trainer.hpp"

namespace ekl {

struct SplitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SplitMode { LinkRemoval, ZeroShot };
const char* to_string(SplitMode m);  // "remove-links" / "zero-shot"
std::optional<SplitMode> parse_split_mode(std::string_view s);

// A partition of the graph's triples. Entity/relation ids refer to the
// KnowledgeGraph the split was built from (or reloaded with).
struct ScenarioSplit {
  SplitMode mode = SplitMode::LinkRemoval;
  std::string relation;    // link-removal target; empty for zero-shot
  double proportion = 0.0; // triple proportion (link-removal) or event fraction (zero-shot)
  std::uint64_t seed = 0;
  std::vector<Triple> train, valid, test;
  std::vector<EntityId> held_out_events;  // zero-shot only, ascending id
};

// Moves round(proportion * |triples of relation|) uniformly sampled triples
// of `relation` into test, then round(0.1 * |all triples|) of the remaining
// triples into valid; the rest is train. Sampling keeps original triple
// order within each part.
ScenarioSplit make_link_removal_split(const KnowledgeGraph& kg, RelationId relation,
                                      double proportion, std::uint64_t seed);

// Holds out round(event_fraction * |X|) Event entities: every triple touching
// a held-out event goes to test; valid is drawn from the remainder as above.
// Held-out events keep their sequence occurrences (the trainer sees them only
// through the sequence objective).
ScenarioSplit make_zero_shot_split(const KnowledgeGraph& kg, double event_fraction,
                                   std::uint64_t seed);

enum class CandidatePolicy { AllEntities, ClassConstrained };
const char* to_string(CandidatePolicy p);  // "all-entities" / "class-constrained"
std::optional<CandidatePolicy> parse_candidate_policy(std::string_view s);

enum class QuerySide { Head, Tail };

struct ScoredCandidate {
  EntityId entity;
  double score = 0.0;
};

// TransE distance per candidate for the query with `missing` side removed,
// ascending score, ties broken by ascending entity id. Class-constrained
// candidates share the class of the true answer.
std::vector<ScoredCandidate> score_all_candidates(const ModelParams& params,
                                                  const KnowledgeGraph& kg, const Triple& query,
                                                  QuerySide missing, CandidatePolicy policy,
                                                  Norm norm);

// Rank of `truth` after dropping candidates in `filter` (other true answers).
// `truth` itself always counts even when listed in the filter.
std::size_t filtered_rank(const std::vector<ScoredCandidate>& scored, EntityId truth,
                          const std::unordered_set<std::uint32_t>& filter);

struct SideStats {
  double mean_rank = 0.0;
  std::size_t queries = 0;
};

struct RelationStats {
  std::string relation;
  SideStats head, tail, both;
};

struct RankingReport {
  std::string model;
  std::string config_hash;
  std::uint64_t seed = 0;
  CandidatePolicy policy = CandidatePolicy::AllEntities;
  std::vector<RelationStats> relations;  // ascending relation id
  RelationStats overall;                 // relation = "ALL"

  nlohmann::json to_json() const;
  // Flat rows: relation,side,mean_rank,queries with side in {head,tail,both}.
  void write_csv(std::ostream& out) const;
};

// Filtered mean rank over both query sides of every test triple. The filter
// contains every entity forming a true triple in the graph's full triple set
// (train, valid and test), minus the query target.
RankingReport evaluate(const ModelParams& params, const KnowledgeGraph& kg,
                       const ScenarioSplit& split, CandidatePolicy policy, Norm norm);

// Overall filtered mean rank over `queries` (both sides); the early-stopping
// validation metric.
double mean_rank_over(const ModelParams& params, const KnowledgeGraph& kg,
                      std::span<const Triple> queries, CandidatePolicy policy, Norm norm);

// Candidate hyper-parameter values; enumeration is the cross product in
// declared field order with the last field varying fastest.
struct GridSpec {
  std::vector<int> d{20, 50, 100};
  std::vector<double> alpha{0.1, 0.5, 1.0};
  std::vector<double> lr{0.01, 0.1};
  std::vector<double> margin{1.0, 2.0};
  std::vector<Norm> norm{Norm::L1};
  std::vector<int> window{5};
  std::vector<int> concat_width{3};
  std::vector<int> rnn_hidden{0};
  int eval_interval = 5;
  int patience = 3;

  std::vector<TrainConfig> enumerate(const TrainConfig& base) const;
  nlohmann::json to_json() const;
  static GridSpec from_json(const nlohmann::json& j);
};

struct TrialOutcome {
  TrainConfig cfg;
  double valid_mean_rank = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  bool failed = false;
  std::string error;
};

struct GridResult {
  std::size_t best_index = 0;
  TrainConfig best_cfg;
  ModelParams best_params;
  double best_valid_mean_rank = 0.0;
  std::vector<TrialOutcome> trials;
};

// Trains one model per configuration with early stopping and picks the lowest
// validation filtered mean rank; ties go to the earliest configuration.
GridResult grid_search(const KnowledgeGraph& kg, const ScenarioSplit& split,
                       const SequenceDataset& sequences, ModelKind kind, const GridSpec& grid,
                       const TrainConfig& base, CandidatePolicy policy);

// Split directory: train.tsv / valid.tsv / test.tsv, classes.tsv for the full
// vocabulary, and split.json with mode, relation, proportion, seed and counts.
void write_split(const std::filesystem::path& dir, const KnowledgeGraph& kg,
                 const ScenarioSplit& split);

struct LoadedSplit {
  KnowledgeGraph kg;  // vocabulary spans all three files; triples = their union
  ScenarioSplit split;
};

LoadedSplit read_split(const std::filesystem::path& dir);

}  // namespace ekl
