#include "ekl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ekl/rng.hpp"

namespace ekl {

const char* to_string(SplitMode m) {
  return m == SplitMode::LinkRemoval ? "remove-links" : "zero-shot";
}

std::optional<SplitMode> parse_split_mode(std::string_view s) {
  if (s == "remove-links") return SplitMode::LinkRemoval;
  if (s == "zero-shot") return SplitMode::ZeroShot;
  return std::nullopt;
}

const char* to_string(CandidatePolicy p) {
  return p == CandidatePolicy::AllEntities ? "all-entities" : "class-constrained";
}

std::optional<CandidatePolicy> parse_candidate_policy(std::string_view s) {
  if (s == "all-entities") return CandidatePolicy::AllEntities;
  if (s == "class-constrained") return CandidatePolicy::ClassConstrained;
  return std::nullopt;
}

namespace {

// Marks k distinct positions of [0, n) via partial Fisher-Yates; the mask
// form lets callers keep the original element order.
std::vector<char> sample_mask(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<char> mask(n, 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
    mask[idx[i]] = 1;
  }
  return mask;
}

std::size_t rounded_count(double fraction, std::size_t total) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
}

// Splits `pool` into (selected, rest) keeping order, then draws the 10%
// validation sample from `rest`.
void draw_valid_and_train(Rng& rng, const std::vector<Triple>& rest, std::size_t n_valid,
                          ScenarioSplit& split) {
  n_valid = std::min(n_valid, rest.size());
  std::vector<char> mask = sample_mask(rng, rest.size(), n_valid);
  for (std::size_t i = 0; i < rest.size(); ++i)
    (mask[i] ? split.valid : split.train).push_back(rest[i]);
}

}  // namespace

ScenarioSplit make_link_removal_split(const KnowledgeGraph& kg, RelationId relation,
                                      double proportion, std::uint64_t seed) {
  if (!(proportion > 0.0 && proportion < 1.0))
    throw SplitError("proportion must be in (0, 1)");
  if (relation.value >= kg.num_relations()) throw SplitError("relation does not exist");
  const std::vector<Triple> rel_triples = kg.triples_of_relation(relation);
  if (rel_triples.empty())
    throw SplitError("relation '" + kg.relation_name(relation) + "' has no triples");

  ScenarioSplit split;
  split.mode = SplitMode::LinkRemoval;
  split.relation = kg.relation_name(relation);
  split.proportion = proportion;
  split.seed = seed;

  Rng rng(seed);
  const std::size_t n_test = rounded_count(proportion, rel_triples.size());
  std::vector<char> test_mask = sample_mask(rng, rel_triples.size(), n_test);
  TripleSet in_test;
  for (std::size_t i = 0; i < rel_triples.size(); ++i)
    if (test_mask[i]) {
      split.test.push_back(rel_triples[i]);
      in_test.insert(rel_triples[i]);
    }

  std::vector<Triple> rest;
  rest.reserve(kg.triples().size() - split.test.size());
  for (const Triple& t : kg.triples())
    if (!in_test.count(t)) rest.push_back(t);
  draw_valid_and_train(rng, rest, rounded_count(0.1, kg.triples().size()), split);
  return split;
}

ScenarioSplit make_zero_shot_split(const KnowledgeGraph& kg, double event_fraction,
                                   std::uint64_t seed) {
  if (!(event_fraction > 0.0 && event_fraction < 1.0))
    throw SplitError("event fraction must be in (0, 1)");
  const std::vector<EntityId> events = kg.entities_of_class(EntityClass::Event);
  if (events.empty()) throw SplitError("knowledge graph has no Event-class entities");

  ScenarioSplit split;
  split.mode = SplitMode::ZeroShot;
  split.proportion = event_fraction;
  split.seed = seed;

  Rng rng(seed);
  const std::size_t n_hold = rounded_count(event_fraction, events.size());
  std::vector<char> hold_mask = sample_mask(rng, events.size(), n_hold);
  std::unordered_set<std::uint32_t> held;
  for (std::size_t i = 0; i < events.size(); ++i)
    if (hold_mask[i]) {
      split.held_out_events.push_back(events[i]);  // events[] is ascending already
      held.insert(events[i].value);
    }

  std::vector<Triple> rest;
  for (const Triple& t : kg.triples()) {
    if (held.count(t.head.value) || held.count(t.tail.value)) split.test.push_back(t);
    else rest.push_back(t);
  }
  draw_valid_and_train(rng, rest, rounded_count(0.1, kg.triples().size()), split);
  return split;
}

namespace {

double norm_value(const Vec& u, Norm norm) {
  return norm == Norm::L1 ? u.lpNorm<1>() : u.norm();
}

}  // namespace

std::vector<ScoredCandidate> score_all_candidates(const ModelParams& params,
                                                  const KnowledgeGraph& kg, const Triple& query,
                                                  QuerySide missing, CandidatePolicy policy,
                                                  Norm norm) {
  // Both sides reduce to || E_c - q ||: q = E_h + R_r for tail queries,
  // q = E_t - R_r for head queries.
  Vec q;
  if (missing == QuerySide::Tail)
    q = params.entity_emb.row(query.head.value).transpose() +
        params.relation_emb.row(query.relation.value).transpose();
  else
    q = params.entity_emb.row(query.tail.value).transpose() -
        params.relation_emb.row(query.relation.value).transpose();

  std::vector<EntityId> candidates;
  if (policy == CandidatePolicy::AllEntities) {
    candidates.reserve(kg.num_entities());
    for (std::uint32_t i = 0; i < kg.num_entities(); ++i) candidates.push_back(EntityId{i});
  } else {
    const EntityId truth = missing == QuerySide::Tail ? query.tail : query.head;
    candidates = kg.entities_of_class(kg.entity_class(truth));
  }

  std::vector<ScoredCandidate> scored;
  scored.reserve(candidates.size());
  for (EntityId c : candidates) {
    Vec diff = params.entity_emb.row(c.value).transpose() - q;
    scored.push_back({c, norm_value(diff, norm)});
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    return a.score != b.score ? a.score < b.score : a.entity.value < b.entity.value;
  });
  return scored;
}

std::size_t filtered_rank(const std::vector<ScoredCandidate>& scored, EntityId truth,
                          const std::unordered_set<std::uint32_t>& filter) {
  std::size_t rank = 1;
  for (const ScoredCandidate& sc : scored) {
    if (sc.entity == truth) return rank;
    if (filter.count(sc.entity.value)) continue;
    ++rank;
  }
  throw EvalError("true entity is not among the candidates (check the candidate policy)");
}

namespace {

inline std::uint64_t key64(std::uint32_t a, std::uint32_t b) {
  return (std::uint64_t(a) << 32) | b;
}

struct FilterIndex {
  std::unordered_map<std::uint64_t, std::unordered_set<std::uint32_t>> tails;  // (h,r) -> t
  std::unordered_map<std::uint64_t, std::unordered_set<std::uint32_t>> heads;  // (r,t) -> h

  explicit FilterIndex(const std::vector<Triple>& triples) {
    for (const Triple& t : triples) {
      tails[key64(t.head.value, t.relation.value)].insert(t.tail.value);
      heads[key64(t.relation.value, t.tail.value)].insert(t.head.value);
    }
  }

  static const std::unordered_set<std::uint32_t>& empty_set() {
    static const std::unordered_set<std::uint32_t> kEmpty;
    return kEmpty;
  }

  const std::unordered_set<std::uint32_t>& tail_filter(const Triple& q) const {
    auto it = tails.find(key64(q.head.value, q.relation.value));
    return it == tails.end() ? empty_set() : it->second;
  }

  const std::unordered_set<std::uint32_t>& head_filter(const Triple& q) const {
    auto it = heads.find(key64(q.relation.value, q.tail.value));
    return it == heads.end() ? empty_set() : it->second;
  }
};

struct RankPair {
  std::size_t head = 0;
  std::size_t tail = 0;
};

std::vector<RankPair> ranks_for(const ModelParams& params, const KnowledgeGraph& kg,
                                const FilterIndex& filter, std::span<const Triple> queries,
                                CandidatePolicy policy, Norm norm) {
  std::vector<RankPair> ranks;
  ranks.reserve(queries.size());
  for (const Triple& q : queries) {
    RankPair rp;
    rp.tail = filtered_rank(score_all_candidates(params, kg, q, QuerySide::Tail, policy, norm),
                            q.tail, filter.tail_filter(q));
    rp.head = filtered_rank(score_all_candidates(params, kg, q, QuerySide::Head, policy, norm),
                            q.head, filter.head_filter(q));
    ranks.push_back(rp);
  }
  return ranks;
}

SideStats make_stats(std::uint64_t rank_sum, std::size_t queries) {
  SideStats s;
  s.queries = queries;
  if (queries > 0) s.mean_rank = static_cast<double>(rank_sum) / static_cast<double>(queries);
  return s;
}

nlohmann::json stats_json(const SideStats& s) {
  return {{"mean_rank", s.mean_rank}, {"queries", s.queries}};
}

}  // namespace

RankingReport evaluate(const ModelParams& params, const KnowledgeGraph& kg,
                       const ScenarioSplit& split, CandidatePolicy policy, Norm norm) {
  if (split.test.empty()) throw EvalError("test split is empty");
  const FilterIndex filter(kg.triples());
  const std::vector<RankPair> ranks = ranks_for(params, kg, filter, split.test, policy, norm);

  struct Tally {
    std::uint64_t head_sum = 0, tail_sum = 0;
    std::size_t n = 0;
  };
  std::vector<Tally> per_relation(kg.num_relations());
  Tally all;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    Tally& t = per_relation[split.test[i].relation.value];
    t.head_sum += ranks[i].head;
    t.tail_sum += ranks[i].tail;
    ++t.n;
    all.head_sum += ranks[i].head;
    all.tail_sum += ranks[i].tail;
    ++all.n;
  }

  RankingReport report;
  report.policy = policy;
  auto fill = [](RelationStats& rs, const Tally& t) {
    rs.head = make_stats(t.head_sum, t.n);
    rs.tail = make_stats(t.tail_sum, t.n);
    rs.both = make_stats(t.head_sum + t.tail_sum, 2 * t.n);
  };
  for (std::uint32_t r = 0; r < kg.num_relations(); ++r) {
    if (per_relation[r].n == 0) continue;
    RelationStats rs;
    rs.relation = kg.relation_name(RelationId{r});
    fill(rs, per_relation[r]);
    report.relations.push_back(std::move(rs));
  }
  report.overall.relation = "ALL";
  fill(report.overall, all);
  return report;
}

double mean_rank_over(const ModelParams& params, const KnowledgeGraph& kg,
                      std::span<const Triple> queries, CandidatePolicy policy, Norm norm) {
  if (queries.empty()) throw EvalError("mean rank over an empty query set");
  const FilterIndex filter(kg.triples());
  const std::vector<RankPair> ranks = ranks_for(params, kg, filter, queries, policy, norm);
  std::uint64_t sum = 0;
  for (const RankPair& rp : ranks) sum += rp.head + rp.tail;
  return static_cast<double>(sum) / static_cast<double>(2 * ranks.size());
}

nlohmann::json RankingReport::to_json() const {
  nlohmann::json rels = nlohmann::json::array();
  for (const RelationStats& rs : relations) {
    rels.push_back({{"relation", rs.relation},
                    {"head", stats_json(rs.head)},
                    {"tail", stats_json(rs.tail)},
                    {"both", stats_json(rs.both)}});
  }
  return nlohmann::json{{"model", model},
                        {"config_hash", config_hash},
                        {"seed", seed},
                        {"policy", to_string(policy)},
                        {"overall",
                         {{"head", stats_json(overall.head)},
                          {"tail", stats_json(overall.tail)},
                          {"both", stats_json(overall.both)}}},
                        {"relations", rels}};
}

void RankingReport::write_csv(std::ostream& out) const {
  out << "relation,side,mean_rank,queries\n";
  auto row = [&out](const std::string& rel, const char* side, const SideStats& s) {
    out << rel << ',' << side << ',' << nlohmann::json(s.mean_rank).dump() << ',' << s.queries
        << '\n';
  };
  auto rows = [&](const RelationStats& rs) {
    row(rs.relation, "head", rs.head);
    row(rs.relation, "tail", rs.tail);
    row(rs.relation, "both", rs.both);
  };
  for (const RelationStats& rs : relations) rows(rs);
  rows(overall);
}

std::vector<TrainConfig> GridSpec::enumerate(const TrainConfig& base) const {
  std::vector<TrainConfig> out;
  for (int vd : d)
    for (double va : alpha)
      for (double vlr : lr)
        for (double vm : margin)
          for (Norm vn : norm)
            for (int vw : window)
              for (int vcw : concat_width)
                for (int vrh : rnn_hidden) {
                  TrainConfig c = base;
                  c.d = vd;
                  c.alpha = va;
                  c.lr = vlr;
                  c.margin = vm;
                  c.norm = vn;
                  c.window = vw;
                  c.concat_width = vcw;
                  c.rnn_hidden = vrh;
                  c.eval_interval = eval_interval;
                  c.patience = patience;
                  out.push_back(c);
                }
  return out;
}

nlohmann::json GridSpec::to_json() const {
  nlohmann::json norms = nlohmann::json::array();
  for (Norm n : norm) norms.push_back(to_string(n));
  return nlohmann::json{{"d", d},
                        {"alpha", alpha},
                        {"lr", lr},
                        {"margin", margin},
                        {"norm", norms},
                        {"window", window},
                        {"concat_width", concat_width},
                        {"rnn_hidden", rnn_hidden},
                        {"eval_interval", eval_interval},
                        {"patience", patience}};
}

GridSpec GridSpec::from_json(const nlohmann::json& j) {
  GridSpec g;
  if (j.contains("d")) g.d = j.at("d").get<std::vector<int>>();
  if (j.contains("alpha")) g.alpha = j.at("alpha").get<std::vector<double>>();
  if (j.contains("lr")) g.lr = j.at("lr").get<std::vector<double>>();
  if (j.contains("margin")) g.margin = j.at("margin").get<std::vector<double>>();
  if (j.contains("norm")) {
    g.norm.clear();
    for (const auto& s : j.at("norm")) {
      auto n = parse_norm(s.get<std::string>());
      if (!n) throw EvalError("unknown norm '" + s.get<std::string>() + "' in grid");
      g.norm.push_back(*n);
    }
  }
  if (j.contains("window")) g.window = j.at("window").get<std::vector<int>>();
  if (j.contains("concat_width")) g.concat_width = j.at("concat_width").get<std::vector<int>>();
  if (j.contains("rnn_hidden")) g.rnn_hidden = j.at("rnn_hidden").get<std::vector<int>>();
  g.eval_interval = j.value("eval_interval", g.eval_interval);
  g.patience = j.value("patience", g.patience);
  auto require = [](bool ok, const char* field) {
    if (!ok) throw EvalError(std::string("grid list '") + field + "' must be non-empty");
  };
  require(!g.d.empty(), "d");
  require(!g.alpha.empty(), "alpha");
  require(!g.lr.empty(), "lr");
  require(!g.margin.empty(), "margin");
  require(!g.norm.empty(), "norm");
  require(!g.window.empty(), "window");
  require(!g.concat_width.empty(), "concat_width");
  require(!g.rnn_hidden.empty(), "rnn_hidden");
  return g;
}

GridResult grid_search(const KnowledgeGraph& kg, const ScenarioSplit& split,
                       const SequenceDataset& sequences, ModelKind kind, const GridSpec& grid,
                       const TrainConfig& base, CandidatePolicy policy) {
  if (split.valid.empty()) throw SplitError("grid search requires a non-empty validation split");
  const std::vector<TrainConfig> configs = grid.enumerate(base);
  GridResult res;
  res.trials.reserve(configs.size());
  bool have_best = false;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const TrainConfig& cfg = configs[i];
    TrialOutcome out;
    out.cfg = cfg;
    try {
      auto hook = [&](const ModelParams& mp) {
        return mean_rank_over(mp, kg, split.valid, policy, cfg.norm);
      };
      TrainResult tr = train(kg, split.train, sequences, kind, cfg, hook);
      out.valid_mean_rank = tr.best_metric;
      out.best_epoch = tr.best_epoch;
      out.epochs_run = tr.epochs_run;
      if (!have_best || tr.best_metric < res.best_valid_mean_rank) {
        have_best = true;
        res.best_index = i;
        res.best_cfg = cfg;
        res.best_valid_mean_rank = tr.best_metric;
        res.best_params = std::move(tr.params);
      }
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
    res.trials.push_back(std::move(out));
  }
  if (!have_best) {
    std::string msg = "all grid trials failed:";
    for (std::size_t i = 0; i < res.trials.size(); ++i)
      if (res.trials[i].failed) msg += "\n  trial " + std::to_string(i) + ": " + res.trials[i].error;
    throw EvalError(msg);
  }
  return res;
}

namespace {

void write_triple_file(const std::filesystem::path& path, const KnowledgeGraph& kg,
                       const std::vector<Triple>& triples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SplitError("cannot write " + path.string());
  for (const Triple& t : triples)
    out << kg.entity_name(t.head) << '\t' << kg.relation_name(t.relation) << '\t'
        << kg.entity_name(t.tail) << '\n';
}

}  // namespace

void write_split(const std::filesystem::path& dir, const KnowledgeGraph& kg,
                 const ScenarioSplit& split) {
  std::filesystem::create_directories(dir);
  write_triple_file(dir / "train.tsv", kg, split.train);
  write_triple_file(dir / "valid.tsv", kg, split.valid);
  write_triple_file(dir / "test.tsv", kg, split.test);
  {
    std::ofstream cls(dir / "classes.tsv", std::ios::binary);
    if (!cls) throw SplitError("cannot write " + (dir / "classes.tsv").string());
    kg.write_classes(cls);
  }
  nlohmann::json meta;
  meta["mode"] = to_string(split.mode);
  meta["relation"] = split.relation;
  meta["proportion"] = split.proportion;
  meta["seed"] = split.seed;
  meta["counts"] = {{"train", split.train.size()},
                    {"valid", split.valid.size()},
                    {"test", split.test.size()}};
  if (split.mode == SplitMode::ZeroShot) {
    nlohmann::json held = nlohmann::json::array();
    for (EntityId e : split.held_out_events) held.push_back(kg.entity_name(e));
    meta["held_out_events"] = std::move(held);
  }
  std::ofstream js(dir / "split.json", std::ios::binary);
  if (!js) throw SplitError("cannot write " + (dir / "split.json").string());
  js << meta.dump(2) << "\n";
}

LoadedSplit read_split(const std::filesystem::path& dir) {
  std::ifstream js(dir / "split.json", std::ios::binary);
  if (!js) throw SplitError("cannot read " + (dir / "split.json").string());
  nlohmann::json meta;
  try {
    js >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw SplitError("malformed split.json: " + std::string(e.what()));
  }

  std::ifstream cf(dir / "classes.tsv", std::ios::binary);
  if (!cf) throw SplitError("cannot read " + (dir / "classes.tsv").string());
  const ClassMap classes = read_class_file(cf);

  LoadedSplit loaded;
  auto ingest_file = [&](const char* name) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw SplitError("cannot read " + (dir / name).string());
    return ingest_into(loaded.kg, in, &classes);
  };
  loaded.split.train = ingest_file("train.tsv");
  loaded.split.valid = ingest_file("valid.tsv");
  loaded.split.test = ingest_file("test.tsv");

  auto mode = parse_split_mode(meta.at("mode").get<std::string>());
  if (!mode) throw SplitError("unknown split mode in split.json");
  loaded.split.mode = *mode;
  loaded.split.relation = meta.value("relation", std::string());
  loaded.split.proportion = meta.value("proportion", 0.0);
  loaded.split.seed = meta.value("seed", std::uint64_t{0});
  if (meta.contains("held_out_events")) {
    for (const auto& name : meta.at("held_out_events")) {
      auto e = loaded.kg.find_entity(name.get<std::string>());
      if (!e) throw SplitError("held-out event '" + name.get<std::string>() +
                               "' missing from the split triples");
      loaded.split.held_out_events.push_back(*e);
    }
  }
  return loaded;
}

}  // namespace ekl
