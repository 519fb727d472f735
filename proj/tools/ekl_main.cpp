// Command-line front end: generate | scenario | train | eval | sweep.
// Exit codes: 0 success, 2 usage/validation, 3 numerical failure.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ekl/checkpoint.hpp"
#include "ekl/eval.hpp"
#include "ekl/event_log.hpp"
#include "ekl/factory.hpp"
#include "ekl/kg.hpp"
#include "ekl/manifest.hpp"
#include "ekl/model.hpp"
#include "ekl/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct GlobalFlags {
  std::uint64_t seed = 42;
  std::string out = "out";
  bool quiet = false;
  std::vector<std::string> command;  // argv echo for manifests
};

class Stopwatch {
 public:
  long long elapsed_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void note(const GlobalFlags& g, const std::string& msg) {
  if (!g.quiet) std::cerr << "[ekl] " << msg << "\n";
}

int fail_usage(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return kExitUsage;
}

std::string fmt(double v) { return json(v).dump(); }

json load_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  return j;
}

json model_config_json(ekl::ModelKind kind, const ekl::TrainConfig& cfg) {
  return json{{"model", ekl::to_string(kind)}, {"train", cfg.to_json()}};
}

std::vector<std::pair<std::string, std::string>> digest_split_dir(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> digests;
  for (const char* name : {"train.tsv", "valid.tsv", "test.tsv", "classes.tsv", "split.json"})
    digests.emplace_back(name, ekl::file_digest(dir / name));
  return digests;
}

ekl::SequenceDataset load_sequences(const fs::path& path, const ekl::KnowledgeGraph& kg,
                                    std::int64_t gap_ms) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return ekl::sessionize(ekl::read_occurrences_csv(in, kg), gap_ms);
}

// ---------------------------------------------------------------- generate

int cmd_generate(const GlobalFlags& g, const std::string& config_path, bool seed_given) {
  Stopwatch watch;
  ekl::FactoryConfig cfg;
  std::vector<std::pair<std::string, std::string>> inputs;
  try {
    if (!config_path.empty()) {
      cfg = ekl::FactoryConfig::from_json(load_json_file(config_path));
      inputs.emplace_back(config_path, ekl::file_digest(config_path));
      if (seed_given) cfg.seed = g.seed;
    } else {
      cfg.seed = g.seed;
    }
    cfg.validate();
  } catch (const std::exception& e) {
    return fail_usage(e.what());
  }

  const ekl::GeneratedWorld world = ekl::generate(cfg);
  fs::create_directories(g.out);
  ekl::write_world(world, g.out);
  {
    std::ofstream out(fs::path(g.out) / "config.json", std::ios::binary);
    out << cfg.to_json().dump(2) << "\n";
  }
  ekl::write_manifest(g.out, g.command, cfg.seed, cfg.to_json(), inputs);
  note(g, "generate: " + std::to_string(world.kg.num_entities()) + " entities, " +
              std::to_string(world.kg.triples().size()) + " triples, " +
              std::to_string(world.log.size()) + " occurrences -> " + g.out + " (" +
              std::to_string(watch.elapsed_ms()) + " ms)");
  return 0;
}

// ---------------------------------------------------------------- scenario

int cmd_scenario(const GlobalFlags& g, const std::string& kg_path, const std::string& classes_path,
                 const std::string& mode_str, const std::string& relation_name,
                 double proportion) {
  Stopwatch watch;
  ekl::ScenarioSplit split;
  ekl::KnowledgeGraph kg;
  try {
    auto mode = ekl::parse_split_mode(mode_str);
    if (!mode) return fail_usage("unknown mode '" + mode_str + "' (remove-links | zero-shot)");
    kg = ekl::load_kg_files(kg_path, classes_path);
    if (*mode == ekl::SplitMode::LinkRemoval) {
      if (relation_name.empty()) return fail_usage("--relation is required for remove-links");
      auto rel = kg.find_relation(relation_name);
      if (!rel) return fail_usage("unknown relation '" + relation_name + "'");
      split = ekl::make_link_removal_split(kg, *rel, proportion, g.seed);
    } else {
      if (!relation_name.empty())
        return fail_usage("--relation only applies to remove-links splits");
      split = ekl::make_zero_shot_split(kg, proportion, g.seed);
    }
  } catch (const std::exception& e) {
    return fail_usage(e.what());
  }

  ekl::write_split(g.out, kg, split);
  std::vector<std::pair<std::string, std::string>> inputs{
      {kg_path, ekl::file_digest(kg_path)}};
  if (!classes_path.empty()) inputs.emplace_back(classes_path, ekl::file_digest(classes_path));
  json config{{"mode", mode_str}, {"relation", relation_name}, {"proportion", proportion}};
  ekl::write_manifest(g.out, g.command, g.seed, config, inputs);
  note(g, "scenario: train=" + std::to_string(split.train.size()) +
              " valid=" + std::to_string(split.valid.size()) +
              " test=" + std::to_string(split.test.size()) + " -> " + g.out + " (" +
              std::to_string(watch.elapsed_ms()) + " ms)");
  return 0;
}

// ------------------------------------------------------------------- train

struct TrainFlags {
  std::string model;
  std::string split_dir;
  std::string sequences;
  std::string policy = "all-entities";
  std::int64_t gap_ms = 5000;
  ekl::TrainConfig cfg;
  std::string norm = "L1";
  bool alpha_given = false;
};

void write_history_csv(const fs::path& path, const std::vector<ekl::EpochStats>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,kg_loss,seq_loss,joint,valid_mean_rank\n";
  for (const ekl::EpochStats& s : history) {
    out << s.epoch << ',';
    if (s.epoch > 0)
      out << fmt(s.kg_loss) << ',' << fmt(s.seq_loss) << ',' << fmt(s.joint) << ',';
    else
      out << ",,,";
    if (s.valid_metric) out << fmt(*s.valid_metric);
    out << '\n';
  }
}

int cmd_train(const GlobalFlags& g, TrainFlags& f) {
  Stopwatch watch;
  ekl::ModelKind kind;
  ekl::LoadedSplit loaded;
  ekl::SequenceDataset sequences;
  ekl::CandidatePolicy policy;
  try {
    auto parsed_kind = ekl::parse_model_kind(f.model);
    if (!parsed_kind)
      return fail_usage("unknown model '" + f.model +
                        "' (transe | ekl-skip | ekl-concat | ekl-rnn)");
    kind = *parsed_kind;
    auto parsed_policy = ekl::parse_candidate_policy(f.policy);
    if (!parsed_policy)
      return fail_usage("unknown policy '" + f.policy + "' (all-entities | class-constrained)");
    policy = *parsed_policy;

    if (kind == ekl::ModelKind::TransE) {
      if (!f.sequences.empty())
        return fail_usage("flag conflict: --sequences has no effect on transe");
      if (f.alpha_given)
        return fail_usage("flag conflict: --alpha has no effect without sequences");
    } else if (f.sequences.empty()) {
      return fail_usage("--sequences is required for " + f.model);
    }

    auto norm = ekl::parse_norm(f.norm);
    if (!norm) return fail_usage("unknown norm '" + f.norm + "' (L1 | L2)");
    f.cfg.norm = *norm;
    f.cfg.seed = g.seed;
    f.cfg.validate();

    loaded = ekl::read_split(f.split_dir);
    if (!f.sequences.empty()) sequences = load_sequences(f.sequences, loaded.kg, f.gap_ms);
  } catch (const std::exception& e) {
    return fail_usage(e.what());
  }

  ekl::TrainResult result;
  try {
    ekl::ValidationHook hook;
    if (!loaded.split.valid.empty()) {
      hook = [&](const ekl::ModelParams& p) {
        return ekl::mean_rank_over(p, loaded.kg, loaded.split.valid, policy, f.cfg.norm);
      };
    }
    result = ekl::train(loaded.kg, loaded.split.train, sequences, kind, f.cfg, hook);
  } catch (const ekl::TrainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }

  fs::create_directories(g.out);
  ekl::save_checkpoint(g.out, result.params, f.cfg, result.history);
  write_history_csv(fs::path(g.out) / "history.csv", result.history);
  auto inputs = digest_split_dir(f.split_dir);
  if (!f.sequences.empty()) inputs.emplace_back(f.sequences, ekl::file_digest(f.sequences));
  ekl::write_manifest(g.out, g.command, f.cfg.seed, model_config_json(kind, f.cfg), inputs);
  std::string summary = "train: " + f.model + ", " + std::to_string(result.epochs_run) +
                        " epochs";
  if (result.stopped_early) summary += " (early stop)";
  summary += ", best epoch " + std::to_string(result.best_epoch);
  if (!loaded.split.valid.empty())
    summary += ", valid mean rank " + fmt(result.best_metric);
  note(g, summary + " -> " + g.out + " (" + std::to_string(watch.elapsed_ms()) + " ms)");
  return 0;
}

// -------------------------------------------------------------------- eval

int cmd_eval(const GlobalFlags& g, const std::string& checkpoint_dir,
             const std::string& split_dir, const std::string& policy_str) {
  Stopwatch watch;
  ekl::RankingReport report;
  try {
    auto policy = ekl::parse_candidate_policy(policy_str);
    if (!policy)
      return fail_usage("unknown policy '" + policy_str +
                        "' (all-entities | class-constrained)");
    ekl::Checkpoint ck = ekl::load_checkpoint(checkpoint_dir);
    ekl::LoadedSplit loaded = ekl::read_split(split_dir);
    if (ck.num_entities != loaded.kg.num_entities() ||
        ck.num_relations != loaded.kg.num_relations())
      return fail_usage("vocabulary mismatch: checkpoint has " +
                        std::to_string(ck.num_entities) + " entities / " +
                        std::to_string(ck.num_relations) + " relations, split has " +
                        std::to_string(loaded.kg.num_entities()) + " / " +
                        std::to_string(loaded.kg.num_relations()));
    if (ck.params.event_ids != loaded.kg.entities_of_class(ekl::EntityClass::Event))
      return fail_usage("vocabulary mismatch: the checkpoint's Event entities differ from the "
                        "split's (check classes.tsv)");
    report = ekl::evaluate(ck.params, loaded.kg, loaded.split, *policy, ck.cfg.norm);
    report.model = ekl::to_string(ck.params.kind);
    report.config_hash = ekl::config_hash(model_config_json(ck.params.kind, ck.cfg));
    report.seed = ck.cfg.seed;
  } catch (const std::exception& e) {
    return fail_usage(e.what());
  }

  fs::create_directories(g.out);
  {
    std::ofstream js(fs::path(g.out) / "report.json", std::ios::binary);
    js << report.to_json().dump(2) << "\n";
    std::ofstream csv(fs::path(g.out) / "report.csv", std::ios::binary);
    report.write_csv(csv);
  }
  auto inputs = digest_split_dir(split_dir);
  for (const char* name : {"checkpoint.json", "checkpoint.bin"})
    inputs.emplace_back(name, ekl::file_digest(fs::path(checkpoint_dir) / name));
  ekl::write_manifest(g.out, g.command, report.seed,
                      json{{"policy", policy_str}, {"config_hash", report.config_hash}}, inputs);
  note(g, "eval: mean rank " + fmt(report.overall.both.mean_rank) + " over " +
              std::to_string(report.overall.both.queries) + " queries -> " + g.out + " (" +
              std::to_string(watch.elapsed_ms()) + " ms)");
  return 0;
}

// ------------------------------------------------------------------- sweep

struct SweepRow {
  std::string model;
  std::string relation;
  double proportion = 0.0;
  std::uint64_t seed = 0;
  double valid_mean_rank = 0.0;
  double test_mean_rank = 0.0;
  bool ok = false;
  std::string error;
};

int cmd_sweep(const GlobalFlags& g, const std::string& spec_path,
              std::vector<std::string> split_dirs) {
  Stopwatch watch;
  std::vector<ekl::ModelKind> models;
  std::vector<std::uint64_t> seeds{42};
  ekl::CandidatePolicy policy = ekl::CandidatePolicy::AllEntities;
  ekl::TrainConfig base;
  ekl::GridSpec grid;
  std::string sequences_path;
  std::int64_t gap_ms = 5000;
  json spec;
  try {
    spec = load_json_file(spec_path);
    if (!spec.contains("models") || spec["models"].empty())
      return fail_usage("sweep spec needs a non-empty \"models\" list");
    for (const auto& m : spec["models"]) {
      auto kind = ekl::parse_model_kind(m.get<std::string>());
      if (!kind) return fail_usage("unknown model '" + m.get<std::string>() + "' in sweep spec");
      models.push_back(*kind);
    }
    if (spec.contains("seeds")) seeds = spec["seeds"].get<std::vector<std::uint64_t>>();
    if (seeds.empty()) return fail_usage("sweep spec \"seeds\" must be non-empty");
    if (spec.contains("policy")) {
      auto p = ekl::parse_candidate_policy(spec["policy"].get<std::string>());
      if (!p) return fail_usage("unknown policy in sweep spec");
      policy = *p;
    }
    base = spec.contains("train") ? ekl::TrainConfig::from_json(spec["train"])
                                  : ekl::TrainConfig{};
    if (spec.contains("grid")) {
      grid = ekl::GridSpec::from_json(spec["grid"]);
    } else {
      grid.d = {base.d};
      grid.alpha = {base.alpha};
      grid.lr = {base.lr};
      grid.margin = {base.margin};
      grid.norm = {base.norm};
      grid.window = {base.window};
      grid.concat_width = {base.concat_width};
      grid.rnn_hidden = {base.rnn_hidden};
      grid.eval_interval = base.eval_interval;
      grid.patience = base.patience;
    }
    sequences_path = spec.value("sequences", std::string());
    gap_ms = spec.value("gap_ms", gap_ms);
    bool needs_sequences = false;
    for (ekl::ModelKind k : models) needs_sequences |= ekl::uses_sequences(k);
    if (needs_sequences && sequences_path.empty())
      return fail_usage("sweep spec needs \"sequences\" for sequence models");
    if (split_dirs.empty()) return fail_usage("sweep needs at least one split directory");
  } catch (const std::exception& e) {
    return fail_usage(e.what());
  }

  // Argument order must not matter: rows are keyed and sorted, and each
  // trial's randomness depends only on its own seed.
  std::sort(split_dirs.begin(), split_dirs.end());
  std::vector<SweepRow> rows;
  std::vector<std::pair<std::string, std::string>> inputs{
      {spec_path, ekl::file_digest(spec_path)}};
  for (const std::string& dir : split_dirs) {
    ekl::LoadedSplit loaded;
    ekl::SequenceDataset sequences;
    std::string relation_label;
    double proportion = 0.0;
    std::string load_error;
    try {
      loaded = ekl::read_split(dir);
      relation_label = loaded.split.mode == ekl::SplitMode::ZeroShot ? "zero-shot"
                                                                     : loaded.split.relation;
      proportion = loaded.split.proportion;
      if (!sequences_path.empty())
        sequences = load_sequences(sequences_path, loaded.kg, gap_ms);
      inputs.emplace_back(dir + "/split.json", ekl::file_digest(fs::path(dir) / "split.json"));
    } catch (const std::exception& e) {
      load_error = e.what();
      relation_label = dir;
    }
    for (ekl::ModelKind kind : models) {
      for (std::uint64_t seed : seeds) {
        SweepRow row;
        row.model = ekl::to_string(kind);
        row.relation = relation_label;
        row.proportion = proportion;
        row.seed = seed;
        if (!load_error.empty()) {
          row.error = load_error;
          rows.push_back(std::move(row));
          continue;
        }
        try {
          ekl::TrainConfig cfg = base;
          cfg.seed = seed;
          ekl::GridResult gr =
              ekl::grid_search(loaded.kg, loaded.split, sequences, kind, grid, cfg, policy);
          ekl::RankingReport rep =
              ekl::evaluate(gr.best_params, loaded.kg, loaded.split, policy, gr.best_cfg.norm);
          row.valid_mean_rank = gr.best_valid_mean_rank;
          row.test_mean_rank = rep.overall.both.mean_rank;
          row.ok = true;
          note(g, "sweep: " + row.model + " " + row.relation + " p=" + fmt(row.proportion) +
                      " seed=" + std::to_string(seed) + " -> test mean rank " +
                      fmt(row.test_mean_rank));
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        rows.push_back(std::move(row));
      }
    }
  }

  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.model, a.relation, a.proportion, a.seed) <
           std::tie(b.model, b.relation, b.proportion, b.seed);
  });

  fs::create_directories(g.out);
  {
    std::ofstream trials(fs::path(g.out) / "trials.csv", std::ios::binary);
    trials << "model,relation,proportion,seed,valid_mean_rank,test_mean_rank,status\n";
    for (const SweepRow& r : rows) {
      trials << r.model << ',' << r.relation << ',' << fmt(r.proportion) << ',' << r.seed << ',';
      if (r.ok) {
        trials << fmt(r.valid_mean_rank) << ',' << fmt(r.test_mean_rank) << ",ok\n";
      } else {
        std::string flat = r.error;  // grid errors can span lines; keep one row per trial
        std::replace(flat.begin(), flat.end(), '\n', ' ');
        trials << ",,failed: " << flat << "\n";
      }
    }
  }
  {
    // One row per (model, relation, proportion), seed-averaged.
    std::map<std::tuple<std::string, std::string, double>, std::pair<double, std::size_t>> agg;
    for (const SweepRow& r : rows) {
      if (!r.ok) continue;
      auto& [sum, n] = agg[{r.model, r.relation, r.proportion}];
      sum += r.test_mean_rank;
      ++n;
    }
    std::ofstream out(fs::path(g.out) / "sweep.csv", std::ios::binary);
    out << "model,relation,proportion,mean_rank,seeds\n";
    for (const auto& [key, value] : agg) {
      const auto& [model, relation, proportion] = key;
      out << model << ',' << relation << ',' << fmt(proportion) << ','
          << fmt(value.first / static_cast<double>(value.second)) << ',' << value.second << '\n';
    }
  }
  ekl::write_manifest(g.out, g.command, seeds.front(), spec, inputs);

  std::size_t failed = 0;
  for (const SweepRow& r : rows)
    if (!r.ok) ++failed;
  note(g, "sweep: " + std::to_string(rows.size() - failed) + "/" + std::to_string(rows.size()) +
              " trials ok -> " + g.out + " (" + std::to_string(watch.elapsed_ms()) + " ms)");
  if (failed > 0) {
    std::cerr << "error: " << failed << " sweep trial(s) failed (see trials.csv)\n";
    return kExitNumerical;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint embeddings of an industrial knowledge graph and its event log"};
  app.require_subcommand(1);

  GlobalFlags g;
  for (int i = 0; i < argc; ++i) g.command.emplace_back(argv[i]);
  auto* seed_opt = app.add_option("--seed", g.seed, "Master seed (default 42)");
  app.add_option("--out", g.out, "Output directory (default ./out)");
  app.add_flag("--quiet", g.quiet, "Suppress progress notes on stderr");

  auto* gen = app.add_subcommand("generate", "Generate a synthetic smart-factory world");
  gen->fallthrough();
  std::string gen_config;
  gen->add_option("--config", gen_config, "Factory config JSON (defaults when omitted)")
      ->check(CLI::ExistingFile);

  auto* scen = app.add_subcommand("scenario", "Carve train/valid/test splits from a KG");
  scen->fallthrough();
  std::string scen_kg, scen_classes, scen_mode, scen_relation;
  double scen_proportion = 0.0;
  scen->add_option("--kg", scen_kg, "Triple TSV file")->required()->check(CLI::ExistingFile);
  scen->add_option("--classes", scen_classes, "Entity class TSV file")
      ->check(CLI::ExistingFile);
  scen->add_option("--mode", scen_mode, "remove-links | zero-shot")->required();
  scen->add_option("--relation", scen_relation, "Target relation (remove-links)");
  scen->add_option("--proportion", scen_proportion,
                   "Test proportion of the relation's triples, or held-out event fraction")
      ->required();

  auto* train = app.add_subcommand("train", "Train a model on a split");
  train->fallthrough();
  TrainFlags tf;
  train->add_option("--model", tf.model, "transe | ekl-skip | ekl-concat | ekl-rnn")->required();
  train->add_option("--split", tf.split_dir, "Split directory from `scenario`")
      ->required()
      ->check(CLI::ExistingDirectory);
  train->add_option("--sequences", tf.sequences, "Occurrence CSV (required for ekl-*)")
      ->check(CLI::ExistingFile);
  auto* alpha_opt = train->add_option("--alpha", tf.cfg.alpha, "Sequence loss weight");
  train->add_option("--d", tf.cfg.d, "Embedding dimension");
  train->add_option("--lr", tf.cfg.lr, "Learning rate");
  train->add_option("--margin", tf.cfg.margin, "Ranking margin (gamma)");
  train->add_option("--negatives", tf.cfg.negatives, "Negatives per positive");
  train->add_option("--window", tf.cfg.window, "Skipgram context radius");
  train->add_option("--concat-width", tf.cfg.concat_width, "Concat predecessor count");
  train->add_option("--rnn-hidden", tf.cfg.rnn_hidden, "RNN hidden size (0 = d)");
  train->add_option("--epochs", tf.cfg.epochs, "Epoch cap (max 100)");
  train->add_option("--batch-kg", tf.cfg.batch_kg, "Triples per step");
  train->add_option("--batch-seq", tf.cfg.batch_seq, "Sequence instances per step");
  train->add_option("--norm", tf.norm, "L1 | L2");
  train->add_option("--eval-interval", tf.cfg.eval_interval, "Epochs between validations");
  train->add_option("--patience", tf.cfg.patience, "Stagnant validations before stopping");
  train->add_option("--max-seq-len", tf.cfg.max_seq_len, "RNN sequence chunk length");
  train->add_option("--gap-ms", tf.gap_ms, "Sessionization gap (ms)");
  train->add_option("--policy", tf.policy, "Validation metric candidate policy");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a split's test set");
  ev->fallthrough();
  std::string ev_checkpoint, ev_split, ev_policy = "all-entities";
  ev->add_option("--checkpoint", ev_checkpoint, "Checkpoint directory from `train`")
      ->required()
      ->check(CLI::ExistingDirectory);
  ev->add_option("--split", ev_split, "Split directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  ev->add_option("--policy", ev_policy, "all-entities | class-constrained");

  auto* sweep = app.add_subcommand("sweep", "Run a model/split/seed grid and tabulate mean ranks");
  sweep->fallthrough();
  std::string sweep_spec;
  std::vector<std::string> sweep_dirs;
  sweep->add_option("--spec", sweep_spec, "Sweep spec JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("splits", sweep_dirs, "Split directories")->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(g, gen_config, seed_opt->count() > 0);
    if (scen->parsed())
      return cmd_scenario(g, scen_kg, scen_classes, scen_mode, scen_relation, scen_proportion);
    if (train->parsed()) {
      tf.alpha_given = alpha_opt->count() > 0;
      return cmd_train(g, tf);
    }
    if (ev->parsed()) return cmd_eval(g, ev_checkpoint, ev_split, ev_policy);
    if (sweep->parsed()) return cmd_sweep(g, sweep_spec, sweep_dirs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
