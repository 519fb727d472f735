#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ekl/event_log.hpp"
#include "ekl/kg.hpp"
#include "ekl/model.hpp"

namespace ekl {

struct EpochStats {
  int epoch = 0;  // 0 is the pre-training baseline row (validation only)
  double kg_loss = 0.0;
  double seq_loss = 0.0;
  double joint = 0.0;
  std::optional<double> valid_metric;
};

// Returns a scalar to minimize (filtered mean rank on the validation split).
using ValidationHook = std::function<double(const ModelParams&)>;

struct TrainResult {
  ModelParams params;  // best-validation snapshot, or final params without a hook
  std::vector<EpochStats> history;
  double best_metric = 0.0;  // meaningful only when a hook was supplied
  int best_epoch = 0;
  int epochs_run = 0;
  bool stopped_early = false;
};

// Joint SGD over the triple set and the event sequences. `train_triples` is
// the training split; `kg` supplies the vocabulary and entity classes (it may
// contain entities that appear only in held-out splits). Each step consumes
// one KG mini-batch and, for sequence models with alpha != 0, the next
// `batch_seq` instances from a cycling stream that reshuffles on every
// wrap-around; an epoch is one shuffled pass over the triples. When `hook`
// is set it is invoked on the untrained parameters (epoch 0 baseline) and
// then every `eval_interval` epochs; `patience` evaluations without strict
// improvement stop training early.
TrainResult train(const KnowledgeGraph& kg, std::span<const Triple> train_triples,
                  const SequenceDataset& sequences, ModelKind kind, const TrainConfig& cfg,
                  const ValidationHook& hook = {});

}  // namespace ekl
