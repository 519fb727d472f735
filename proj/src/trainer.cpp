#include "ekl/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "ekl/rng.hpp"

namespace ekl {

namespace {

// Infinite stream over [0, n): a permutation that reshuffles on wrap-around.
class CyclingOrder {
 public:
  CyclingOrder(std::size_t n, Rng& rng) : rng_(&rng), order_(n) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    rng.shuffle(order_);
  }

  std::size_t next() {
    if (pos_ == order_.size()) {
      rng_->shuffle(order_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  Rng* rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

}  // namespace

TrainResult train(const KnowledgeGraph& kg, std::span<const Triple> train_triples,
                  const SequenceDataset& sequences, ModelKind kind, const TrainConfig& cfg,
                  const ValidationHook& hook) {
  cfg.validate();
  if (train_triples.empty()) throw TrainError("training split has no triples");

  Rng init_rng(derive_seed(cfg.seed, 0));
  Rng loop_rng(derive_seed(cfg.seed, 1));
  ModelParams params = ModelParams::init(kind, kg, cfg, init_rng);

  const bool seq_active = uses_sequences(kind) && cfg.alpha != 0.0;
  std::vector<SkipgramPair> pairs;
  std::vector<PrefixInstance> prefixes;
  if (seq_active) {
    switch (kind) {
      case ModelKind::EklSkip:
        pairs = skipgram_pairs(sequences, cfg.window);
        break;
      case ModelKind::EklConcat:
        prefixes = prefix_instances(sequences, cfg.concat_width);
        break;
      case ModelKind::EklRnn:
        prefixes = prefix_instances(chunk_sequences(sequences, cfg.max_seq_len), std::nullopt);
        break;
      case ModelKind::TransE:
        break;
    }
    if (pairs.empty() && prefixes.empty())
      throw TrainError("sequence dataset produced no training instances");
  }

  TrainResult result;
  double best = 0.0;
  int stagnation = 0;
  bool have_best = false;
  if (hook) {
    best = hook(params);
    have_best = true;
    result.params = params;
    result.best_metric = best;
    result.best_epoch = 0;
    EpochStats baseline;
    baseline.valid_metric = best;
    result.history.push_back(baseline);
  }

  CyclingOrder kg_order(train_triples.size(), loop_rng);
  std::optional<CyclingOrder> seq_order;
  const std::size_t seq_total = seq_active ? (pairs.empty() ? prefixes.size() : pairs.size()) : 0;
  if (seq_active) seq_order.emplace(seq_total, loop_rng);

  const std::size_t steps_per_epoch =
      (train_triples.size() + cfg.batch_kg - 1) / static_cast<std::size_t>(cfg.batch_kg);
  std::vector<Triple> kg_batch;
  std::vector<SkipgramPair> pair_batch;
  std::vector<PrefixInstance> prefix_batch;
  std::size_t global_step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      ++global_step;
      kg_batch.clear();
      const std::size_t want =
          std::min<std::size_t>(cfg.batch_kg, train_triples.size() - s * cfg.batch_kg);
      for (std::size_t i = 0; i < want; ++i) kg_batch.push_back(train_triples[kg_order.next()]);

      SeqBatch seq;
      if (seq_active) {
        if (!pairs.empty()) {
          pair_batch.clear();
          for (int i = 0; i < cfg.batch_seq; ++i) pair_batch.push_back(pairs[seq_order->next()]);
          seq.pairs = pair_batch;
        } else {
          prefix_batch.clear();
          for (int i = 0; i < cfg.batch_seq; ++i)
            prefix_batch.push_back(prefixes[seq_order->next()]);
          seq.prefixes = prefix_batch;
        }
      }

      LossBreakdown lb = joint_step(params, cfg, kg_batch, seq, loop_rng);
      if (!std::isfinite(lb.joint))
        throw TrainError("non-finite loss at step " + std::to_string(global_step) + " (epoch " +
                         std::to_string(epoch) + ")");
      stats.kg_loss += lb.kg_loss;
      stats.seq_loss += lb.seq_loss;
    }
    stats.joint = stats.kg_loss + cfg.alpha * stats.seq_loss;

    bool stop = false;
    if (hook && epoch % cfg.eval_interval == 0) {
      const double metric = hook(params);
      stats.valid_metric = metric;
      if (metric < best) {
        best = metric;
        stagnation = 0;
        result.params = params;
        result.best_metric = metric;
        result.best_epoch = epoch;
      } else if (++stagnation >= cfg.patience) {
        stop = true;
      }
    }
    result.history.push_back(stats);
    result.epochs_run = epoch;
    if (stop) {
      result.stopped_early = true;
      break;
    }
  }

  if (!have_best) {
    result.params = std::move(params);
    result.best_epoch = result.epochs_run;
  }
  return result;
}

}  // namespace ekl
