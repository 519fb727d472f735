#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "ekl/event_log.hpp"
#include "ekl/kg.hpp"
#include "ekl/rng.hpp"

namespace ekl {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

enum class Norm { L1, L2 };
const char* to_string(Norm n);
std::optional<Norm> parse_norm(std::string_view s);

enum class ModelKind { TransE, EklSkip, EklConcat, EklRnn };
const char* to_string(ModelKind k);
std::optional<ModelKind> parse_model_kind(std::string_view s);
inline bool uses_sequences(ModelKind k) { return k != ModelKind::TransE; }

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int d = 50;
  double alpha = 1.0;     // weight of the sequence objective in the joint loss
  double margin = 1.0;    // gamma
  double lr = 0.01;
  int negatives = 5;      // corruptions per positive (KG) and skipgram k
  int window = 5;         // skipgram context radius c
  int concat_width = 3;   // w
  int rnn_hidden = 0;     // d_h; 0 means "use d"
  int epochs = 100;
  int batch_kg = 128;
  int batch_seq = 128;
  Norm norm = Norm::L1;
  std::uint64_t seed = 0;
  int eval_interval = 5;
  int patience = 3;
  int max_seq_len = 50;   // RNN-only sequence chunk length

  int effective_rnn_hidden() const { return rnn_hidden > 0 ? rnn_hidden : d; }
  void validate() const;  // throws ConfigError-style TrainError naming the field

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Embedding tables. entity_emb rows are shared between the KG objective and
// every sequence objective; that coupling is what lets sequence data move
// entities the KG loss never touches.
struct ModelParams {
  ModelKind kind = ModelKind::TransE;
  int d = 0;
  int concat_width = 0;
  int rnn_hidden = 0;

  std::vector<EntityId> event_ids;          // X, ascending entity id
  std::vector<std::int32_t> event_row_of;   // entity id -> row in X tables, -1 otherwise

  Mat entity_emb;     // |E| x d
  Mat relation_emb;   // |R| x d
  Mat event_out;      // |X| x d: skipgram context table / concat output table
  Mat concat_proj;    // d x (w*d)
  Vec concat_bias;    // d
  Mat rnn_wxh;        // d_h x d
  Mat rnn_whh;        // d_h x d_h
  Vec rnn_bh;         // d_h
  Mat rnn_out;        // |X| x d_h
  Vec rnn_out_bias;   // |X|

  std::int32_t event_row(EntityId e) const { return event_row_of[e.value]; }
  std::size_t num_events() const { return event_ids.size(); }

  static ModelParams init(ModelKind kind, const KnowledgeGraph& kg, const TrainConfig& cfg,
                          Rng& rng);
};

// Sparse row gradients for the embedding tables plus dense gradients for the
// shared weights. std::map keys keep the accumulation and update order
// canonical.
struct Gradients {
  std::map<std::uint32_t, Vec> entity;
  std::map<std::uint32_t, Vec> relation;
  std::map<std::uint32_t, Vec> event_out_rows;  // skipgram-touched rows
  Mat event_out_dense;                          // concat full-softmax gradient
  Mat concat_proj;
  Vec concat_bias;
  Mat rnn_wxh, rnn_whh;
  Vec rnn_bh;
  Mat rnn_out;
  Vec rnn_out_bias;

  Vec& row(std::map<std::uint32_t, Vec>& table, std::uint32_t r, Eigen::Index dim);
};

struct LossBreakdown {
  double kg_loss = 0.0;
  double seq_loss = 0.0;
  double joint = 0.0;
};

double transe_distance(const ModelParams& p, const Triple& t, Norm norm);

// Margin ranking loss sum over aligned (positive, negative) pairs; gradients
// accumulate into g for every touched row.
double kg_loss_and_grad(const ModelParams& p, std::span<const Triple> pos,
                        std::span<const Triple> neg, double margin, Norm norm, Gradients& g);

// Replaces head or tail (fair coin) by a uniform entity, redrawn until the
// corruption differs from the positive.
Triple negative_sample(Rng& rng, std::uint32_t entity_count, const Triple& positive);

// Negative-sampling logistic loss; negatives holds k pre-drawn X rows per pair.
double skipgram_loss_and_grad(const ModelParams& p, std::span<const SkipgramPair> pairs,
                              std::span<const std::uint32_t> negatives, int k, Gradients& g);

// Full-softmax cross-entropy over X from the order-preserving block
// projection of the (left-zero-padded) w-prefix.
double concat_loss_and_grad(const ModelParams& p, std::span<const PrefixInstance> batch,
                            Gradients& g);

// Many-to-one tanh RNN over the full prefix, full-softmax cross-entropy from
// the last hidden state, exact gradients via BPTT.
double rnn_loss_and_grad(const ModelParams& p, std::span<const PrefixInstance> batch,
                         Gradients& g);

struct SeqBatch {
  std::span<const SkipgramPair> pairs;        // EklSkip
  std::span<const PrefixInstance> prefixes;   // EklConcat / EklRnn
};

// One SGD update with gradient grad(L_KG) + alpha * grad(L_seq). Negatives
// for both objectives are drawn from rng (KG first). Updated entity rows are
// renormalized to unit L2. Returns the pre-update losses; with alpha == 0 the
// sequence side is skipped entirely.
LossBreakdown joint_step(ModelParams& p, const TrainConfig& cfg, std::span<const Triple> kg_batch,
                         const SeqBatch& seq, Rng& rng);

}  // namespace ekl
