#include "ekl/model.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace ekl {

const char* to_string(Norm n) { return n == Norm::L1 ? "L1" : "L2"; }

std::optional<Norm> parse_norm(std::string_view s) {
  if (s == "L1" || s == "l1") return Norm::L1;
  if (s == "L2" || s == "l2") return Norm::L2;
  return std::nullopt;
}

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::TransE: return "transe";
    case ModelKind::EklSkip: return "ekl-skip";
    case ModelKind::EklConcat: return "ekl-concat";
    case ModelKind::EklRnn: return "ekl-rnn";
  }
  return "transe";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "transe") return ModelKind::TransE;
  if (s == "ekl-skip") return ModelKind::EklSkip;
  if (s == "ekl-concat") return ModelKind::EklConcat;
  if (s == "ekl-rnn") return ModelKind::EklRnn;
  return std::nullopt;
}

void TrainConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw TrainError(std::string("invalid train config: ") + what);
  };
  check(d > 0, "d must be positive");
  check(alpha >= 0.0, "alpha must be >= 0");
  check(margin > 0.0, "margin must be positive");
  check(lr > 0.0, "lr must be positive");
  check(negatives >= 1, "negatives must be >= 1");
  check(window >= 1, "window must be >= 1");
  check(concat_width >= 1, "concat_width must be >= 1");
  check(rnn_hidden >= 0, "rnn_hidden must be >= 0");
  check(epochs >= 1, "epochs must be >= 1");
  check(epochs <= 100, "epochs must be <= 100");
  check(batch_kg >= 1, "batch_kg must be >= 1");
  check(batch_seq >= 1, "batch_seq must be >= 1");
  check(eval_interval >= 1, "eval_interval must be >= 1");
  check(patience >= 1, "patience must be >= 1");
  check(max_seq_len >= 2, "max_seq_len must be >= 2");
}

nlohmann::json TrainConfig::to_json() const {
  return nlohmann::json{{"d", d},
                        {"alpha", alpha},
                        {"margin", margin},
                        {"lr", lr},
                        {"negatives", negatives},
                        {"window", window},
                        {"concat_width", concat_width},
                        {"rnn_hidden", rnn_hidden},
                        {"epochs", epochs},
                        {"batch_kg", batch_kg},
                        {"batch_seq", batch_seq},
                        {"norm", to_string(norm)},
                        {"seed", seed},
                        {"eval_interval", eval_interval},
                        {"patience", patience},
                        {"max_seq_len", max_seq_len}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.d = j.value("d", c.d);
  c.alpha = j.value("alpha", c.alpha);
  c.margin = j.value("margin", c.margin);
  c.lr = j.value("lr", c.lr);
  c.negatives = j.value("negatives", c.negatives);
  c.window = j.value("window", c.window);
  c.concat_width = j.value("concat_width", c.concat_width);
  c.rnn_hidden = j.value("rnn_hidden", c.rnn_hidden);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_kg = j.value("batch_kg", c.batch_kg);
  c.batch_seq = j.value("batch_seq", c.batch_seq);
  if (j.contains("norm")) {
    auto n = parse_norm(j.at("norm").get<std::string>());
    if (!n) throw TrainError("invalid train config: unknown norm");
    c.norm = *n;
  }
  c.seed = j.value("seed", c.seed);
  c.eval_interval = j.value("eval_interval", c.eval_interval);
  c.patience = j.value("patience", c.patience);
  c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
  return c;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  double m = x > 0.0 ? x : 0.0;
  return m + std::log1p(std::exp(-std::abs(x)));
}

// Gradient of ||u||_norm with respect to u.
Vec norm_grad(const Vec& u, Norm norm) {
  if (norm == Norm::L1) {
    return u.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
  }
  double n = u.norm();
  if (n == 0.0) return Vec::Zero(u.size());
  return u / n;
}

double norm_value(const Vec& u, Norm norm) {
  return norm == Norm::L1 ? u.lpNorm<1>() : u.norm();
}

}  // namespace

ModelParams ModelParams::init(ModelKind kind, const KnowledgeGraph& kg, const TrainConfig& cfg,
                              Rng& rng) {
  ModelParams p;
  p.kind = kind;
  p.d = cfg.d;
  p.concat_width = cfg.concat_width;
  p.rnn_hidden = cfg.effective_rnn_hidden();

  p.event_ids = kg.entities_of_class(EntityClass::Event);
  p.event_row_of.assign(kg.num_entities(), -1);
  for (std::size_t i = 0; i < p.event_ids.size(); ++i)
    p.event_row_of[p.event_ids[i].value] = static_cast<std::int32_t>(i);

  auto fill_uniform = [&rng](Mat& m, Eigen::Index rows, Eigen::Index cols, double bound) {
    m.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
  };

  const double b = 6.0 / std::sqrt(static_cast<double>(cfg.d));
  fill_uniform(p.entity_emb, kg.num_entities(), cfg.d, b);
  for (Eigen::Index i = 0; i < p.entity_emb.rows(); ++i) p.entity_emb.row(i).normalize();
  fill_uniform(p.relation_emb, kg.num_relations(), cfg.d, b);
  for (Eigen::Index i = 0; i < p.relation_emb.rows(); ++i) p.relation_emb.row(i).normalize();

  const Eigen::Index nx = static_cast<Eigen::Index>(p.event_ids.size());
  if (kind == ModelKind::EklSkip || kind == ModelKind::EklConcat) {
    fill_uniform(p.event_out, nx, cfg.d, 0.5 / std::sqrt(static_cast<double>(cfg.d)));
  }
  if (kind == ModelKind::EklConcat) {
    const Eigen::Index wd = static_cast<Eigen::Index>(cfg.concat_width) * cfg.d;
    fill_uniform(p.concat_proj, cfg.d, wd, std::sqrt(6.0 / static_cast<double>(wd + cfg.d)));
    p.concat_bias = Vec::Zero(cfg.d);
  }
  if (kind == ModelKind::EklRnn) {
    const int dh = p.rnn_hidden;
    fill_uniform(p.rnn_wxh, dh, cfg.d, std::sqrt(6.0 / static_cast<double>(cfg.d + dh)));
    fill_uniform(p.rnn_whh, dh, dh, std::sqrt(6.0 / static_cast<double>(2 * dh)));
    p.rnn_bh = Vec::Zero(dh);
    fill_uniform(p.rnn_out, nx, dh, 0.5 / std::sqrt(static_cast<double>(dh)));
    p.rnn_out_bias = Vec::Zero(nx);
  }
  return p;
}

Vec& Gradients::row(std::map<std::uint32_t, Vec>& table, std::uint32_t r, Eigen::Index dim) {
  auto [it, inserted] = table.try_emplace(r);
  if (inserted) it->second = Vec::Zero(dim);
  return it->second;
}

double transe_distance(const ModelParams& p, const Triple& t, Norm norm) {
  Vec diff = p.entity_emb.row(t.head.value).transpose() +
             p.relation_emb.row(t.relation.value).transpose() -
             p.entity_emb.row(t.tail.value).transpose();
  return norm_value(diff, norm);
}

double kg_loss_and_grad(const ModelParams& p, std::span<const Triple> pos,
                        std::span<const Triple> neg, double margin, Norm norm, Gradients& g) {
  if (pos.size() != neg.size())
    throw TrainError("kg_loss_and_grad: positive/negative batches must align");
  const Eigen::Index d = p.d;
  double loss = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    Vec diff_p = p.entity_emb.row(pos[i].head.value).transpose() +
                 p.relation_emb.row(pos[i].relation.value).transpose() -
                 p.entity_emb.row(pos[i].tail.value).transpose();
    Vec diff_n = p.entity_emb.row(neg[i].head.value).transpose() +
                 p.relation_emb.row(neg[i].relation.value).transpose() -
                 p.entity_emb.row(neg[i].tail.value).transpose();
    const double term = margin + norm_value(diff_p, norm) - norm_value(diff_n, norm);
    if (term <= 0.0) continue;
    loss += term;
    Vec gp = norm_grad(diff_p, norm);
    Vec gn = norm_grad(diff_n, norm);
    g.row(g.entity, pos[i].head.value, d) += gp;
    g.row(g.relation, pos[i].relation.value, d) += gp;
    g.row(g.entity, pos[i].tail.value, d) -= gp;
    g.row(g.entity, neg[i].head.value, d) -= gn;
    g.row(g.relation, neg[i].relation.value, d) -= gn;
    g.row(g.entity, neg[i].tail.value, d) += gn;
  }
  return loss;
}

Triple negative_sample(Rng& rng, std::uint32_t entity_count, const Triple& positive) {
  if (entity_count < 2)
    throw TrainError("negative_sample needs at least 2 entities");
  const bool corrupt_head = rng.coin();
  const std::uint32_t original = corrupt_head ? positive.head.value : positive.tail.value;
  std::uint32_t candidate;
  do {
    candidate = static_cast<std::uint32_t>(rng.below(entity_count));
  } while (candidate == original);
  Triple corrupted = positive;
  (corrupt_head ? corrupted.head : corrupted.tail) = EntityId{candidate};
  return corrupted;
}

double skipgram_loss_and_grad(const ModelParams& p, std::span<const SkipgramPair> pairs,
                              std::span<const std::uint32_t> negatives, int k, Gradients& g) {
  if (negatives.size() != pairs.size() * static_cast<std::size_t>(k))
    throw TrainError("skipgram_loss_and_grad: expected k negatives per pair");
  const Eigen::Index d = p.d;
  double loss = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::int32_t ctx_row = p.event_row(pairs[i].context);
    if (ctx_row < 0 || p.event_row(pairs[i].center) < 0)
      throw TrainError("skipgram pair references a non-Event entity");
    const std::uint32_t center = pairs[i].center.value;
    Vec v = p.entity_emb.row(center).transpose();
    Vec dv = Vec::Zero(d);
    {
      Vec u = p.event_out.row(ctx_row).transpose();
      const double s = u.dot(v);
      loss += softplus(-s);
      const double gs = sigmoid(s) - 1.0;  // d loss / d s
      dv += gs * u;
      g.row(g.event_out_rows, static_cast<std::uint32_t>(ctx_row), d) += gs * v;
    }
    for (int j = 0; j < k; ++j) {
      const std::uint32_t neg_row = negatives[i * k + j];
      Vec u = p.event_out.row(neg_row).transpose();
      const double s = u.dot(v);
      loss += softplus(s);
      const double gs = sigmoid(s);
      dv += gs * u;
      g.row(g.event_out_rows, neg_row, d) += gs * v;
    }
    g.row(g.entity, center, d) += dv;
  }
  return loss;
}

namespace {

// Stable softmax cross-entropy: fills probs, returns loss for target row.
double softmax_xent(const Vec& logits, Eigen::Index target, Vec& probs) {
  const double m = logits.maxCoeff();
  probs = (logits.array() - m).exp();
  const double z = probs.sum();
  probs /= z;
  return std::log(z) + m - logits(target);
}

}  // namespace

double concat_loss_and_grad(const ModelParams& p, std::span<const PrefixInstance> batch,
                            Gradients& g) {
  const Eigen::Index d = p.d;
  const int w = p.concat_width;
  const Eigen::Index nx = p.event_out.rows();
  if (g.event_out_dense.size() == 0) g.event_out_dense = Mat::Zero(nx, d);
  if (g.concat_proj.size() == 0) g.concat_proj = Mat::Zero(d, w * d);
  if (g.concat_bias.size() == 0) g.concat_bias = Vec::Zero(d);

  double loss = 0.0;
  Vec x(w * d), probs;
  for (const PrefixInstance& inst : batch) {
    const std::int32_t target = p.event_row(inst.target);
    if (target < 0) throw TrainError("concat instance targets a non-Event entity");
    if (inst.prefix.empty()) throw TrainError("concat instance with empty prefix");
    const int take = std::min<int>(w, static_cast<int>(inst.prefix.size()));
    const std::size_t skip = inst.prefix.size() - static_cast<std::size_t>(take);
    x.setZero();
    for (int b = 0; b < take; ++b) {
      const EntityId e = inst.prefix[skip + static_cast<std::size_t>(b)];
      x.segment((w - take + b) * d, d) = p.entity_emb.row(e.value).transpose();
    }
    Vec hidden = p.concat_proj * x + p.concat_bias;
    Vec logits = p.event_out * hidden;
    loss += softmax_xent(logits, target, probs);
    Vec dlogits = probs;
    dlogits(target) -= 1.0;
    g.event_out_dense.noalias() += dlogits * hidden.transpose();
    Vec dhidden = p.event_out.transpose() * dlogits;
    g.concat_bias += dhidden;
    g.concat_proj.noalias() += dhidden * x.transpose();
    Vec dx = p.concat_proj.transpose() * dhidden;
    for (int b = 0; b < take; ++b) {
      const EntityId e = inst.prefix[skip + static_cast<std::size_t>(b)];
      g.row(g.entity, e.value, d) += dx.segment((w - take + b) * d, d);
    }
  }
  return loss;
}

double rnn_loss_and_grad(const ModelParams& p, std::span<const PrefixInstance> batch,
                         Gradients& g) {
  const Eigen::Index d = p.d;
  const Eigen::Index dh = p.rnn_hidden;
  const Eigen::Index nx = p.rnn_out.rows();
  if (g.rnn_wxh.size() == 0) g.rnn_wxh = Mat::Zero(dh, d);
  if (g.rnn_whh.size() == 0) g.rnn_whh = Mat::Zero(dh, dh);
  if (g.rnn_bh.size() == 0) g.rnn_bh = Vec::Zero(dh);
  if (g.rnn_out.size() == 0) g.rnn_out = Mat::Zero(nx, dh);
  if (g.rnn_out_bias.size() == 0) g.rnn_out_bias = Vec::Zero(nx);

  double loss = 0.0;
  Vec probs;
  for (const PrefixInstance& inst : batch) {
    const std::int32_t target = p.event_row(inst.target);
    if (target < 0) throw TrainError("rnn instance targets a non-Event entity");
    const std::size_t steps = inst.prefix.size();
    if (steps == 0) throw TrainError("rnn instance with empty prefix");

    std::vector<Vec> hidden(steps + 1);
    hidden[0] = Vec::Zero(dh);
    for (std::size_t t = 0; t < steps; ++t) {
      Vec a = p.rnn_wxh * p.entity_emb.row(inst.prefix[t].value).transpose() +
              p.rnn_whh * hidden[t] + p.rnn_bh;
      hidden[t + 1] = a.array().tanh();
    }
    Vec logits = p.rnn_out * hidden[steps] + p.rnn_out_bias;
    loss += softmax_xent(logits, target, probs);
    Vec dlogits = probs;
    dlogits(target) -= 1.0;
    g.rnn_out.noalias() += dlogits * hidden[steps].transpose();
    g.rnn_out_bias += dlogits;
    Vec dh_vec = p.rnn_out.transpose() * dlogits;
    for (std::size_t t = steps; t-- > 0;) {
      Vec da = dh_vec.cwiseProduct(
          (1.0 - hidden[t + 1].array().square()).matrix());
      g.rnn_bh += da;
      g.rnn_wxh.noalias() += da * p.entity_emb.row(inst.prefix[t].value);
      g.rnn_whh.noalias() += da * hidden[t].transpose();
      g.row(g.entity, inst.prefix[t].value, d) += p.rnn_wxh.transpose() * da;
      dh_vec = p.rnn_whh.transpose() * da;
    }
  }
  return loss;
}

LossBreakdown joint_step(ModelParams& p, const TrainConfig& cfg, std::span<const Triple> kg_batch,
                         const SeqBatch& seq, Rng& rng) {
  if (kg_batch.empty()) throw TrainError("joint_step: empty kg batch");
  const bool seq_active = cfg.alpha != 0.0 && uses_sequences(p.kind);
  if (seq_active && seq.pairs.empty() && seq.prefixes.empty())
    throw TrainError("joint_step: empty sequence batch with alpha != 0");

  // KG side: cfg.negatives corruptions per positive, drawn first.
  std::vector<Triple> pos_expanded, neg_expanded;
  pos_expanded.reserve(kg_batch.size() * cfg.negatives);
  neg_expanded.reserve(kg_batch.size() * cfg.negatives);
  const std::uint32_t num_entities = static_cast<std::uint32_t>(p.entity_emb.rows());
  for (const Triple& t : kg_batch) {
    for (int j = 0; j < cfg.negatives; ++j) {
      pos_expanded.push_back(t);
      neg_expanded.push_back(negative_sample(rng, num_entities, t));
    }
  }
  Gradients g_kg;
  const double kg_loss =
      kg_loss_and_grad(p, pos_expanded, neg_expanded, cfg.margin, cfg.norm, g_kg);

  Gradients g_seq;
  double seq_loss = 0.0;
  if (seq_active) {
    switch (p.kind) {
      case ModelKind::EklSkip: {
        std::vector<std::uint32_t> negs(seq.pairs.size() * static_cast<std::size_t>(cfg.negatives));
        for (auto& n : negs) n = static_cast<std::uint32_t>(rng.below(p.num_events()));
        seq_loss = skipgram_loss_and_grad(p, seq.pairs, negs, cfg.negatives, g_seq);
        break;
      }
      case ModelKind::EklConcat:
        seq_loss = concat_loss_and_grad(p, seq.prefixes, g_seq);
        break;
      case ModelKind::EklRnn:
        seq_loss = rnn_loss_and_grad(p, seq.prefixes, g_seq);
        break;
      case ModelKind::TransE:
        break;
    }
  }

  // Combined update. Entity rows merge the two objectives before the single
  // SGD step so each touched row is written and renormalized exactly once.
  const double lr = cfg.lr;
  std::map<std::uint32_t, Vec>& entity_grad = g_kg.entity;
  if (seq_active) {
    for (const auto& [row, vec] : g_seq.entity) {
      auto [it, inserted] = entity_grad.try_emplace(row);
      if (inserted) it->second = cfg.alpha * vec;
      else it->second += cfg.alpha * vec;
    }
  }
  for (const auto& [row, vec] : entity_grad) {
    p.entity_emb.row(row) -= lr * vec.transpose();
    p.entity_emb.row(row).normalize();
  }
  for (const auto& [row, vec] : g_kg.relation) p.relation_emb.row(row) -= lr * vec.transpose();
  if (seq_active) {
    const double scale = lr * cfg.alpha;
    for (const auto& [row, vec] : g_seq.event_out_rows)
      p.event_out.row(row) -= scale * vec.transpose();
    if (g_seq.event_out_dense.size() > 0) p.event_out -= scale * g_seq.event_out_dense;
    if (g_seq.concat_proj.size() > 0) p.concat_proj -= scale * g_seq.concat_proj;
    if (g_seq.concat_bias.size() > 0) p.concat_bias -= scale * g_seq.concat_bias;
    if (g_seq.rnn_wxh.size() > 0) p.rnn_wxh -= scale * g_seq.rnn_wxh;
    if (g_seq.rnn_whh.size() > 0) p.rnn_whh -= scale * g_seq.rnn_whh;
    if (g_seq.rnn_bh.size() > 0) p.rnn_bh -= scale * g_seq.rnn_bh;
    if (g_seq.rnn_out.size() > 0) p.rnn_out -= scale * g_seq.rnn_out;
    if (g_seq.rnn_out_bias.size() > 0) p.rnn_out_bias -= scale * g_seq.rnn_out_bias;
  }

  LossBreakdown lb;
  lb.kg_loss = kg_loss;
  lb.seq_loss = seq_loss;
  lb.joint = kg_loss + cfg.alpha * seq_loss;
  return lb;
}

}  // namespace ekl
