#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "ekl/event_log.hpp"
#include "ekl/kg.hpp"
#include "ekl/model.hpp"
#include "ekl/rng.hpp"
#include "oracles.hpp"

using namespace ekl;

namespace {

// Small world with enough events to exercise every sequence objective.
KnowledgeGraph fd_world() {
  KnowledgeGraph kg;
  std::vector<EntityId> devs, events;
  for (int i = 0; i < 3; ++i)
    devs.push_back(kg.add_entity("dev" + std::to_string(i + 1), EntityClass::Equipment));
  for (int i = 0; i < 8; ++i)
    events.push_back(kg.add_entity("x" + std::to_string(i + 1), EntityClass::Event));
  EntityId evclass = kg.add_entity("evclass_1", EntityClass::Other);
  RelationId has_source = kg.add_relation("hasSource");
  RelationId connected = kg.add_relation("connectedTo");
  RelationId is_a = kg.add_relation("isA");
  for (int i = 0; i < 8; ++i) kg.add_triple({events[i], has_source, devs[i % 3]});
  kg.add_triple({devs[0], connected, devs[1]});
  kg.add_triple({devs[1], connected, devs[2]});
  for (int i = 0; i < 8; ++i) kg.add_triple({events[i], is_a, evclass});
  return kg;
}

EntityId ev(const KnowledgeGraph& kg, int i) {
  return kg.find_entity("x" + std::to_string(i)).value();
}

bool same_bits(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.size() == 0 ||
          std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0);
}

// Hand-built parameter set over `n` one-dimensional entities; the entity
// values are set directly so distances are exact small integers.
ModelParams line_params(std::initializer_list<double> entity_values, double relation_value) {
  ModelParams p;
  p.kind = ModelKind::TransE;
  p.d = 1;
  p.entity_emb.resize(static_cast<Eigen::Index>(entity_values.size()), 1);
  Eigen::Index i = 0;
  for (double v : entity_values) p.entity_emb(i++, 0) = v;
  p.relation_emb.resize(1, 1);
  p.relation_emb(0, 0) = relation_value;
  return p;
}

}  // namespace

TEST_CASE("translation distance on hand-set embeddings") {
  ModelParams p;
  p.kind = ModelKind::TransE;
  p.d = 2;
  p.entity_emb.resize(2, 2);
  p.relation_emb.resize(1, 2);
  p.entity_emb << 0.5, 0.5, 0.6, 0.3;
  p.relation_emb << 0.1, -0.2;
  Triple t{EntityId{0}, RelationId{0}, EntityId{1}};
  CHECK(transe_distance(p, t, Norm::L1) == doctest::Approx(0.0));
  CHECK(transe_distance(p, t, Norm::L2) == doctest::Approx(0.0));

  p.entity_emb << 1.0, 0.0, 0.0, 0.0;
  p.relation_emb << 0.0, 1.0;
  CHECK(transe_distance(p, t, Norm::L1) == doctest::Approx(2.0));
  CHECK(transe_distance(p, t, Norm::L2) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("translation distance equals a scalar loop on random embeddings") {
  KnowledgeGraph kg = fd_world();
  TrainConfig cfg;
  cfg.d = 7;
  Rng rng(31);
  ModelParams p = ModelParams::init(ModelKind::TransE, kg, cfg, rng);
  for (const Triple& t : kg.triples()) {
    CHECK(transe_distance(p, t, Norm::L1) ==
          doctest::Approx(oracle::distance(p, t.head.value, t.relation.value, t.tail.value, Norm::L1)));
    CHECK(transe_distance(p, t, Norm::L2) ==
          doctest::Approx(oracle::distance(p, t.head.value, t.relation.value, t.tail.value, Norm::L2)));
  }
}

TEST_CASE("margin ranking loss on one hand-computed pair") {
  // entities at 0, 0, 0.5 with relation 1: positive <e0,r,e1> has distance 1,
  // the tail corruption <e0,r,e2> has distance 0.5, margin 1 gives 1.5
  ModelParams p = line_params({0.0, 0.0, 0.5}, 1.0);
  std::vector<Triple> pos = {{EntityId{0}, RelationId{0}, EntityId{1}}};
  std::vector<Triple> neg = {{EntityId{0}, RelationId{0}, EntityId{2}}};
  Gradients g;
  const double loss = kg_loss_and_grad(p, pos, neg, 1.0, Norm::L1, g);
  CHECK(loss == doctest::Approx(1.5));
  // L1 signs: the positive pushes e1 toward h+r, the corruption pushes e2 away
  CHECK(g.entity.at(0)(0) == doctest::Approx(0.0));
  CHECK(g.entity.at(1)(0) == doctest::Approx(-1.0));
  CHECK(g.entity.at(2)(0) == doctest::Approx(1.0));
  CHECK(g.relation.at(0)(0) == doctest::Approx(0.0));
}

TEST_CASE("an inactive hinge contributes neither loss nor gradient") {
  ModelParams p = line_params({0.0, 0.1, 3.0}, 0.0);
  std::vector<Triple> pos = {{EntityId{0}, RelationId{0}, EntityId{1}}};   // distance 0.1
  std::vector<Triple> neg = {{EntityId{0}, RelationId{0}, EntityId{2}}};   // distance 3.0
  Gradients g;
  CHECK(kg_loss_and_grad(p, pos, neg, 1.0, Norm::L1, g) == doctest::Approx(0.0));
  CHECK(g.entity.empty());
  CHECK(g.relation.empty());
}

TEST_CASE("corruption replaces exactly one side and never repeats the positive") {
  KnowledgeGraph kg;
  EntityId a = kg.add_entity("a");
  EntityId b = kg.add_entity("b");
  RelationId r = kg.add_relation("r");
  Triple positive{a, r, b};
  Rng rng(13);
  int head_corrupted = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    Triple n = negative_sample(rng, 2, positive);
    CHECK(n != positive);
    const bool head_changed = n.head != positive.head;
    const bool tail_changed = n.tail != positive.tail;
    CHECK(head_changed != tail_changed);  // exactly one side
    if (head_changed) {
      CHECK(n == Triple{b, r, b});
      ++head_corrupted;
    } else {
      CHECK(n == Triple{a, r, a});
    }
  }
  const double ratio = static_cast<double>(head_corrupted) / draws;
  CHECK(ratio > 0.48);
  CHECK(ratio < 0.52);
}

TEST_CASE("corruption needs at least two entities") {
  KnowledgeGraph kg;
  EntityId a = kg.add_entity("a");
  RelationId r = kg.add_relation("r");
  Rng rng(1);
  CHECK_THROWS_AS(negative_sample(rng, 1, Triple{a, r, a}), TrainError);
}

TEST_CASE("skipgram loss with zero context vectors is (1+k) log 2 per pair") {
  KnowledgeGraph kg = fd_world();
  TrainConfig cfg;
  cfg.d = 5;
  Rng rng(3);
  ModelParams p = ModelParams::init(ModelKind::EklSkip, kg, cfg, rng);
  p.event_out.setZero();
  std::vector<SkipgramPair> pairs = {{ev(kg, 1), ev(kg, 2)}, {ev(kg, 3), ev(kg, 4)}};
  const int k = 3;
  std::vector<std::uint32_t> negs = {0, 1, 2, 4, 5, 6};  // X rows, k per pair
  Gradients g;
  const double loss = skipgram_loss_and_grad(p, pairs, negs, k, g);
  CHECK(loss == doctest::Approx(2.0 * (1 + k) * std::log(2.0)));
}

TEST_CASE("skipgram batch demands k negatives per pair") {
  KnowledgeGraph kg = fd_world();
  TrainConfig cfg;
  cfg.d = 4;
  Rng rng(3);
  ModelParams p = ModelParams::init(ModelKind::EklSkip, kg, cfg, rng);
  std::vector<SkipgramPair> pairs = {{ev(kg, 1), ev(kg, 2)}};
  std::vector<std::uint32_t> negs = {0, 1};  // but k = 3
  Gradients g;
  CHECK_THROWS_AS(skipgram_loss_and_grad(p, pairs, negs, 3, g), TrainError);
}

TEST_CASE("next-event softmax over zero logits is log |X|") {
  KnowledgeGraph kg = fd_world();  // |X| = 8
  TrainConfig cfg;
  cfg.d = 4;
  cfg.concat_width = 2;
  Rng rng(5);
  ModelParams p = ModelParams::init(ModelKind::EklConcat, kg, cfg, rng);
  p.event_out.setZero();  // logits vanish regardless of the projection
  std::vector<PrefixInstance> batch = {{{ev(kg, 1)}, ev(kg, 2)},
                                       {{ev(kg, 1), ev(kg, 3)}, ev(kg, 5)}};
  Gradients g;
  CHECK(concat_loss_and_grad(p, batch, g) == doctest::Approx(2.0 * std::log(8.0)));

  ModelParams q = ModelParams::init(ModelKind::EklRnn, kg, cfg, rng);
  q.rnn_wxh.setZero();
  q.rnn_whh.setZero();
  q.rnn_bh.setZero();
  q.rnn_out.setZero();
  q.rnn_out_bias.setZero();
  Gradients gr;
  CHECK(rnn_loss_and_grad(q, batch, gr) == doctest::Approx(2.0 * std::log(8.0)));
}

TEST_CASE("padding slots contribute nothing to the concat projection") {
  KnowledgeGraph kg = fd_world();
  TrainConfig cfg;
  cfg.d = 4;
  cfg.concat_width = 3;
  Rng rng(8);
  ModelParams p = ModelParams::init(ModelKind::EklConcat, kg, cfg, rng);
  // prefix of length 1 under width 3: the two oldest slots are padding
  std::vector<PrefixInstance> batch = {{{ev(kg, 4)}, ev(kg, 6)}};
  Gradients g1;
  const double base = concat_loss_and_grad(p, batch, g1);

  ModelParams q = p;
  q.concat_proj.leftCols(2 * cfg.d).setConstant(1e6);  // garbage under the padding
  Gradients g2;
  CHECK(concat_loss_and_grad(q, batch, g2) == base);
  // and the gradient never reaches the padded columns
  CHECK((g1.concat_proj.leftCols(2 * cfg.d).array() == 0.0).all());
}

TEST_CASE("one-unit recurrent chain matches the scalar recurrence") {
  ModelParams p;
  p.kind = ModelKind::EklRnn;
  p.d = 1;
  p.rnn_hidden = 1;
  p.event_ids = {EntityId{0}, EntityId{1}};
  p.event_row_of = {0, 1};
  p.entity_emb.resize(2, 1);
  p.entity_emb << 1.0, -1.0;
  p.relation_emb.resize(1, 1);
  p.relation_emb.setZero();
  p.rnn_wxh.resize(1, 1);
  p.rnn_wxh << 0.5;
  p.rnn_whh.resize(1, 1);
  p.rnn_whh << 0.25;
  p.rnn_bh.resize(1);
  p.rnn_bh << 0.1;
  p.rnn_out.resize(2, 1);
  p.rnn_out << 1.0, -1.0;
  p.rnn_out_bias.resize(2);
  p.rnn_out_bias.setZero();

  std::vector<PrefixInstance> batch = {{{EntityId{0}, EntityId{1}}, EntityId{0}}};
  Gradients g;
  const double loss = rnn_loss_and_grad(p, batch, g);

  const double h1 = std::tanh(0.5 * 1.0 + 0.25 * 0.0 + 0.1);
  const double h2 = std::tanh(0.5 * -1.0 + 0.25 * h1 + 0.1);
  const double want = std::log(std::exp(h2) + std::exp(-h2)) - h2;
  CHECK(loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
  KnowledgeGraph kg = fd_world();
  const std::size_t coords_per_draw = 120;

  SUBCASE("margin ranking, both norms") {
    for (Norm norm : {Norm::L1, Norm::L2}) {
      for (int draw = 0; draw < 10; ++draw) {
        TrainConfig cfg;
        cfg.d = 6;
        cfg.margin = 0.8;
        cfg.norm = norm;
        Rng init_rng(derive_seed(100, draw));
        ModelParams p = ModelParams::init(ModelKind::TransE, kg, cfg, init_rng);
        std::vector<Triple> pos(kg.triples().begin(), kg.triples().begin() + 6);
        std::vector<Triple> neg;
        Rng neg_rng(derive_seed(200, draw));
        for (const Triple& t : pos) neg.push_back(negative_sample(neg_rng, kg.num_entities(), t));
        Gradients g;
        kg_loss_and_grad(p, pos, neg, cfg.margin, norm, g);
        if (g.entity.empty()) continue;  // every hinge inactive for this draw
        Rng coord_rng(derive_seed(300, draw));
        const double err = oracle::max_fd_rel_err(
            p, g,
            [&](const ModelParams& q) {
              Gradients scratch;
              return kg_loss_and_grad(q, pos, neg, cfg.margin, norm, scratch);
            },
            coords_per_draw, coord_rng);
        CHECK(err < 1e-4);
      }
    }
  }

  SUBCASE("skipgram negative sampling") {
    const int k = 3;
    std::vector<SkipgramPair> pairs = {{ev(kg, 1), ev(kg, 2)},
                                       {ev(kg, 2), ev(kg, 1)},
                                       {ev(kg, 3), ev(kg, 7)},
                                       {ev(kg, 5), ev(kg, 4)},
                                       {ev(kg, 8), ev(kg, 8)}};
    for (int draw = 0; draw < 10; ++draw) {
      TrainConfig cfg;
      cfg.d = 5;
      Rng init_rng(derive_seed(400, draw));
      ModelParams p = ModelParams::init(ModelKind::EklSkip, kg, cfg, init_rng);
      Rng neg_rng(derive_seed(500, draw));
      std::vector<std::uint32_t> negs;
      for (std::size_t i = 0; i < pairs.size() * k; ++i)
        negs.push_back(static_cast<std::uint32_t>(neg_rng.below(p.num_events())));
      Gradients g;
      skipgram_loss_and_grad(p, pairs, negs, k, g);
      Rng coord_rng(derive_seed(600, draw));
      const double err = oracle::max_fd_rel_err(
          p, g,
          [&](const ModelParams& q) {
            Gradients scratch;
            return skipgram_loss_and_grad(q, pairs, negs, k, scratch);
          },
          coords_per_draw, coord_rng);
      CHECK(err < 1e-4);
    }
  }

  SUBCASE("concat projection softmax") {
    std::vector<PrefixInstance> batch = {{{ev(kg, 1)}, ev(kg, 2)},
                                         {{ev(kg, 1), ev(kg, 3)}, ev(kg, 5)},
                                         {{ev(kg, 7), ev(kg, 2)}, ev(kg, 2)}};
    for (int draw = 0; draw < 10; ++draw) {
      TrainConfig cfg;
      cfg.d = 4;
      cfg.concat_width = 2;
      Rng init_rng(derive_seed(700, draw));
      ModelParams p = ModelParams::init(ModelKind::EklConcat, kg, cfg, init_rng);
      Gradients g;
      concat_loss_and_grad(p, batch, g);
      Rng coord_rng(derive_seed(800, draw));
      const double err = oracle::max_fd_rel_err(
          p, g,
          [&](const ModelParams& q) {
            Gradients scratch;
            return concat_loss_and_grad(q, batch, scratch);
          },
          coords_per_draw, coord_rng);
      CHECK(err < 1e-4);
    }
  }

  SUBCASE("recurrent softmax with backpropagation through time") {
    std::vector<PrefixInstance> batch = {
        {{ev(kg, 1), ev(kg, 2), ev(kg, 3), ev(kg, 4), ev(kg, 5)}, ev(kg, 6)},
        {{ev(kg, 2), ev(kg, 2)}, ev(kg, 8)}};
    for (int draw = 0; draw < 10; ++draw) {
      TrainConfig cfg;
      cfg.d = 3;
      cfg.rnn_hidden = 4;
      Rng init_rng(derive_seed(900, draw));
      ModelParams p = ModelParams::init(ModelKind::EklRnn, kg, cfg, init_rng);
      Gradients g;
      rnn_loss_and_grad(p, batch, g);
      Rng coord_rng(derive_seed(1000, draw));
      const double err = oracle::max_fd_rel_err(
          p, g,
          [&](const ModelParams& q) {
            Gradients scratch;
            return rnn_loss_and_grad(q, batch, scratch);
          },
          coords_per_draw, coord_rng);
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("a zero sequence weight reduces the joint step to plain TransE") {
  KnowledgeGraph kg = fd_world();
  TrainConfig cfg;
  cfg.d = 8;
  cfg.lr = 0.05;
  cfg.negatives = 2;
  cfg.alpha = 0.0;

  Rng init_a(derive_seed(5, 0));
  ModelParams a = ModelParams::init(ModelKind::EklSkip, kg, cfg, init_a);
  const Mat event_out_before = a.event_out;
  Rng init_b(derive_seed(5, 0));
  ModelParams b = ModelParams::init(ModelKind::TransE, kg, cfg, init_b);
  REQUIRE(same_bits(a.entity_emb, b.entity_emb));
  REQUIRE(same_bits(a.relation_emb, b.relation_emb));

  std::vector<Triple> batch(kg.triples().begin(), kg.triples().begin() + 5);
  std::vector<SkipgramPair> pairs = {{ev(kg, 1), ev(kg, 2)}, {ev(kg, 4), ev(kg, 3)}};

  Rng step_a(99);
  LossBreakdown la = joint_step(a, cfg, batch, SeqBatch{pairs, {}}, step_a);
  Rng step_b(99);
  LossBreakdown lb = joint_step(b, cfg, batch, SeqBatch{}, step_b);

  CHECK(same_bits(a.entity_emb, b.entity_emb));
  CHECK(same_bits(a.relation_emb, b.relation_emb));
  CHECK(same_bits(a.event_out, event_out_before));  // sequence side fully skipped
  CHECK(la.kg_loss == lb.kg_loss);
  CHECK(la.seq_loss == 0.0);
  CHECK(la.joint == la.kg_loss);
}

TEST_CASE("joint loss is the kg loss plus alpha times the sequence loss") {
  KnowledgeGraph kg = fd_world();
  TrainConfig cfg;
  cfg.d = 6;
  cfg.alpha = 0.5;
  cfg.negatives = 2;
  Rng init_rng(derive_seed(21, 0));
  ModelParams p = ModelParams::init(ModelKind::EklSkip, kg, cfg, init_rng);
  std::vector<Triple> batch(kg.triples().begin(), kg.triples().begin() + 4);
  std::vector<SkipgramPair> pairs = {{ev(kg, 1), ev(kg, 2)}, {ev(kg, 3), ev(kg, 6)}};
  Rng rng(7);
  LossBreakdown l = joint_step(p, cfg, batch, SeqBatch{pairs, {}}, rng);
  CHECK(l.seq_loss > 0.0);
  CHECK(l.joint == l.kg_loss + cfg.alpha * l.seq_loss);
}

TEST_CASE("entity rows keep unit norm through joint updates") {
  KnowledgeGraph kg = fd_world();
  TrainConfig cfg;
  cfg.d = 6;
  cfg.alpha = 1.0;
  cfg.negatives = 3;
  cfg.lr = 0.1;
  Rng init_rng(derive_seed(23, 0));
  ModelParams p = ModelParams::init(ModelKind::EklSkip, kg, cfg, init_rng);
  std::vector<Triple> batch(kg.triples().begin(), kg.triples().end());
  std::vector<SkipgramPair> pairs = {{ev(kg, 1), ev(kg, 2)}, {ev(kg, 2), ev(kg, 3)},
                                     {ev(kg, 5), ev(kg, 8)}};
  Rng rng(55);
  for (int step = 0; step < 20; ++step) joint_step(p, cfg, batch, SeqBatch{pairs, {}}, rng);
  for (Eigen::Index r = 0; r < p.entity_emb.rows(); ++r)
    CHECK(std::fabs(p.entity_emb.row(r).norm() - 1.0) < 1e-9);
}

TEST_CASE("sequence gradients reach entities the kg objective never touches") {
  // x9 appears in no triple; only the skipgram pairs mention it
  KnowledgeGraph kg = fd_world();
  EntityId x9 = kg.add_entity("x9", EntityClass::Event);
  TrainConfig cfg;
  cfg.d = 5;
  Rng init_rng(derive_seed(29, 0));
  ModelParams p = ModelParams::init(ModelKind::EklSkip, kg, cfg, init_rng);

  std::vector<SkipgramPair> pairs = {{x9, ev(kg, 1)}, {ev(kg, 2), x9}};
  std::vector<std::uint32_t> negs(pairs.size() * 2, 0);
  Gradients g;
  skipgram_loss_and_grad(p, pairs, negs, 2, g);
  REQUIRE(g.entity.count(x9.value) == 1);
  CHECK(g.entity.at(x9.value).norm() > 0.0);
}

TEST_CASE("the joint step rejects empty batches") {
  KnowledgeGraph kg = fd_world();
  TrainConfig cfg;
  cfg.d = 4;
  Rng init_rng(derive_seed(33, 0));
  ModelParams p = ModelParams::init(ModelKind::EklSkip, kg, cfg, init_rng);
  Rng rng(1);
  CHECK_THROWS_AS(joint_step(p, cfg, {}, SeqBatch{}, rng), TrainError);
  std::vector<Triple> batch(kg.triples().begin(), kg.triples().begin() + 2);
  CHECK_THROWS_AS(joint_step(p, cfg, batch, SeqBatch{}, rng), TrainError);  // alpha=1, no pairs
}

TEST_CASE("config validation names the offending field") {
  TrainConfig cfg;
  cfg.epochs = 101;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("epochs"), TrainError);
  cfg = TrainConfig{};
  cfg.d = 0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("d "), TrainError);
  cfg = TrainConfig{};
  cfg.alpha = -0.5;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("alpha"), TrainError);
  cfg = TrainConfig{};
  cfg.max_seq_len = 1;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("max_seq_len"), TrainError);
}

TEST_CASE("train config round-trips through json") {
  TrainConfig cfg;
  cfg.d = 17;
  cfg.alpha = 0.25;
  cfg.norm = Norm::L2;
  cfg.rnn_hidden = 9;
  cfg.seed = 123456789;
  TrainConfig back = TrainConfig::from_json(cfg.to_json());
  CHECK(back.d == cfg.d);
  CHECK(back.alpha == cfg.alpha);
  CHECK(back.norm == cfg.norm);
  CHECK(back.rnn_hidden == cfg.rnn_hidden);
  CHECK(back.seed == cfg.seed);
  CHECK(back.max_seq_len == cfg.max_seq_len);
}

TEST_CASE("model kinds and norms parse their canonical names") {
  CHECK(parse_model_kind("transe") == ModelKind::TransE);
  CHECK(parse_model_kind("ekl-skip") == ModelKind::EklSkip);
  CHECK(parse_model_kind("ekl-concat") == ModelKind::EklConcat);
  CHECK(parse_model_kind("ekl-rnn") == ModelKind::EklRnn);
  CHECK(!parse_model_kind("bert").has_value());
  CHECK(parse_norm("L1") == Norm::L1);
  CHECK(parse_norm("l2") == Norm::L2);
  CHECK(!parse_norm("L3").has_value());
  CHECK(std::string(to_string(ModelKind::EklSkip)) == "ekl-skip");
  CHECK(std::string(to_string(Norm::L1)) == "L1");
}
