#include <cmath>
#include <memory>

#include "doctest.h"
#include "fd_oracle.hpp"
#include "let/autodiff/gradcheck.hpp"
#include "let/error.hpp"
#include "let/model/let_model.hpp"
#include "scalar_oracle.hpp"

using namespace let;
using namespace let::model;
using lattice::decode_utf8;
using let::testing::Mat;
using let::testing::ScalarNet;
using let::testing::Vec;

namespace {

std::shared_ptr<knowledge::KnowledgeBase> toy_kb(std::size_t sem_dim) {
  auto kb = std::make_shared<knowledge::KnowledgeBase>();
  kb->add_sense("ab", {"ab.1", {"s1", "s2"}});
  kb->add_sense("ab", {"ab.2", {"s3"}});
  kb->add_sense("bc", {"bc.1", {"s2", "s4", "s5"}});
  kb->add_sense("c", {"c.1", {"s5"}});
  Rng rng(99);
  for (const auto& id : kb->sememe_ids()) {
    std::vector<double> v(sem_dim);
    for (auto& x : v) x = uniform(rng, -1.0, 1.0);
    kb->set_embedding(id, v);
  }
  return kb;
}

ModelConfig small_config(std::size_t d, std::size_t layers, std::size_t perspectives) {
  ModelConfig c;
  c.dim = d;
  c.sagt_layers = layers;
  c.perspectives = perspectives;
  c.dropout = 0.0;
  c.encoder.layers = 1;
  c.encoder.heads = d % 4 == 0 ? 4 : 1;
  c.encoder.ffn_dim = 2 * d;
  c.encoder.max_len = 64;
  return c;
}

std::vector<Segmenter> segmenters(const std::vector<std::string>& words) {
  auto dict = std::make_shared<lattice::Dictionary>(words);
  return {{lattice::Strategy::ForwardMaxMatch, dict},
          {lattice::Strategy::BackwardMaxMatch, dict},
          {lattice::Strategy::ForwardMaxMatch, std::make_shared<lattice::Dictionary>()}};
}

const encoder::CharVocab& vocab() {
  static const auto v = encoder::CharVocab::build({decode_utf8("abcdxyz")});
  return v;
}

Vec row(const Tensor& t, std::size_t i) { return t.row_values(i); }

bool same_values(const Tensor& x, const Tensor& y) {
  if (x.shape() != y.shape()) return false;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    if (x.data()[i] != y.data()[i]) return false;
  }
  return true;
}

double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("prepare resolves senses per lattice node") {
  auto kb = toy_kb(3);
  LetModel m(small_config(8, 1, 2), vocab().size(), kb, 1);
  auto s = m.prepare(decode_utf8("abcd"), segmenters({"ab", "bc", "cd"}));
  std::size_t with_senses = 0;
  for (const auto& node : s.lattice.nodes()) {
    const auto word = lattice::encode_utf8(node.surface);
    CHECK(s.node_senses[node.id].size() == kb->lookup(word).size());
    if (!s.node_senses[node.id].empty()) ++with_senses;
  }
  CHECK(with_senses >= 2);
  CHECK(s.sense_count() > 0);

  auto cfg = small_config(8, 1, 2);
  cfg.max_senses = 1;
  LetModel capped(cfg, vocab().size(), kb, 1);
  auto sc = capped.prepare(decode_utf8("abcd"), segmenters({"ab", "bc", "cd"}));
  for (const auto& senses : sc.node_senses) CHECK(senses.size() <= 1);

  cfg.use_sense = false;
  LetModel off(cfg, vocab().size(), kb, 1);
  CHECK(off.prepare(decode_utf8("abcd"), segmenters({"ab"})).sense_count() == 0);
}

TEST_CASE("word representations pool their characters") {
  LetModel m(small_config(8, 1, 2), vocab().size(), nullptr, 3);
  nn::Context ctx;
  auto s = m.prepare(decode_utf8("abcd"), segmenters({"abc", "cd"}));
  Rng rng(4);
  auto chars = let::testing::random_tensor(rng, 4, 8, -1, 1, false);
  auto words = m.init_word_reps(s.lattice, chars, ctx);
  REQUIRE(words.rows() == s.lattice.size());
  for (const auto& node : s.lattice.nodes()) {
    if (node.length() == 1) {
      CHECK(row(words, node.id) == row(chars, node.start - 1));
      continue;
    }
    for (std::size_t f = 0; f < 8; ++f) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t t = node.start; t <= node.end; ++t) {
        lo = std::min(lo, chars.at(t - 1, f));
        hi = std::max(hi, chars.at(t - 1, f));
      }
      CHECK(words.at(node.id, f) >= lo - 1e-12);
      CHECK(words.at(node.id, f) <= hi + 1e-12);
    }
  }
}

TEST_CASE("sense representations") {
  auto kb = toy_kb(3);
  nn::Context ctx;

  SUBCASE("a single sememe passes through projection and the value map") {
    LetModel m(small_config(8, 1, 2), vocab().size(), kb, 5);
    ScalarNet net(m.params());
    const auto row_s5 = m.sememe_rows().at("s5");
    auto s = m.init_sense_reps({{row_s5}}, ctx);
    auto proj = net.linear("knowledge/proj", kb->embeddings().at("s5"));
    auto expected = let::testing::vecmat(proj, let::testing::to_mat(m.params().get("sense/gat/w")));
    for (auto& v : expected) v = std::max(0.0, v);
    CHECK(max_abs_diff(row(s, 0), expected) < 1e-13);
  }

  SUBCASE("sememe order does not matter") {
    LetModel m(small_config(8, 1, 2), vocab().size(), kb, 5);
    const auto& r = m.sememe_rows();
    auto s = m.init_sense_reps({{r.at("s2"), r.at("s4"), r.at("s5")},
                                {r.at("s5"), r.at("s2"), r.at("s4")}}, ctx);
    CHECK(max_abs_diff(row(s, 0), row(s, 1)) < 1e-14);
  }

  SUBCASE("two sememes at d=2 follow the straight-line evaluation") {
    LetModel m(small_config(2, 1, 1), vocab().size(), kb, 6);
    ScalarNet net(m.params());
    const auto& r = m.sememe_rows();
    auto s = m.init_sense_reps({{r.at("s1"), r.at("s2")}}, ctx);
    const Mat proj{net.linear("knowledge/proj", kb->embeddings().at("s1")),
                   net.linear("knowledge/proj", kb->embeddings().at("s2"))};
    const Mat ctxed{net.md_gat("sense/gat", proj[0], proj),
                    net.md_gat("sense/gat", proj[1], proj)};
    CHECK(max_abs_diff(row(s, 0), net.pool("sense/pool", ctxed)) < 1e-13);
  }
}

TEST_CASE("words without senses are never touched by SaGT layers") {
  auto kb = toy_kb(4);
  LetModel m(small_config(8, 3, 2), vocab().size(), kb, 7);
  nn::Context ctx;
  auto s = m.prepare(decode_utf8("abcdx"), segmenters({"ab", "bc", "cd"}));
  Rng rng(8);
  auto chars = let::testing::random_tensor(rng, 5, 8, -1, 1, false);
  SagtTrace trace;
  m.run_sagt(s, chars, ctx, &trace);
  REQUIRE(trace.states.size() == 4);
  bool some_updated = false;
  for (std::size_t i = 0; i < s.lattice.size(); ++i) {
    const auto initial = row(trace.states[0].words, i);
    for (std::size_t l = 1; l < trace.states.size(); ++l) {
      if (s.node_senses[i].empty()) {
        CHECK(row(trace.states[l].words, i) == initial);
      } else if (row(trace.states[l].words, i) != initial) {
        some_updated = true;
      }
    }
  }
  CHECK(some_updated);
}

TEST_CASE("word update reads senses already refreshed in the same layer") {
  auto kb = toy_kb(4);
  LetModel m(small_config(8, 2, 2), vocab().size(), kb, 9);
  nn::Context ctx;
  auto s = m.prepare(decode_utf8("abc"), segmenters({"ab", "bc"}));
  Rng rng(10);
  auto chars = let::testing::random_tensor(rng, 3, 8, -1, 1, false);
  SagtTrace trace;
  m.run_sagt(s, chars, ctx, &trace);
  REQUIRE(trace.senses_seen_by_word_update.size() == 2);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(same_values(trace.senses_seen_by_word_update[l], trace.states[l + 1].senses));
    CHECK_FALSE(same_values(trace.senses_seen_by_word_update[l], trace.states[l].senses));
  }
}

TEST_CASE("tiny lattice SaGT matches a straight-line evaluation") {
  // Text "ab" segmented as [ab] and [a][b]: nodes a, ab, b with one sense each.
  auto kb = std::make_shared<knowledge::KnowledgeBase>();
  kb->add_sense("a", {"a.1", {"p"}});
  kb->add_sense("ab", {"ab.1", {"q", "r"}});
  kb->add_sense("b", {"b.1", {"r"}});
  kb->set_embedding("p", {0.3, -0.8, 0.5});
  kb->set_embedding("q", {-0.6, 0.2, 0.9});
  kb->set_embedding("r", {0.7, 0.4, -0.1});
  LetModel m(small_config(2, 2, 1), vocab().size(), kb, 11);
  ScalarNet net(m.params());
  nn::Context ctx;
  auto s = m.prepare(decode_utf8("ab"), segmenters({"ab"}));
  REQUIRE(s.lattice.size() == 3);
  const auto chars = Tensor::matrix(2, 2, {0.4, -1.1, 0.9, 0.2});
  SagtTrace trace;
  auto final_state = m.run_sagt(s, chars, ctx, &trace);

  // Node order is by span: a [1,1], ab [1,2], b [2,2].
  const std::vector<std::vector<std::size_t>> fw{{0, 2}, {1}, {2}};
  const std::vector<std::vector<std::size_t>> bw{{0}, {1}, {0, 2}};
  Mat h = let::testing::to_mat(trace.states[0].words);
  Mat g = let::testing::to_mat(trace.states[0].senses);
  for (std::size_t l = 0; l < 2; ++l) {
    const auto p = "sagt/" + std::to_string(l);
    Mat g_next(3), h_next(3);
    for (std::size_t i = 0; i < 3; ++i) {
      Mat nf, nb;
      for (auto j : fw[i]) nf.push_back(h[j]);
      for (auto j : bw[i]) nb.push_back(h[j]);
      auto msg = net.md_gat(p + "/sense_fw", g[i], nf);
      const auto back = net.md_gat(p + "/sense_bw", g[i], nb);
      msg.insert(msg.end(), back.begin(), back.end());
      g_next[i] = net.gru(p + "/sense_gru", g[i], msg);
    }
    for (std::size_t i = 0; i < 3; ++i) {
      const auto q = net.md_gat(p + "/word_gat", h[i], {g_next[i]});
      h_next[i] = net.residual_norm(p + "/word_norm", h[i], net.gru(p + "/word_gru", h[i], q));
    }
    h = h_next;
    g = g_next;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(max_abs_diff(row(final_state.words, i), h[i]) < 1e-12);
    CHECK(max_abs_diff(row(final_state.senses, i), g[i]) < 1e-12);
  }
}

TEST_CASE("character fusion") {
  LetModel m(small_config(8, 1, 2), vocab().size(), nullptr, 12);
  ScalarNet net(m.params());
  nn::Context ctx;
  auto s = m.prepare(decode_utf8("abcd"), {{lattice::Strategy::ForwardMaxMatch,
                                            std::make_shared<lattice::Dictionary>(
                                                std::vector<std::string>{"ab"})}});
  Rng rng(13);
  auto chars = let::testing::random_tensor(rng, 4, 8, -1, 1, false);
  auto words = let::testing::random_tensor(rng, s.lattice.size(), 8, -1, 1, false);
  auto y = m.fuse_chars(words, s.lattice, chars, ctx);
  REQUIRE(y.shape() == ad::Shape{4, 8});
  // Every character is in exactly one word of a single segmentation.
  for (std::size_t t = 1; t <= 4; ++t) {
    REQUIRE(s.lattice.covering(t).size() == 1);
    const auto w = row(words, s.lattice.covering(t)[0]);
    CHECK(max_abs_diff(row(y, t - 1), net.residual_norm("fuse/norm", row(chars, t - 1), w)) <
          1e-12);
  }

  auto multi = m.prepare(decode_utf8("abcd"), segmenters({"ab", "bc", "abc"}));
  for (std::size_t t = 1; t <= 4; ++t) {
    std::vector<std::size_t> brute;
    for (const auto& node : multi.lattice.nodes()) {
      if (node.start <= t && t <= node.end) brute.push_back(node.id);
    }
    CHECK(multi.lattice.covering(t) == brute);
  }
}

TEST_CASE("matching layer") {
  nn::Context ctx;
  Rng rng(14);

  SUBCASE("identical sentences give unit distances in every perspective") {
    LetModel m(small_config(32, 1, 5), vocab().size(), nullptr, 15);
    for (int trial = 0; trial < 10; ++trial) {
      auto y = let::testing::random_tensor(rng, 1 + rng() % 6, 32, -1, 1, false);
      auto out = m.match_sentences(y, y, ctx);
      for (double v : out.dist_a.data()) CHECK(std::fabs(v - 1.0) < 1e-9);
      for (double v : out.dist_b.data()) CHECK(std::fabs(v - 1.0) < 1e-9);
    }
  }

  SUBCASE("one all-ones perspective is the plain cosine") {
    LetModel m(small_config(8, 1, 1), vocab().size(), nullptr, 16);
    auto w = m.params().get("match/w_cos");
    for (auto& v : w.mutable_data()) v = 1.0;
    auto x = let::testing::random_tensor(rng, 3, 8, -1, 1, false);
    auto z = let::testing::random_tensor(rng, 3, 8, -1, 1, false);
    auto d = m.perspective_distances(x, z);
    for (std::size_t t = 0; t < 3; ++t) {
      double dot = 0, nx = 0, nz = 0;
      for (std::size_t f = 0; f < 8; ++f) {
        dot += x.at(t, f) * z.at(t, f);
        nx += x.at(t, f) * x.at(t, f);
        nz += z.at(t, f) * z.at(t, f);
      }
      CHECK(d.at(t, 0) == doctest::Approx(dot / std::sqrt(nx * nz)).epsilon(1e-13));
    }
  }

  SUBCASE("distances stay in [-1, 1]") {
    LetModel m(small_config(8, 1, 4), vocab().size(), nullptr, 17);
    for (int trial = 0; trial < 20; ++trial) {
      auto a = let::testing::random_tensor(rng, 1 + rng() % 5, 8, -2, 2, false);
      auto b = let::testing::random_tensor(rng, 1 + rng() % 5, 8, -2, 2, false);
      auto out = m.match_sentences(a, b, ctx);
      CHECK(out.dist_a.shape() == ad::Shape{a.rows(), 4});
      CHECK(out.sentence_a.shape() == ad::Shape{1, 8});
      for (double v : out.dist_a.data()) CHECK(std::fabs(v) <= 1.0 + 1e-12);
      for (double v : out.dist_b.data()) CHECK(std::fabs(v) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("classifier output is a probability") {
  LetModel m(small_config(8, 1, 2), vocab().size(), nullptr, 18);
  nn::Context ctx;
  auto zero = Tensor::zeros({1, 8});
  auto p = m.classify(zero, zero, zero, ctx);
  const double bias = m.params().get("classifier/out/b").item();
  CHECK(p.item() == doctest::Approx(1.0 / (1.0 + std::exp(-bias))));
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    auto c = let::testing::random_tensor(rng, 1, 8, -5, 5, false);
    auto a = let::testing::random_tensor(rng, 1, 8, -5, 5, false);
    auto b = let::testing::random_tensor(rng, 1, 8, -5, 5, false);
    const double v = m.classify(c, a, b, ctx).item();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("binary cross-entropy") {
  CHECK(bce_loss(Tensor::scalar(0.5), {1}).item() == doctest::Approx(std::log(2.0)));
  CHECK(bce_loss(Tensor::matrix(2, 1, {1.0, 0.0}), {1, 0}).item() < 1e-6);
  CHECK(std::isfinite(bce_loss(Tensor::matrix(2, 1, {0.0, 1.0}), {1, 0}).item()));
  CHECK_THROWS_AS(bce_loss(Tensor::scalar(0.5), {1, 0}), ShapeError);
  CHECK_THROWS_AS(bce_loss(Tensor::scalar(0.5), {2}), Error);

  auto p = Tensor({3, 1}, {0.2, 0.7, 0.45}, true);
  const std::vector<int> y{1, 0, 1};
  auto loss = bce_loss(p, y);
  loss.backward();
  for (std::size_t i = 0; i < 3; ++i) {
    const double pi = p.data()[i];
    CHECK(p.grad()[i] == doctest::Approx((pi - y[i]) / (pi * (1 - pi))).epsilon(1e-12));
  }
  CHECK(let::testing::max_fd_error([&] { return bce_loss(p, y); }, {p}) < 1e-7);
}

TEST_CASE("end-to-end gradients on a two-pair batch") {
  auto kb = toy_kb(4);
  LetModel m(small_config(8, 2, 3), vocab().size(), kb, 20);
  const auto seg = segmenters({"ab", "bc", "cd"});
  const std::vector<PairInput> batch{
      {m.prepare(decode_utf8("abcd"), seg), m.prepare(decode_utf8("bcx"), seg)},
      {m.prepare(decode_utf8("cab"), seg), m.prepare(decode_utf8("abc"), seg)}};
  const std::vector<int> labels{1, 0};
  nn::Context ctx;
  auto loss_fn = [&] {
    std::vector<Tensor> probs;
    for (const auto& pair : batch) probs.push_back(m.forward(pair, vocab(), ctx));
    return bce_loss(ad::concat(probs, 0), labels);
  };
  auto result = ad::gradient_check(loss_fn, m.params(), 400, 21);
  INFO("worst " << result.worst_path << "[" << result.worst_index << "] analytic "
                << result.worst_analytic << " numeric " << result.worst_numeric);
  CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("without senses, SaGT layers have no effect") {
  const auto seg = segmenters({"ab", "bc"});
  auto run = [&](ModelConfig cfg, std::shared_ptr<const knowledge::KnowledgeBase> kb) {
    LetModel m(cfg, vocab().size(), kb, 23);
    PairInput pair{m.prepare(decode_utf8("abcd"), seg), m.prepare(decode_utf8("bcx"), seg)};
    nn::Context ctx;
    return m.forward(pair, vocab(), ctx).item();
  };
  const double empty_kb = run(small_config(8, 2, 3), std::make_shared<knowledge::KnowledgeBase>());
  const double no_kb = run(small_config(8, 2, 3), nullptr);
  auto cfg = small_config(8, 2, 3);
  cfg.use_sense = false;
  const double sense_off = run(cfg, toy_kb(4));
  const double no_layers = run(small_config(8, 0, 3), nullptr);
  CHECK(empty_kb == no_layers);
  CHECK(no_kb == no_layers);
  CHECK(sense_off == no_layers);
  CHECK(run(small_config(8, 2, 3), toy_kb(4)) != no_layers);
}

TEST_CASE("layer count, perspectives and the GRU ablation are pure config") {
  auto kb = toy_kb(4);
  const auto seg = segmenters({"ab", "bc"});
  for (std::size_t layers : {0, 1, 3}) {
    for (std::size_t p : {1, 4}) {
      for (bool gru : {true, false}) {
        auto cfg = small_config(8, layers, p);
        cfg.use_gru = gru;
        LetModel m(cfg, vocab().size(), kb, 24);
        PairInput pair{m.prepare(decode_utf8("abc"), seg), m.prepare(decode_utf8("c"), seg)};
        nn::Context ctx;
        const double v = m.forward(pair, vocab(), ctx).item();
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
    }
  }
  CHECK_THROWS_AS(LetModel(small_config(8, 1, 0), vocab().size(), kb, 1), Error);
}

TEST_CASE("trainable flag and random sememe tables") {
  auto kb = toy_kb(4);
  auto cfg = small_config(8, 1, 2);
  cfg.train_sememe_embeddings = false;
  LetModel frozen(cfg, vocab().size(), kb, 1);
  CHECK_FALSE(frozen.params().get("knowledge/sememe_emb").requires_grad());
  CHECK(frozen.params().get("knowledge/sememe_emb").shape() == ad::Shape{5, 4});

  auto bare = std::make_shared<knowledge::KnowledgeBase>();
  bare->add_sense("ab", {"ab.1", {"s1"}});
  cfg.sememe_dim = 6;
  LetModel random_init(cfg, vocab().size(), bare, 1);
  CHECK(random_init.params().get("knowledge/sememe_emb").requires_grad());
  CHECK(random_init.params().get("knowledge/sememe_emb").shape() == ad::Shape{1, 6});
}
