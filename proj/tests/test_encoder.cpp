#include <cmath>

#include "doctest.h"
#include "fd_oracle.hpp"
#include "let/encoder/char_encoder.hpp"
#include "let/error.hpp"

using namespace let;
using namespace let::encoder;
using lattice::decode_utf8;

namespace {

struct Fixture {
  ad::ParamStore store{5};
  CharVocab vocab = CharVocab::build({decode_utf8("今天天气很好"), decode_utf8("明天下雨")});
  EncoderConfig config{8, 2, 4, 0, 32};
  CharEncoder encoder{store, "encoder", vocab.size(), config};
};

bool same_values(const ad::Tensor& x, const ad::Tensor& y) {
  if (x.shape() != y.shape()) return false;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    if (x.data()[i] != y.data()[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("vocabulary layout and round trip") {
  auto vocab = CharVocab::build({decode_utf8("bca"), decode_utf8("ab")});
  CHECK(vocab.size() == 7);
  CHECK(vocab.id(U'a') == 4);
  CHECK(vocab.id(U'c') == 6);
  CHECK(vocab.id(U'z') == CharVocab::kUnk);
  vocab.save("vocab_test.tsv");
  CHECK(CharVocab::load("vocab_test.tsv") == vocab);
}

TEST_CASE("encode_pair shapes, determinism and overlength") {
  Fixture f;
  nn::Context ctx;
  auto a = decode_utf8("今天"), b = decode_utf8("明天下雨");
  auto e1 = f.encoder.encode(a, b, f.vocab, ctx);
  CHECK(e1.cls.shape() == ad::Shape{1, 8});
  CHECK(e1.reps_a.shape() == ad::Shape{2, 8});
  CHECK(e1.reps_b.shape() == ad::Shape{4, 8});
  auto e2 = f.encoder.encode(a, b, f.vocab, ctx);
  CHECK(same_values(e1.cls, e2.cls));
  CHECK(same_values(e1.reps_a, e2.reps_a));
  CHECK(same_values(e1.reps_b, e2.reps_b));

  auto single = f.encoder.encode(decode_utf8("今"), decode_utf8("明"), f.vocab, ctx);
  CHECK(single.reps_a.shape() == ad::Shape{1, 8});
  CHECK(single.reps_b.shape() == ad::Shape{1, 8});

  const lattice::CharSeq long_a(20, U'天'), long_b(10, U'天');
  try {
    f.encoder.encode(long_a, long_b, f.vocab, ctx);
    FAIL("expected overlength error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("20") != std::string::npos);
    CHECK(msg.find("10") != std::string::npos);
  }
}

TEST_CASE("swapping the sentences changes the CLS vector") {
  Fixture f;
  nn::Context ctx;
  auto a = decode_utf8("今天"), b = decode_utf8("下雨");
  auto ab = f.encoder.encode(a, b, f.vocab, ctx);
  auto ba = f.encoder.encode(b, a, f.vocab, ctx);
  double diff = 0.0;
  for (std::size_t i = 0; i < 8; ++i) diff += std::fabs(ab.cls.data()[i] - ba.cls.data()[i]);
  CHECK(diff > 1e-6);
}

TEST_CASE("attention rows sum to one and ignore padding") {
  Fixture f;
  nn::Context ctx;
  auto a = decode_utf8("今天"), b = decode_utf8("下雨");
  const std::size_t used = a.size() + b.size() + 3;
  auto padded = f.encoder.encode(a, b, f.vocab, ctx, 12, true);
  REQUIRE(padded.attention.size() == f.config.layers * f.config.heads);
  for (const auto& w : padded.attention) {
    REQUIRE(w.shape() == ad::Shape{12, 12});
    for (std::size_t i = 0; i < 12; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < 12; ++j) {
        if (j >= used) CHECK(w.at(i, j) == 0.0);
        total += w.at(i, j);
      }
      CHECK(std::fabs(total - 1.0) < 1e-12);
    }
  }
  auto plain = f.encoder.encode(a, b, f.vocab, ctx);
  for (std::size_t i = 0; i < plain.reps_a.numel(); ++i) {
    CHECK(padded.reps_a.data()[i] == doctest::Approx(plain.reps_a.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("gradients reach char and position embeddings of used slots") {
  Fixture f;
  nn::Context ctx;
  auto enc = f.encoder.encode(decode_utf8("今天"), decode_utf8("下雨"), f.vocab, ctx);
  auto loss = ad::sum_all(ad::mul(enc.reps_a, enc.reps_a));
  loss = ad::add(loss, ad::sum_all(enc.reps_b));
  f.store.zero_grad();
  loss.backward();
  auto row_norm = [](const std::vector<double>& g, std::size_t row, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += std::fabs(g[row * d + j]);
    return s;
  };
  const auto char_grad = f.store.get("encoder/char_emb").grad();
  const auto pos_grad = f.store.get("encoder/pos_emb").grad();
  CHECK(row_norm(char_grad, f.vocab.id(U'今'), 8) > 0.0);
  CHECK(row_norm(char_grad, f.vocab.id(U'雨'), 8) > 0.0);
  CHECK(row_norm(char_grad, f.vocab.id(U'明'), 8) == 0.0);  // unused char
  for (std::size_t p = 0; p < 7; ++p) CHECK(row_norm(pos_grad, p, 8) > 0.0);
  CHECK(row_norm(pos_grad, 7, 8) == 0.0);
}

TEST_CASE("encoder gradients match finite differences") {
  Fixture f;
  nn::Context ctx;
  std::vector<ad::Tensor> leaves;
  for (const auto& [path, t] : f.store.all()) {
    if (path.find("layer1") != std::string::npos) leaves.push_back(t);
  }
  leaves.push_back(f.store.get("encoder/seg_emb"));
  auto loss = [&] {
    auto e = f.encoder.encode(decode_utf8("今天"), decode_utf8("下雨"), f.vocab, ctx);
    return ad::add(let::testing::weighted_sum(e.reps_a, 1),
                   let::testing::weighted_sum(e.cls, 2));
  };
  // Some coordinates have gradients near 1e-6, so use a wider step to keep
  // round-off in the difference quotient below the tolerance.
  CHECK(let::testing::max_fd_error(loss, leaves, 1e-4) < 1e-5);
}

TEST_CASE("dropout only in training mode") {
  Fixture f;
  Rng rng(1);
  nn::Context train{true, 0.2, &rng};
  nn::Context eval;
  auto a = decode_utf8("今天"), b = decode_utf8("下雨");
  auto t = f.encoder.encode(a, b, f.vocab, train);
  auto e = f.encoder.encode(a, b, f.vocab, eval);
  CHECK_FALSE(same_values(t.cls, e.cls));
}
