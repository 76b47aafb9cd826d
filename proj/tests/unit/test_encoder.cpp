#include "doctest.h"

#include "cfcdc/cfcd/cfcd.hpp"
#include "cfcdc/encoder/encoder.hpp"
#include "cfcdc/error.hpp"
#include "cfcdc/nn/gradcheck.hpp"
#include "cfcdc/nn/layers.hpp"

using namespace cfcdc;
using namespace cfcdc::nn;
using encoder::Encoder;
using encoder::EncoderConfig;

namespace {

EncoderConfig small(double dropout) {
  EncoderConfig c;
  c.n_layers = 2;
  c.hidden_dim = 8;
  c.n_heads = 2;
  c.ffn_dim = 12;
  c.dropout_rate = dropout;
  c.max_seq_len = 16;
  c.vocab_size = 20;
  return c;
}

data::TokenizedInput input(std::vector<int> ids, int question_start) {
  data::TokenizedInput t;
  t.token_ids = std::move(ids);
  t.question_start = question_start;
  t.segment_mask.assign(t.token_ids.size(), 0);
  t.match_mask.assign(t.token_ids.size(), 0);
  for (std::size_t i = static_cast<std::size_t>(question_start); i + 1 < t.token_ids.size(); ++i) {
    t.segment_mask[i] = 1;
    t.question_spans.emplace_back(i, i + 1);
  }
  if (t.token_ids.size() > 2) t.match_mask[1] = 1;
  return t;
}

const auto kTokens = input({2, 7, 9, 3, 11, 12, 13, 5, 3}, 4);

Matrix pooled(const Encoder& e, const data::TokenizedInput& t, Rng* r) {
  Graph g;
  return e.encode(g, t, r).pooled.value();
}

}  // namespace

TEST_CASE("config validation") {
  auto c = small(0.2);
  CHECK_NOTHROW(c.validate());
  c.n_heads = 3;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = small(1.0);
  CHECK_THROWS_AS(c.validate(), InputError);
  c = small(0.2);
  c.vocab_size = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
  CHECK(encoder::encoder_config_from_json(encoder::to_json(small(0.3))).dropout_rate == 0.3);
}

TEST_CASE("shapes, pooling and masks") {
  ParameterStore s;
  Rng init(1);
  Encoder e(s, "enc", small(0.2), init);
  Graph g;
  const auto out = e.encode(g, kTokens, nullptr);
  CHECK(out.hidden.rows() == 9);
  CHECK(out.hidden.cols() == 8);
  CHECK(out.segment_mask.rows() == 9);
  CHECK(out.segment_mask.sum() == 4.0);
  CHECK(out.pooled.value() == out.hidden.value().row(0));
}

TEST_CASE("eval mode is deterministic; zero dropout equals eval") {
  ParameterStore s;
  Rng init(2);
  Encoder e(s, "enc", small(0.2), init);
  CHECK(pooled(e, kTokens, nullptr) == pooled(e, kTokens, nullptr));

  ParameterStore s0;
  Rng init0(2);
  Encoder e0(s0, "enc", small(0.0), init0);
  Rng r(9);
  CHECK(pooled(e0, kTokens, &r) == pooled(e0, kTokens, nullptr));
}

TEST_CASE("dropout realizations differ with different states") {
  ParameterStore s;
  Rng init(3);
  Encoder e(s, "enc", small(0.2), init);
  Rng a(1), b(2), a2(1);
  const Matrix pa = pooled(e, kTokens, &a);
  CHECK_FALSE(pa == pooled(e, kTokens, &b));
  CHECK(pa == pooled(e, kTokens, &a2));
}

TEST_CASE("encode_twice") {
  ParameterStore s;
  Rng init(4);
  Encoder e(s, "enc", small(0.2), init);
  {
    Graph g;
    Rng a(5), b(5);
    auto [x, y] = e.encode_twice(g, kTokens, a, b);
    CHECK(x.pooled.value() == y.pooled.value());
  }
  ParameterStore s0;
  Rng init0(4);
  Encoder e0(s0, "enc", small(0.0), init0);
  {
    Graph g;
    Rng a(5), b(6);
    auto [x, y] = e0.encode_twice(g, kTokens, a, b);
    CHECK(x.hidden.value() == y.hidden.value());
  }
}

TEST_CASE("two dropout passes give a positive head KL under the default config") {
  auto cfg = EncoderConfig{};
  cfg.vocab_size = 20;
  ParameterStore s;
  Rng init(6);
  Encoder e(s, "enc", cfg, init);
  Linear head(s, "head", cfg.hidden_dim, 4, init);
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    Graph g;
    Rng a(100 + i), b(200 + i);
    auto [x, y] = e.encode_twice(g, kTokens, a, b);
    const Matrix p = softmax_rows(head(x.pooled)).value();
    const Matrix q = softmax_rows(head(y.pooled)).value();
    total += cfcd::kl_sym(p, q);
  }
  CHECK(total > 0.0);
}

TEST_CASE("bad token ids and lengths are input errors") {
  ParameterStore s;
  Rng init(7);
  Encoder e(s, "enc", small(0.2), init);
  Graph g;
  CHECK_THROWS_AS(e.encode(g, input({2, 20, 3}, 2), nullptr), InputError);
  CHECK_THROWS_AS(e.encode(g, input({2, -1, 3}, 2), nullptr), InputError);
  CHECK_THROWS_AS(e.encode(g, input(std::vector<int>(17, 4), 2), nullptr), InputError);
}

TEST_CASE("gradient check of sum(pooled) on a 2-token input") {
  ParameterStore s;
  Rng init(8);
  Encoder e(s, "enc", small(0.2), init);
  // At init the output norm has unit gain and zero bias, which makes sum(pooled) constant.
  Rng jitter(9);
  for (auto* p : s.parameters()) p->value() += gaussian(p->value().rows(), p->value().cols(), 0.3, jitter);
  const auto t = input({2, 6}, 1);
  const auto probes = gradient_check([&](Graph& g) { return sum_all(e.encode(g, t, nullptr).pooled); },
                                     s.parameters(), 40, 17);
  CHECK(probes.size() == 40);
  for (const auto& p : probes) {
    INFO(p.param->name() << "[" << p.index << "] a=" << p.analytic << " n=" << p.numeric);
    CHECK(p.rel_error < 1e-4);
  }
}
