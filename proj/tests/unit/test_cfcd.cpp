#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "doctest.h"

#include "cfcdc/cfcd/cfcd.hpp"
#include "cfcdc/cfcd/io.hpp"
#include "cfcdc/cfcd/train.hpp"
#include "cfcdc/data/synth.hpp"
#include "cfcdc/error.hpp"
#include "cfcdc/nn/checkpoint.hpp"
#include "cfcdc/nn/gradcheck.hpp"

using namespace cfcdc;
using namespace cfcdc::cfcd;
using nn::Matrix;
using nn::Rng;

namespace {

ModuleConfig tiny(ClauseRole role, int vocab, bool ifcd = true, double dropout = 0.1) {
  ModuleConfig m;
  m.role = role;
  m.encoder.n_layers = 1;
  m.encoder.hidden_dim = 8;
  m.encoder.n_heads = 2;
  m.encoder.ffn_dim = 8;
  m.encoder.dropout_rate = dropout;
  m.encoder.max_seq_len = 32;
  m.encoder.vocab_size = vocab;
  m.use_ifcd = ifcd;
  m.lstm_dim = 3;
  return m;
}

struct Fixture {
  data::SynthDataset ds = data::synth_dataset(21, 24, 4);
  data::Vocabulary vocab = data::build_vocabulary(ds.train, ds.tables);
  std::vector<data::PreparedExample> train = data::prepare_split(ds.train, ds.tables, vocab, 32);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

Matrix row(std::vector<double> v) {
  Matrix m(1, static_cast<nn::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<nn::Index>(i)) = v[i];
  return m;
}

Matrix random_simplex(Rng& r, int k) {
  Matrix m(1, k);
  for (int i = 0; i < k; ++i) m(0, i) = -std::log(1.0 - r.uniform());
  return m / m.sum();
}

}  // namespace

TEST_CASE("role helpers") {
  CHECK(max_num(ClauseRole::kSelect) == 1);
  CHECK(max_num(ClauseRole::kWhere) == 4);
  CHECK(role_from_name("sw") == ClauseRole::kSw);
  CHECK(std::string(role_name(ClauseRole::kWhere)) == "where");
  CHECK_THROWS_AS(role_from_name("from"), InputError);
}

TEST_CASE("labels per role") {
  data::NLExample ex;
  ex.question = "what is the total age when city is New York and rank is greater than 3";
  ex.label = {1, sql::AggOp::kSum, {{0, sql::CondOp::kEq, "New York"}, {2, sql::CondOp::kGt, "3"}}};
  std::vector<data::TokenizedInput> cands(4);
  for (int i = 0; i < 4; ++i) {
    cands[static_cast<std::size_t>(i)].column_index = i;
    cands[static_cast<std::size_t>(i)].question_spans.resize(16);
  }
  const auto sel = role_labels(ClauseRole::kSelect, ex, cands);
  CHECK(sel[1].relevant == 1);
  CHECK(sel[1].cls == 4);
  CHECK(sel[0].relevant == 0);
  CHECK(sel[0].cls == -1);
  const auto whr = role_labels(ClauseRole::kWhere, ex, cands);
  CHECK(whr[0].relevant == 1);
  CHECK(whr[0].num == 2);
  CHECK(whr[0].span_start == 8);
  CHECK(whr[0].span_end == 9);
  CHECK(whr[2].cls == 1);
  CHECK(whr[2].span_start == 15);
  CHECK(whr[3].relevant == 0);
  const auto sw = role_labels(ClauseRole::kSw, ex, cands);
  for (int i = 0; i < 4; ++i) {
    const bool in_union = i == 0 || i == 1 || i == 2;
    CHECK(sw[static_cast<std::size_t>(i)].relevant == (in_union ? 1 : 0));
    CHECK(sw[static_cast<std::size_t>(i)].num == 3);
  }
}

TEST_CASE("find_value_span") {
  CHECK(find_value_span("who is from Los Angeles ?", "los angeles", 10) == std::pair{3, 4});
  CHECK_FALSE(find_value_span("who is from Los Angeles ?", "los angeles", 4));
  CHECK_FALSE(find_value_span("nothing here", "x", 10));
  CHECK_FALSE(find_value_span("q", "", 10));
}

TEST_CASE("predict_num") {
  CHECK(predict_num({{0.3, row({0, 0, 1, 0, 0})}}) == 2);
  CHECK(predict_num({{0.9, row({0, 1, 0, 0, 0})}, {0.1, row({0, 0, 0, 1, 0})}}) == 1);
  CHECK(predict_num({{0.5, row({0.2, 0.2, 0.2, 0.2, 0.2})}, {0.8, row({0.2, 0.2, 0.2, 0.2, 0.2})}}) == 0);
  CHECK_THROWS_AS(predict_num({}), InputError);
  CHECK_THROWS_AS(predict_num({{0.5, row({0.5, 0.6})}}), InputError);

  Rng r(3);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::pair<double, Matrix>> cols, scaled;
    const double s = 0.01 + 100 * r.uniform();
    for (int c = 0; c < 1 + static_cast<int>(r.below(6)); ++c) {
      const double rel = r.uniform();
      const Matrix d = random_simplex(r, 5);
      cols.emplace_back(rel, d);
      scaled.emplace_back(rel * s, d);
    }
    CHECK(predict_num(cols) == predict_num(scaled));
  }
}

TEST_CASE("symmetric KL properties over random simplex pairs") {
  Rng r(4);
  for (int i = 0; i < 10000; ++i) {
    const int k = 2 + static_cast<int>(r.below(5));
    const Matrix p = floor_renormalize(random_simplex(r, k), 1e-8);
    const Matrix q = floor_renormalize(random_simplex(r, k), 1e-8);
    const double a = kl_sym(p, q);
    CHECK(a >= 0.0);
    CHECK(std::fabs(a - kl_sym(q, p)) < 1e-12);
    CHECK(kl_sym(p, p) == 0.0);
  }
}

TEST_CASE("rdrop_loss") {
  RDropConfig cfg;
  const Matrix b1 = row({0.3, -1.0, 2.0}), b2 = row({0.1, 0.4, -0.2});
  SUBCASE("identical passes") {
    const auto t = rdrop_loss(row({0.6, 0.4}), row({0.6, 0.4}), b1, b1, 1, cfg);
    CHECK(t.loss2 == 0.0);
    CHECK(t.loss3 == 0.0);
    CHECK(t.total() == doctest::Approx(-std::log(0.4)).epsilon(1e-12));
  }
  SUBCASE("zero weights") {
    cfg.lambda = cfg.mu = 0.0;
    const auto t = rdrop_loss(row({0.6, 0.4}), row({0.2, 0.8}), b1, b2, 0, cfg);
    CHECK(t.total() == t.loss1);
    CHECK(std::fabs(t.loss1 - 0.5 * (-std::log(0.6) - std::log(0.2))) < 1e-12);
  }
  SUBCASE("hand example") {
    cfg.lambda = 1.0;
    cfg.mu = 0.0;
    const auto t = rdrop_loss(row({0.7, 0.3}), row({0.3, 0.7}), b1, b2, 0, cfg);
    const double ce = 0.5 * (-std::log(0.7) - std::log(0.3));
    const double kls = 0.4 * std::log(7.0 / 3.0);
    CHECK(std::fabs(t.loss1 - ce) < 1e-9);
    CHECK(std::fabs(t.loss2 - kls) < 1e-9);
    CHECK(std::fabs(t.total() - (ce + kls)) < 1e-9);
  }
  SUBCASE("swap symmetry") {
    Rng r(5);
    for (int i = 0; i < 200; ++i) {
      const Matrix t1 = random_simplex(r, 4), t2 = random_simplex(r, 4);
      const Matrix c1 = nn::gaussian(1, 6, 1.0, r), c2 = nn::gaussian(1, 6, 1.0, r);
      const auto x = rdrop_loss(t1, t2, c1, c2, 2, cfg);
      const auto y = rdrop_loss(t2, t1, c2, c1, 2, cfg);
      CHECK(std::fabs(x.total() - y.total()) < 1e-12);
    }
  }
  SUBCASE("one-sided mode differs from the symmetric one") {
    RDropConfig one = cfg;
    one.symmetric = false;
    const auto x = rdrop_loss(row({0.9, 0.1}), row({0.5, 0.5}), b1, b2, 0, cfg);
    const auto y = rdrop_loss(row({0.9, 0.1}), row({0.5, 0.5}), b1, b2, 0, one);
    CHECK(std::fabs(y.loss2 - 0.5 * kl(row({0.9, 0.1}), row({0.5, 0.5}))) < 1e-12);
    CHECK(x.loss2 != y.loss2);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(rdrop_loss(row({NAN, 0.5}), row({0.5, 0.5}), b1, b2, 0, cfg), NumericError);
    RDropConfig bad = cfg;
    bad.lambda = -1;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = cfg;
    bad.prob_floor = 0.01;
    CHECK_THROWS_AS(bad.validate(), InputError);
  }
}

TEST_CASE("graph KL terms agree with the value forms") {
  RDropConfig cfg;
  Rng r(6);
  for (int i = 0; i < 50; ++i) {
    const Matrix p = random_simplex(r, 3), q = random_simplex(r, 3);
    const Matrix b1 = nn::gaussian(1, 5, 1.0, r), b2 = nn::gaussian(1, 5, 1.0, r);
    nn::Graph g;
    const double kt = kl_term(g.constant(p), g.constant(q), cfg).scalar();
    CHECK(std::fabs(kt - kl_sym(floor_renormalize(p, cfg.prob_floor), floor_renormalize(q, cfg.prob_floor))) <
          1e-12);
    const double pt = pooled_kl_term(g.constant(b1), g.constant(b2), cfg).scalar();
    const auto ref = rdrop_loss(p, q, b1, b2, 0, RDropConfig{0.0, 1.0, cfg.prob_floor, true});
    CHECK(std::fabs(pt - ref.loss3) < 1e-12);
  }
}

TEST_CASE("FGM contract") {
  nn::ParameterStore s;
  Rng r(7);
  auto& emb = s.create("emb", nn::gaussian(6, 4, 1.0, r));
  const Matrix before = emb.value();
  nn::Gradients grads;
  grads.at(&emb) = nn::gaussian(6, 4, 1.0, r);
  FGMConfig cfg;
  cfg.epsilon = 0.7;

  double measured = -1.0;
  const auto res = fgm_step(emb, grads, cfg, [&] {
    measured = (emb.value() - before).norm();
    return 1.5;
  });
  CHECK(res.applied);
  CHECK(std::fabs(measured - 0.7) < 1e-6);
  CHECK(std::fabs(res.perturbation_norm - 0.7) < 1e-6);
  CHECK(res.adversarial_loss == 1.5);
  CHECK(emb.value() == before);

  SUBCASE("zero epsilon leaves the table unchanged during the pass") {
    cfg.epsilon = 0.0;
    bool same = false;
    fgm_step(emb, grads, cfg, [&] {
      same = emb.value() == before;
      return 0.0;
    });
    CHECK(same);
  }
  SUBCASE("zero gradient skips") {
    nn::Gradients zero;
    zero.at(&emb) = Matrix::Zero(6, 4);
    bool ran = false;
    const auto z = fgm_step(emb, zero, cfg, [&] {
      ran = true;
      return 0.0;
    });
    CHECK_FALSE(z.applied);
    CHECK_FALSE(ran);
    CHECK(emb.value() == before);
  }
  SUBCASE("disabled or missing gradient skips") {
    FGMConfig off = cfg;
    off.enabled = false;
    CHECK_FALSE(fgm_step(emb, grads, off, [] { return 0.0; }).applied);
    CHECK_FALSE(fgm_step(emb, nn::Gradients{}, cfg, [] { return 0.0; }).applied);
  }
  SUBCASE("restored after an exception") {
    CHECK_THROWS(fgm_step(emb, grads, cfg, []() -> double { throw NumericError("boom"); }));
    CHECK(emb.value() == before);
  }
}

TEST_CASE("modules are hard-decoupled") {
  const int v = fixture().vocab.size();
  CFCDModule a(tiny(ClauseRole::kSelect, v)), b(tiny(ClauseRole::kWhere, v)), c(tiny(ClauseRole::kSw, v));
  std::set<const void*> seen;
  std::size_t total = 0;
  for (const auto* m : {&a, &b, &c}) {
    for (const auto* p : m->store().parameters()) {
      seen.insert(p);
      seen.insert(p->value().data());
      total += 2;
    }
  }
  CHECK(seen.size() == total);
}

TEST_CASE("zero rank head scores one half; eval scores are deterministic") {
  const auto& f = fixture();
  CFCDModule m(tiny(ClauseRole::kSelect, f.vocab.size()));
  const auto& cand = f.train[0].candidates[0];
  CHECK(m.rank_score(cand) == m.rank_score(cand));
  m.rank_head().weight->value().setZero();
  m.rank_head().bias->value().setZero();
  for (const auto& c : f.train[1].candidates) CHECK(m.rank_score(c) == 0.5);
  const auto s = m.score(cand);
  CHECK(std::fabs(s.num.sum() - 1.0) < 1e-12);
  CHECK(s.num.cols() == 2);
  CHECK(s.cls.cols() == 6);
  CFCDModule w(tiny(ClauseRole::kWhere, f.vocab.size()));
  const auto ws = w.score(cand);
  CHECK(ws.num.cols() == 5);
  CHECK(ws.cls.cols() == 3);
  CHECK(ws.start.cols() == cand.question_length());
  CFCDModule sw(tiny(ClauseRole::kSw, f.vocab.size()));
  CHECK(sw.score(cand).num.cols() == 6);
}

TEST_CASE("gradient check on rank and num heads") {
  const auto& f = fixture();
  for (bool ifcd : {false, true}) {
    CFCDModule m(tiny(ClauseRole::kSelect, f.vocab.size(), ifcd));
    const auto& cand = f.train[2].candidates[1];
    std::vector<nn::Parameter*> heads = {m.rank_head().weight, m.rank_head().bias, m.num_head().weight,
                                         m.num_head().bias};
    const auto probes = nn::gradient_check(
        [&](nn::Graph& g) {
          auto h = m.forward(g, cand, nullptr);
          return nn::add(nn::nll(h.rank, 1), nn::nll(h.num, 0));
        },
        heads, 20, 9);
    for (const auto& p : probes) CHECK(p.rel_error < 1e-4);
  }
}

TEST_CASE("example loss identities") {
  const auto& f = fixture();
  const auto& ex = f.train[3];
  for (auto role : {ClauseRole::kSelect, ClauseRole::kWhere, ClauseRole::kSw}) {
    const auto labels = role_labels(role, ex.example, ex.candidates);
    SUBCASE("no dropout gives zero consistency terms") {
      CFCDModule m(tiny(role, f.vocab.size(), true, 0.0));
      nn::Graph g;
      const auto l = example_loss(g, m, ex, labels, RDropConfig{}, 1, 2);
      CHECK(std::fabs(l.terms.loss2) < 1e-9);
      CHECK(std::fabs(l.terms.loss3) < 1e-9);
    }
    SUBCASE("zero weights without IFCD give the mean cross-entropy") {
      CFCDModule m(tiny(role, f.vocab.size(), false, 0.1));
      nn::Graph g;
      const auto l = example_loss(g, m, ex, labels, RDropConfig{0.0, 0.0, 1e-8, true}, 1, 2);
      CHECK(std::fabs(l.terms.total - l.terms.loss1) < 1e-12);
      CHECK(l.terms.loss1 > 0.0);
    }
  }
}

TEST_CASE("training is deterministic and checkpoints round-trip") {
  const auto& f = fixture();
  std::vector<data::PreparedExample> few(f.train.begin(), f.train.begin() + 6);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 3;
  tc.target_accuracy = 2.0;
  auto run = [&] {
    auto m = std::make_unique<CFCDModule>(tiny(ClauseRole::kWhere, f.vocab.size()));
    std::ostringstream log;
    TrainHooks hooks;
    hooks.log = &log;
    const auto res = train_cfcd(*m, few, RDropConfig{}, FGMConfig{}, tc, hooks);
    CHECK(res.epochs.size() == 2);
    CHECK(log.str().find("loss_3") != std::string::npos);
    return std::pair{std::move(m), res.final_loss};
  };
  auto [m1, l1] = run();
  auto [m2, l2] = run();
  CHECK(l1 == l2);

  const auto dir = std::filesystem::temp_directory_path() / "cfcdc_test_module";
  std::filesystem::create_directories(dir);
  save_module(dir / "a.ckpt", *m1, {{"note", "x"}});
  save_module(dir / "b.ckpt", *m2);
  nlohmann::json meta;
  auto back = load_module(dir / "a.ckpt", &meta);
  CHECK(meta["extra"]["note"] == "x");
  CHECK(back->role() == ClauseRole::kWhere);
  for (const auto& c : f.train[5].candidates) CHECK(back->rank_score(c) == m1->rank_score(c));
  CHECK(nn::file_digest(dir / "a.ckpt") != nn::file_digest(dir / "b.ckpt"));  // metadata differs
  CHECK_THROWS_AS(load_module(dir / "missing.ckpt"), ReferenceError);

  CHECK_THROWS_AS(train_cfcd(*m1, {}, RDropConfig{}, FGMConfig{}, tc), InputError);
}
