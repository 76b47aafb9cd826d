#include "cfcdc/cfcd/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include "cfcdc/error.hpp"

namespace cfcdc::cfcd {

using ifcd::TaskId;
using nn::Var;

double RoleAccuracy::min() const { return std::min({relevance, ranking, num, cls, span}); }

namespace {

Var mean_of(const std::vector<Var>& xs) {
  const std::vector<double> w(xs.size(), 1.0 / static_cast<double>(xs.size()));
  return nn::weighted_sum(xs, w);
}

struct TaskTerms {
  std::vector<Var> ce;
  std::vector<Var> kl;
};

void add_task(std::map<TaskId, TaskTerms>& terms, TaskId t, Var d1, Var d2, int label, const RDropConfig& cfg) {
  Var p1 = nn::prob_floor(d1, cfg.prob_floor);
  Var p2 = nn::prob_floor(d2, cfg.prob_floor);
  auto& tt = terms[t];
  tt.ce.push_back(nn::scale(nn::add(nn::nll(p1, label), nn::nll(p2, label)), 0.5));
  tt.kl.push_back(kl_term(d1, d2, cfg));
}

}  // namespace

ExampleLoss example_loss(nn::Graph& g, const CFCDModule& module, const data::PreparedExample& ex,
                         const std::vector<CandidateLabels>& labels, const RDropConfig& rdrop, std::uint64_t seed_a,
                         std::uint64_t seed_b) {
  const ClauseRole role = module.role();
  const TaskId cls_task = role == ClauseRole::kSelect ? TaskId::kSelAgg : TaskId::kWhrOp;
  nn::Rng ra(seed_a);
  nn::Rng rb(seed_b);
  std::map<TaskId, TaskTerms> terms;
  std::vector<Var> pooled_kl;
  for (std::size_t c = 0; c < ex.candidates.size(); ++c) {
    const auto& cand = ex.candidates[c];
    const auto& lab = labels[c];
    HeadOutputs h1 = module.forward(g, cand, &ra);
    HeadOutputs h2 = module.forward(g, cand, &rb);
    add_task(terms, rank_task(role), h1.rank, h2.rank, lab.relevant, rdrop);
    add_task(terms, num_task(role), h1.num, h2.num, lab.num, rdrop);
    if (lab.cls >= 0 && h1.cls) add_task(terms, cls_task, *h1.cls, *h2.cls, lab.cls, rdrop);
    if (lab.span_start >= 0 && h1.start) {
      add_task(terms, TaskId::kWhrValStart, *h1.start, *h2.start, lab.span_start, rdrop);
      add_task(terms, TaskId::kWhrValEnd, *h1.end, *h2.end, lab.span_end, rdrop);
    }
    pooled_kl.push_back(pooled_kl_term(h1.pooled, h2.pooled, rdrop));
  }

  ExampleLoss out;
  std::map<TaskId, Var> task_losses;
  for (auto& [t, tt] : terms) {
    Var ce = mean_of(tt.ce);
    Var kl = mean_of(tt.kl);
    out.terms.loss1 += ce.scalar();
    out.terms.loss2 += rdrop.lambda * kl.scalar();
    Var parts[] = {ce, kl};
    const double w[] = {1.0, rdrop.lambda};
    task_losses.emplace(t, nn::weighted_sum(parts, w));
  }
  Var combined;
  if (const auto* block = module.block()) {
    combined = block->loss(g, task_losses);
  } else {
    std::vector<Var> ls;
    for (auto& [t, l] : task_losses) ls.push_back(l);
    combined = nn::weighted_sum(ls, std::vector<double>(ls.size(), 1.0));
  }
  Var p3 = mean_of(pooled_kl);
  out.terms.loss3 = rdrop.mu * p3.scalar();
  Var parts[] = {combined, p3};
  const double w[] = {1.0, rdrop.mu};
  out.total = nn::weighted_sum(parts, w);
  out.terms.total = out.total.scalar();
  return out;
}

RoleAccuracy role_accuracy(const CFCDModule& module, const std::vector<data::PreparedExample>& examples) {
  const ClauseRole role = module.role();
  long rel_ok = 0, rel_n = 0, rank_ok = 0, num_ok = 0, cls_ok = 0, cls_n = 0, span_ok = 0, span_n = 0;
  for (const auto& ex : examples) {
    const auto labels = role_labels(role, ex.example, ex.candidates);
    std::vector<CandidateScores> scores;
    for (const auto& cand : ex.candidates) scores.push_back(module.score(cand));

    std::vector<std::pair<double, nn::Matrix>> per_col;
    std::set<int> gold;
    for (std::size_t c = 0; c < labels.size(); ++c) {
      const auto& l = labels[c];
      const auto& s = scores[c];
      rel_ok += ((s.relevance > 0.5 ? 1 : 0) == l.relevant) ? 1 : 0;
      ++rel_n;
      if (l.relevant) gold.insert(static_cast<int>(c));
      per_col.emplace_back(s.relevance, s.num);
      if (l.cls >= 0 && s.cls.size() > 0) {
        nn::Index arg = 0;
        s.cls.row(0).maxCoeff(&arg);
        cls_ok += arg == l.cls ? 1 : 0;
        ++cls_n;
      }
      if (l.span_start >= 0 && s.start.size() > 0) {
        nn::Index a = 0, b = 0;
        s.start.row(0).maxCoeff(&a);
        s.end.row(0).maxCoeff(&b);
        span_ok += (a == l.span_start && b == l.span_end) ? 1 : 0;
        ++span_n;
      }
    }
    std::vector<int> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return scores[static_cast<std::size_t>(a)].relevance > scores[static_cast<std::size_t>(b)].relevance;
    });
    const std::set<int> top(order.begin(), order.begin() + static_cast<long>(gold.size()));
    rank_ok += top == gold ? 1 : 0;
    num_ok += predict_num(per_col) == labels.front().num ? 1 : 0;
  }
  RoleAccuracy acc;
  const double n = std::max<double>(1.0, static_cast<double>(examples.size()));
  acc.relevance = rel_n ? static_cast<double>(rel_ok) / static_cast<double>(rel_n) : 0.0;
  acc.ranking = static_cast<double>(rank_ok) / n;
  acc.num = static_cast<double>(num_ok) / n;
  if (cls_n) acc.cls = static_cast<double>(cls_ok) / static_cast<double>(cls_n);
  if (span_n) acc.span = static_cast<double>(span_ok) / static_cast<double>(span_n);
  return acc;
}

TrainResult train_cfcd(CFCDModule& module, const std::vector<data::PreparedExample>& examples,
                       const RDropConfig& rdrop, const FGMConfig& fgm, const TrainConfig& cfg,
                       const TrainHooks& hooks) {
  if (examples.empty()) throw InputError("train_cfcd: empty dataset");
  if (cfg.batch_size < 1 || cfg.epochs < 1) throw InputError("train_cfcd: epochs and batch_size must be >= 1");
  rdrop.validate();

  std::vector<std::vector<CandidateLabels>> labels;
  labels.reserve(examples.size());
  for (const auto& ex : examples) labels.push_back(role_labels(module.role(), ex.example, ex.candidates));

  nn::Adam adam(module.store().parameters(), cfg.adam);
  nn::Parameter& emb = module.encoder().token_embedding();
  TrainResult result;
  std::uint64_t step = 0;
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    nn::Rng shuffle(nn::derive_seed(cfg.seed, 0xE90C, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    EpochLog log;
    log.epoch = epoch;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
      const double inv = 1.0 / static_cast<double>(b1 - b0);
      ++step;
      auto seed_of = [&](std::size_t idx, std::uint64_t pass) { return nn::derive_seed(cfg.seed, step, idx, pass); };

      nn::Gradients grads;
      LossTerms batch;
      for (std::size_t k = b0; k < b1; ++k) {
        const std::size_t idx = order[k];
        nn::Graph g;
        ExampleLoss l = example_loss(g, module, examples[idx], labels[idx], rdrop, seed_of(idx, 1), seed_of(idx, 2));
        if (!std::isfinite(l.terms.total)) {
          throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(step) + " (example " + std::to_string(idx) + ")");
        }
        g.backward(l.total, grads, inv);
        batch.loss1 += inv * l.terms.loss1;
        batch.loss2 += inv * l.terms.loss2;
        batch.loss3 += inv * l.terms.loss3;
        batch.total += inv * l.terms.total;
      }

      const FGMResult adv = fgm_step(emb, grads, fgm, [&] {
        double total = 0.0;
        for (std::size_t k = b0; k < b1; ++k) {
          const std::size_t idx = order[k];
          nn::Graph g;
          ExampleLoss l =
              example_loss(g, module, examples[idx], labels[idx], rdrop, seed_of(idx, 1), seed_of(idx, 2));
          if (!std::isfinite(l.terms.total)) throw NumericError("training diverged: non-finite adversarial loss");
          g.backward(l.total, grads, inv);
          total += inv * l.terms.total;
        }
        return total;
      });
      adam.step(grads);

      const double frac = static_cast<double>(b1 - b0) / static_cast<double>(examples.size());
      log.loss.loss1 += frac * batch.loss1;
      log.loss.loss2 += frac * batch.loss2;
      log.loss.loss3 += frac * batch.loss3;
      log.loss.total += frac * batch.total;
      log.adversarial += frac * adv.adversarial_loss;
      if (hooks.log) {
        *hooks.log << "step " << step << " epoch " << epoch << " loss_1 " << batch.loss1 << " loss_2 " << batch.loss2
                   << " loss_3 " << batch.loss3 << " total " << batch.total << " adv " << adv.adversarial_loss
                   << '\n';
      }
    }
    log.accuracy = role_accuracy(module, examples);
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (hooks.log) {
      const auto& a = log.accuracy;
      *hooks.log << "epoch " << epoch << " role " << role_name(module.role()) << " loss_1 " << log.loss.loss1
                 << " loss_2 " << log.loss.loss2 << " loss_3 " << log.loss.loss3 << " total " << log.loss.total
                 << " adv " << log.adversarial << " acc_relevance " << a.relevance << " acc_ranking " << a.ranking
                 << " acc_num " << a.num << " acc_cls " << a.cls << " acc_span " << a.span << " seconds "
                 << log.seconds << std::endl;
    }
    result.epochs.push_back(log);
    result.final_loss = log.loss.total;
    if (hooks.on_epoch) hooks.on_epoch(log);
    if (log.accuracy.min() >= cfg.target_accuracy) break;
  }
  return result;
}

}  // namespace cfcdc::cfcd
