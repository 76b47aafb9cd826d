#include "cfcdc/cfcc/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "cfcdc/error.hpp"

namespace cfcdc::cfcc {

using cfcd::ClauseRole;
using ifcd::TaskId;
using nn::Matrix;
using nn::Var;

namespace {

struct CandTargets {
  std::map<TaskId, int> label;  // absent when the task does not apply
};

std::vector<CandTargets> targets(const data::PreparedExample& ex) {
  const auto sel = cfcd::role_labels(ClauseRole::kSelect, ex.example, ex.candidates);
  const auto whr = cfcd::role_labels(ClauseRole::kWhere, ex.example, ex.candidates);
  std::vector<CandTargets> out(ex.candidates.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    auto& l = out[c].label;
    l[TaskId::kSelRank] = sel[c].relevant;
    l[TaskId::kSelNum] = sel[c].num;
    if (sel[c].cls >= 0) l[TaskId::kSelAgg] = sel[c].cls;
    l[TaskId::kWhrRank] = whr[c].relevant;
    l[TaskId::kWhrNum] = whr[c].num;
    if (whr[c].cls >= 0) l[TaskId::kWhrOp] = whr[c].cls;
  }
  return out;
}

struct Pooled {
  Matrix sel, whr, sw;
};

std::vector<std::vector<Pooled>> frozen_pooled(const CoupleModules& m,
                                               const std::vector<data::PreparedExample>& examples) {
  std::vector<std::vector<Pooled>> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    std::vector<Pooled> row;
    for (const auto& cand : ex.candidates) {
      row.push_back({m.select->score(cand).pooled, m.where->score(cand).pooled, m.sw->score(cand).pooled});
    }
    out.push_back(std::move(row));
  }
  return out;
}

void check_modules(const CoupleModules& m) {
  if (!m.select || !m.where || !m.sw) throw InputError("train_cfcc: missing role module");
}

}  // namespace

double min_accuracy(const CoupledAccuracy& a) {
  double m = 1.0;
  for (const auto& [t, v] : a) m = std::min(m, v);
  return m;
}

CoupledAccuracy coupled_accuracy(const CFCCModel& model, const CoupleModules& modules,
                                 const std::vector<data::PreparedExample>& examples) {
  check_modules(modules);
  const auto pooled = frozen_pooled(modules, examples);
  std::map<TaskId, std::pair<long, long>> counts;
  for (std::size_t e = 0; e < examples.size(); ++e) {
    const auto tg = targets(examples[e]);
    for (std::size_t c = 0; c < tg.size(); ++c) {
      nn::Graph g;
      const auto& p = pooled[e][c];
      const auto out = model.forward(g, g.constant(p.sel), g.constant(p.whr), g.constant(p.sw));
      for (const auto& [t, label] : tg[c].label) {
        nn::Index arg = 0;
        out.dist(t).value().row(0).maxCoeff(&arg);
        auto& [ok, n] = counts[t];
        ok += arg == label ? 1 : 0;
        ++n;
      }
    }
  }
  CoupledAccuracy acc;
  for (const auto& [t, c] : counts) acc[t] = static_cast<double>(c.first) / static_cast<double>(c.second);
  return acc;
}

std::vector<CoupleEpochLog> train_cfcc(CFCCModel& model, const CoupleModules& modules,
                                       const std::vector<data::PreparedExample>& examples, const CoupleConfig& cfg,
                                       const CoupleHooks& hooks) {
  check_modules(modules);
  if (examples.empty()) throw InputError("train_cfcc: empty dataset");
  if (cfg.batch_size < 1 || cfg.epochs < 1) throw InputError("train_cfcc: epochs and batch_size must be >= 1");

  std::vector<std::vector<CandTargets>> tgts;
  for (const auto& ex : examples) tgts.push_back(targets(ex));
  std::vector<std::vector<Pooled>> pooled;
  if (!cfg.finetune_all) pooled = frozen_pooled(modules, examples);

  std::vector<nn::Parameter*> params = model.store().parameters();
  if (cfg.finetune_all) {
    for (auto* m : {modules.select, modules.where, modules.sw}) {
      auto ps = m->store().parameters();
      params.insert(params.end(), ps.begin(), ps.end());
    }
  }
  nn::Adam adam(params, cfg.adam);

  std::vector<CoupleEpochLog> logs;
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    nn::Rng shuffle(nn::derive_seed(cfg.seed, 0xC0C0, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    CoupleEpochLog log;
    log.epoch = epoch;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
      const double inv = 1.0 / static_cast<double>(b1 - b0);
      ++step;
      nn::Gradients grads;
      double batch_loss = 0.0;
      for (std::size_t k = b0; k < b1; ++k) {
        const std::size_t idx = order[k];
        const auto& ex = examples[idx];
        nn::Graph g;
        std::map<TaskId, std::vector<Var>> per_task;
        for (std::size_t c = 0; c < ex.candidates.size(); ++c) {
          Var ps, pw, pv;
          if (cfg.finetune_all) {
            ps = modules.select->forward(g, ex.candidates[c], nullptr).pooled;
            pw = modules.where->forward(g, ex.candidates[c], nullptr).pooled;
            pv = modules.sw->forward(g, ex.candidates[c], nullptr).pooled;
          } else {
            const auto& p = pooled[idx][c];
            ps = g.constant(p.sel);
            pw = g.constant(p.whr);
            pv = g.constant(p.sw);
          }
          const auto out = model.forward(g, ps, pw, pv);
          for (const auto& [t, label] : tgts[idx][c].label) {
            per_task[t].push_back(nn::nll(nn::prob_floor(out.dist(t), 1e-8), label));
          }
        }
        std::map<TaskId, Var> task_losses;
        for (auto& [t, xs] : per_task) {
          const std::vector<double> w(xs.size(), 1.0 / static_cast<double>(xs.size()));
          task_losses.emplace(t, nn::weighted_sum(xs, w));
        }
        Var total = model.loss(g, task_losses);
        if (!std::isfinite(total.scalar())) {
          throw NumericError("training diverged: non-finite coupled loss at epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(step));
        }
        g.backward(total, grads, inv);
        batch_loss += inv * total.scalar();
      }
      adam.step(grads);
      log.loss += batch_loss * static_cast<double>(b1 - b0) / static_cast<double>(examples.size());
      if (hooks.log) *hooks.log << "step " << step << " epoch " << epoch << " loss " << batch_loss << '\n';
    }
    log.accuracy = coupled_accuracy(model, modules, examples);
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (hooks.log) {
      *hooks.log << "epoch " << epoch << " loss " << log.loss;
      for (const auto& [t, a] : log.accuracy) *hooks.log << " acc_" << ifcd::task_name(t) << ' ' << a;
      *hooks.log << " seconds " << log.seconds << std::endl;
    }
    logs.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
    if (min_accuracy(log.accuracy) >= cfg.target_accuracy) break;
  }
  return logs;
}

}  // namespace cfcdc::cfcc
