#include "cfcdc/data/synth.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "cfcdc/data/tokenizer.hpp"
#include "cfcdc/error.hpp"
#include "cfcdc/nn/rng.hpp"

namespace cfcdc::data {

namespace {

using sql::AggOp;
using sql::CondOp;

// Names avoid every template word, so a column mention is unambiguous.
const std::vector<std::string> kTextNames = {
    "name",    "department", "city",   "team",     "country", "position", "school",  "club",
    "venue",   "party",      "genre",  "director", "artist",  "opponent", "surface", "status",
    "region",  "league",     "home team", "college", "network", "format", "label",  "manager",
    "captain", "coach",      "state",  "nationality", "away side", "music style"};

const std::vector<std::string> kRealNames = {
    "age",   "salary", "year",    "points", "score",  "height", "weight",  "rank",    "goals",   "wins",
    "losses", "population", "attendance", "round", "pick", "games", "assists", "seats", "votes", "episode",
    "season", "length", "price", "area",  "laps",   "grid",   "crowd",   "budget",  "rating", "draft year"};

const std::vector<std::string> kTextValues = {
    "Boston",  "Paris",   "Tokyo",   "Berlin",    "Madrid",     "Lima",     "Oslo",      "Cairo",   "Delhi",
    "Seoul",   "Smith",   "Jones",   "Garcia",    "Brown",      "Lee",      "Kim",       "Lopez",   "Clark",
    "Lewis",   "Walker",  "Red",     "Blue",      "Green",      "Gold",     "Silver",    "CS",      "EE",
    "ME",      "Art",     "Law",     "New York",  "Los Angeles", "San Diego", "Rio Grande", "Hong Kong",
    "Cape Town", "Santa Fe", "El Paso", "North",  "South",      "East",     "West",      "Alpha",   "Beta",
    "Gamma",   "Delta",   "Omega",   "Falcons",   "Tigers",     "Eagles",   "Lions",     "Bears",   "Hawks",
    "Sharks",  "Wolves",  "Comets",  "Rockets",   "Kings",      "O'Brien",  "D'Angelo"};

const std::vector<std::vector<std::string>> kSelectPhrases = {
    {"what is the {c}", "which {c}", "list the {c}", "tell me the {c}"},  // NONE
    {"what is the highest {c}", "what is the maximum {c}"},              // MAX
    {"what is the lowest {c}", "what is the minimum {c}"},               // MIN
    {"how many {c}", "what is the number of {c}"},                       // COUNT
    {"what is the total {c}", "what is the sum of {c}"},                 // SUM
    {"what is the average {c}", "what is the mean {c}"},                 // AVG
};

const std::vector<std::vector<std::string>> kCondPhrases = {
    {"{c} is {v}", "{c} equals {v}"},
    {"{c} is greater than {v}", "{c} is more than {v}"},
    {"{c} is less than {v}", "{c} is smaller than {v}"},
};

const std::vector<std::string> kFirstConnectors = {"when", "where", "with", "for"};

template <typename T>
const T& pick(const std::vector<T>& xs, nn::Rng& rng) {
  return xs[rng.below(xs.size())];
}

std::string fill(std::string tmpl, const std::string& c, const std::string& v = "") {
  if (auto p = tmpl.find("{c}"); p != std::string::npos) tmpl.replace(p, 3, c);
  if (auto p = tmpl.find("{v}"); p != std::string::npos) tmpl.replace(p, 3, v);
  return tmpl;
}

std::set<std::string> word_set(const std::string& s) {
  std::set<std::string> out;
  for (auto& t : split_words(s)) out.insert(t.text);
  return out;
}

// Draws `n` names whose word sets are pairwise disjoint and disjoint from `used`.
std::vector<std::string> draw_names(const std::vector<std::string>& pool, int n, std::set<std::string>& used,
                                    nn::Rng& rng) {
  std::vector<std::string> order = pool;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::string> out;
  for (const auto& name : order) {
    if (static_cast<int>(out.size()) == n) break;
    const auto words = word_set(name);
    if (std::any_of(words.begin(), words.end(), [&](const std::string& w) { return used.contains(w); })) continue;
    used.insert(words.begin(), words.end());
    out.push_back(name);
  }
  if (static_cast<int>(out.size()) < n) throw InputError("synthetic name pool too small");
  return out;
}

TableSchema make_table(std::uint64_t seed, int idx, const SynthOptions& opts, nn::Rng& rng) {
  TableSchema t;
  t.table_id = "synth-" + std::to_string(seed) + "-" + std::to_string(idx);
  std::set<std::string> used;
  auto text_names = draw_names(kTextNames, opts.text_columns, used, rng);
  auto real_names = draw_names(kRealNames, opts.real_columns, used, rng);
  std::vector<std::pair<std::string, ColumnType>> cols;
  for (auto& n : text_names) cols.emplace_back(n, ColumnType::kText);
  for (auto& n : real_names) cols.emplace_back(n, ColumnType::kReal);
  for (std::size_t i = cols.size(); i > 1; --i) std::swap(cols[i - 1], cols[rng.below(i)]);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    t.columns.push_back(ColumnSpec{static_cast<int>(i), cols[i].first, cols[i].second});
  }

  // Each text column draws from its own slice of the value pool.
  std::vector<std::vector<std::string>> text_pools(cols.size());
  std::vector<bool> decimal(cols.size(), false);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c].second == ColumnType::kText) {
      for (int k = 0; k < 6; ++k) text_pools[c].push_back(pick(kTextValues, rng));
    } else {
      decimal[c] = rng.below(5) == 0;
    }
  }
  for (int r = 0; r < opts.rows_per_table; ++r) {
    std::vector<Cell> row;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (cols[c].second == ColumnType::kText) {
        row.emplace_back(pick(text_pools[c], rng));
      } else if (decimal[c]) {
        row.emplace_back(static_cast<double>(10 + rng.below(890)) / 10.0);
      } else {
        row.emplace_back(static_cast<double>(1 + rng.below(99)));
      }
    }
    t.rows.push_back(std::move(row));
  }
  t.validate();
  return t;
}

NLExample make_example(const TableSchema& t, nn::Rng& rng) {
  const auto agg = static_cast<AggOp>(rng.below(sql::kNumAggOps));
  const int n_where = static_cast<int>(rng.below(sql::kMaxWhereNum + 1));

  std::vector<int> real_cols;
  std::vector<int> all_cols;
  for (const auto& c : t.columns) {
    all_cols.push_back(c.index);
    if (c.ctype == ColumnType::kReal) real_cols.push_back(c.index);
  }
  auto shuffle = [&](std::vector<int>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  };

  SQLLabel label;
  label.agg = agg;
  label.sel_col = sql::agg_requires_numeric(agg) ? pick(real_cols, rng) : pick(all_cols, rng);

  std::vector<int> free_real;
  for (int c : real_cols) {
    if (c != label.sel_col) free_real.push_back(c);
  }
  std::vector<CondOp> ops(static_cast<std::size_t>(n_where));
  for (int attempt = 0;; ++attempt) {
    int numeric_needed = 0;
    for (auto& op : ops) {
      op = static_cast<CondOp>(rng.below(sql::kNumCondOps));
      numeric_needed += op != CondOp::kEq ? 1 : 0;
    }
    if (numeric_needed <= static_cast<int>(free_real.size())) break;
    if (attempt >= 20) {
      int budget = static_cast<int>(free_real.size());
      for (auto& op : ops) {
        if (op != CondOp::kEq && budget-- <= 0) op = CondOp::kEq;
      }
      break;
    }
  }

  shuffle(free_real);
  std::set<int> taken = {label.sel_col};
  std::vector<int> cond_cols(ops.size(), -1);
  std::size_t next_real = 0;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i] != CondOp::kEq) {
      cond_cols[i] = free_real[next_real++];
      taken.insert(cond_cols[i]);
    }
  }
  std::vector<int> rest;
  for (int c : all_cols) {
    if (!taken.contains(c)) rest.push_back(c);
  }
  shuffle(rest);
  std::size_t next_rest = 0;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (cond_cols[i] < 0) cond_cols[i] = rest[next_rest++];
  }

  const auto& anchor = t.rows[rng.below(t.rows.size())];
  for (std::size_t i = 0; i < ops.size(); ++i) {
    sql::Condition c;
    c.col = cond_cols[i];
    c.op = ops[i];
    const Cell& cell = anchor[static_cast<std::size_t>(c.col)];
    if (c.op == CondOp::kEq) {
      c.value = cell_text(cell);
    } else {
      const double v = std::get<double>(cell);
      const double d = static_cast<double>(1 + rng.below(5));
      c.value = format_number(c.op == CondOp::kGt ? v - d : v + d);
    }
    label.conds.push_back(std::move(c));
  }

  std::string q = fill(pick(kSelectPhrases[static_cast<std::size_t>(agg)], rng),
                       t.columns[static_cast<std::size_t>(label.sel_col)].name);
  for (std::size_t i = 0; i < label.conds.size(); ++i) {
    const auto& c = label.conds[i];
    q += " " + (i == 0 ? pick(kFirstConnectors, rng) : std::string("and")) + " ";
    q += fill(pick(kCondPhrases[static_cast<std::size_t>(c.op)], rng),
              t.columns[static_cast<std::size_t>(c.col)].name, c.value);
  }
  if (rng.below(2) == 0) q += " ?";
  return NLExample{q, t.table_id, std::move(label)};
}

}  // namespace

SynthDataset synth_dataset(std::uint64_t seed, const SynthOptions& opts) {
  if (opts.n_train < 1) throw InputError("synth_dataset: n_examples must be >= 1");
  if (opts.schema_pool_size < 1) throw InputError("synth_dataset: schema_pool_size must be >= 1");
  if (opts.text_columns + opts.real_columns < sql::kMaxWhereNum + 1 || opts.real_columns < 1) {
    throw InputError("synth_dataset: tables need at least 5 columns including one real column");
  }
  nn::Rng rng(nn::derive_seed(seed, 0x5eed));
  SynthDataset ds;
  std::vector<const TableSchema*> pool;
  for (int i = 0; i < opts.schema_pool_size; ++i) {
    TableSchema t = make_table(seed, i, opts, rng);
    const std::string id = t.table_id;
    pool.push_back(&ds.tables.emplace(id, std::move(t)).first->second);
  }
  for (int i = 0; i < opts.n_train; ++i) ds.train.push_back(make_example(*pool[rng.below(pool.size())], rng));
  for (int i = 0; i < opts.n_dev; ++i) ds.dev.push_back(make_example(*pool[rng.below(pool.size())], rng));
  return ds;
}

SynthDataset synth_dataset(std::uint64_t seed, int n_examples, int schema_pool_size) {
  SynthOptions opts;
  opts.n_train = n_examples;
  opts.n_dev = std::max(1, n_examples * 2 / 5);
  opts.schema_pool_size = schema_pool_size;
  return synth_dataset(seed, opts);
}

}  // namespace cfcdc::data
