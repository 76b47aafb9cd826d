#include "cfcdc/sql/engine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "cfcdc/error.hpp"

namespace cfcdc::sql {

using data::ColumnType;
using data::TableSchema;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    out.push_back(c);
    if (c == '\'') out.push_back('\'');
  }
  out.push_back('\'');
  return out;
}

double numeric_cell(const data::Cell& cell, const std::string& column) {
  if (const auto* d = std::get_if<double>(&cell)) return *d;
  const auto v = to_number(std::get<std::string>(cell));
  if (!v) throw SqlTypeError("non-numeric cell '" + std::get<std::string>(cell) + "' in column " + column);
  return *v;
}

double numeric_literal(const std::string& lit) {
  const auto v = to_number(lit);
  if (!v) throw SqlTypeError("non-numeric literal '" + lit + "'");
  return *v;
}

bool matches(const data::Cell& cell, const Condition& c, const TableSchema& t, const ExecOptions& opts) {
  const auto& col = t.columns[static_cast<std::size_t>(c.col)];
  if (c.op == CondOp::kEq && col.ctype == ColumnType::kText) {
    std::string a = trim(data::cell_text(cell));
    std::string b = trim(c.value);
    if (opts.case_insensitive) {
      a = lower(std::move(a));
      b = lower(std::move(b));
    }
    return a == b;
  }
  const double x = numeric_cell(cell, col.name);
  const double y = numeric_literal(c.value);
  switch (c.op) {
    case CondOp::kEq: return x == y;
    case CondOp::kGt: return x > y;
    case CondOp::kLt: return x < y;
  }
  return false;
}

}  // namespace

std::optional<double> to_number(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end == nullptr || *end != '\0' || !std::isfinite(v)) return std::nullopt;
  // strtod accepts hex and inf/nan spellings; WikiSQL literals are decimal.
  for (char c : t) {
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E')) {
      return std::nullopt;
    }
  }
  return v;
}

void validate(const Query& q, const TableSchema& table) { data::validate_label(q, table); }

std::string serialize(const Query& q, const TableSchema& table) {
  validate(q, table);
  const auto& sel = table.columns[static_cast<std::size_t>(q.sel_col)].name;
  std::string out = "SELECT ";
  if (q.agg == AggOp::kNone) {
    out += sel;
  } else {
    out += std::string(agg_name(q.agg)) + "(" + sel + ")";
  }
  out += " FROM " + table.table_id;
  for (std::size_t i = 0; i < q.conds.size(); ++i) {
    const auto& c = q.conds[i];
    const auto& col = table.columns[static_cast<std::size_t>(c.col)];
    out += i == 0 ? " WHERE " : " AND ";
    out += col.name + " " + std::string(cond_symbol(c.op)) + " ";
    if (col.ctype == ColumnType::kReal && to_number(c.value) && c.value == trim(c.value)) {
      out += c.value;
    } else {
      out += quote(c.value);
    }
  }
  return out;
}

namespace {

class Parser {
 public:
  Parser(const std::string& text, const TableSchema& table) : s_(text), t_(table) {}

  Query run() {
    Query q;
    expect("SELECT ");
    bool wrapped = false;
    for (int code = 1; code < kNumAggOps; ++code) {
      const std::string name(agg_name(static_cast<AggOp>(code)));
      if (s_.compare(pos_, name.size() + 1, name + "(") == 0) {
        q.agg = static_cast<AggOp>(code);
        pos_ += name.size() + 1;
        wrapped = true;
        break;
      }
    }
    q.sel_col = column(wrapped ? ")" : " FROM ");
    if (wrapped) expect(")");
    expect(" FROM ");
    if (s_.compare(pos_, t_.table_id.size(), t_.table_id) != 0) fail("table id mismatch");
    pos_ += t_.table_id.size();
    if (pos_ == s_.size()) return q;
    expect(" WHERE ");
    while (true) {
      Condition c;
      c.col = column(" ");
      expect(" ");
      bool found = false;
      for (int code = 0; code < kNumCondOps; ++code) {
        const std::string sym(cond_symbol(static_cast<CondOp>(code)));
        if (s_.compare(pos_, sym.size() + 1, sym + " ") == 0) {
          c.op = static_cast<CondOp>(code);
          pos_ += sym.size() + 1;
          found = true;
          break;
        }
      }
      if (!found) fail("expected a comparison operator");
      c.value = literal();
      q.conds.push_back(std::move(c));
      if (pos_ == s_.size()) break;
      expect(" AND ");
    }
    return q;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw InputError("cannot parse SQL at offset " + std::to_string(pos_) + ": " + why);
  }

  void expect(const std::string& lit) {
    if (s_.compare(pos_, lit.size(), lit) != 0) fail("expected '" + lit + "'");
    pos_ += lit.size();
  }

  int column(const std::string& terminator) {
    int best = -1;
    std::size_t best_len = 0;
    for (const auto& c : t_.columns) {
      if (c.name.size() > best_len && s_.compare(pos_, c.name.size(), c.name) == 0 &&
          s_.compare(pos_ + c.name.size(), terminator.size(), terminator) == 0) {
        best = c.index;
        best_len = c.name.size();
      }
    }
    if (best < 0) fail("unknown column");
    pos_ += best_len;
    return best;
  }

  std::string literal() {
    std::string out;
    if (pos_ < s_.size() && s_[pos_] == '\'') {
      ++pos_;
      while (true) {
        if (pos_ >= s_.size()) fail("unterminated string literal");
        if (s_[pos_] == '\'') {
          if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '\'') {
            out.push_back('\'');
            pos_ += 2;
            continue;
          }
          ++pos_;
          return out;
        }
        out.push_back(s_[pos_++]);
      }
    }
    const auto next = s_.find(" AND ", pos_);
    const std::size_t end = next == std::string::npos ? s_.size() : next;
    out = s_.substr(pos_, end - pos_);
    pos_ = end;
    return out;
  }

  const std::string& s_;
  const TableSchema& t_;
  std::size_t pos_ = 0;
};

}  // namespace

Query parse(const std::string& text, const TableSchema& table) { return Parser(text, table).run(); }

ResultSet execute(const Query& q, const TableSchema& table, const ExecOptions& opts) {
  validate(q, table);
  std::vector<const std::vector<data::Cell>*> kept;
  for (const auto& row : table.rows) {
    bool ok = true;
    for (const auto& c : q.conds) {
      // No short-circuit: every condition sees every row.
      ok = matches(row[static_cast<std::size_t>(c.col)], c, table, opts) && ok;
    }
    if (ok) kept.push_back(&row);
  }

  const auto sel = static_cast<std::size_t>(q.sel_col);
  const auto& sel_name = table.columns[sel].name;
  ResultSet rs;
  switch (q.agg) {
    case AggOp::kNone:
      for (const auto* row : kept) {
        const auto& cell = (*row)[sel];
        if (const auto* d = std::get_if<double>(&cell)) {
          rs.values.emplace_back(*d);
        } else {
          rs.values.emplace_back(std::get<std::string>(cell));
        }
      }
      break;
    case AggOp::kCount:
      rs.values.emplace_back(static_cast<double>(kept.size()));
      break;
    case AggOp::kMax:
    case AggOp::kMin:
    case AggOp::kSum:
    case AggOp::kAvg: {
      std::vector<double> xs;
      xs.reserve(kept.size());
      for (const auto* row : kept) xs.push_back(numeric_cell((*row)[sel], sel_name));
      if (xs.empty()) break;
      double v = 0.0;
      if (q.agg == AggOp::kMax) {
        v = *std::max_element(xs.begin(), xs.end());
      } else if (q.agg == AggOp::kMin) {
        v = *std::min_element(xs.begin(), xs.end());
      } else {
        for (double x : xs) v += x;
        if (q.agg == AggOp::kAvg) v /= static_cast<double>(xs.size());
      }
      rs.values.emplace_back(v);
      break;
    }
  }
  return rs;
}

bool exec_match(const ResultSet& a, const ResultSet& b) {
  if (a.values.size() != b.values.size()) return false;
  auto order = [](const Value& x, const Value& y) {
    if (x.index() != y.index()) return x.index() > y.index();  // numbers first
    return x < y;
  };
  std::vector<Value> xs = a.values;
  std::vector<Value> ys = b.values;
  std::sort(xs.begin(), xs.end(), order);
  std::sort(ys.begin(), ys.end(), order);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].index() != ys[i].index()) return false;
    if (const auto* dx = std::get_if<double>(&xs[i])) {
      if (std::fabs(*dx - std::get<double>(ys[i])) > 1e-6) return false;
    } else if (std::get<std::string>(xs[i]) != std::get<std::string>(ys[i])) {
      return false;
    }
  }
  return true;
}

Query eg_decode(const std::vector<ScoredQuery>& candidates, const TableSchema& table, const EgOptions& opts) {
  if (candidates.empty()) throw InputError("eg_decode: empty candidate list");
  if (opts.k < 1) throw InputError("eg_decode: k must be >= 1");
  const std::size_t limit = std::min(candidates.size(), static_cast<std::size_t>(opts.k));
  for (std::size_t i = 0; i < limit; ++i) {
    try {
      const ResultSet rs = execute(candidates[i].query, table, opts.exec);
      if (!opts.require_non_empty || !rs.empty()) return candidates[i].query;
    } catch (const SqlTypeError&) {
    } catch (const ValidationError&) {
    }
  }
  return candidates.front().query;
}

}  // namespace cfcdc::sql
