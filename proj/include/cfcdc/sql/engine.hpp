#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cfcdc/data/schema.hpp"
#include "cfcdc/sql/query.hpp"

namespace cfcdc::sql {

// Throws ValidationError when an index is out of range for `table`.
void validate(const Query& q, const data::TableSchema& table);

// Canonical display form:
//   SELECT <AGG>(<col>) FROM <table_id> WHERE <col> <op> <literal> AND ...
// NONE omits the wrapper. Literals on REAL columns that parse as numbers are
// bare; everything else is single-quoted with '' escaping.
std::string serialize(const Query& q, const data::TableSchema& table);

// Inverse of serialize for the canonical template. Column names are resolved
// against the schema, longest match first. Throws InputError on bad syntax.
Query parse(const std::string& text, const data::TableSchema& table);

using Value = std::variant<std::string, double>;

// Unordered multiset of values. Aggregates yield zero or one value.
struct ResultSet {
  std::vector<Value> values;
  bool empty() const { return values.empty(); }
};

struct ExecOptions {
  // Case-insensitive trimmed string equality (public WikiSQL evaluator behavior).
  bool case_insensitive = true;
};

// Filters rows by the conjunction of conditions, then aggregates the selected
// column. Every condition is evaluated on every row, so a type error does not
// depend on condition order. Throws SqlTypeError / ValidationError.
ResultSet execute(const Query& q, const data::TableSchema& table, const ExecOptions& opts = {});

// Multiset equality; numbers match within an absolute 1e-6.
bool exec_match(const ResultSet& a, const ResultSet& b);

// Parses a trimmed decimal literal; nullopt if it is not a finite number.
std::optional<double> to_number(const std::string& s);

struct ScoredQuery {
  Query query;
  double score = 0.0;
};

struct EgOptions {
  int k = 8;
  bool require_non_empty = true;
  ExecOptions exec;
};

// Execution-guided selection: the first of the top-k candidates that executes
// without error (and, by default, with a non-empty result); top-1 otherwise.
// Candidates must be sorted by descending score. Throws InputError if empty.
Query eg_decode(const std::vector<ScoredQuery>& candidates, const data::TableSchema& table,
                const EgOptions& opts = {});

}  // namespace cfcdc::sql
