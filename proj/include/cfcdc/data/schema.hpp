#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "cfcdc/sql/query.hpp"

namespace cfcdc::data {

enum class ColumnType { kText, kReal };

// "text" / "real", the WikiSQL type words.
std::string_view type_word(ColumnType t);

struct ColumnSpec {
  int index = 0;
  std::string name;
  ColumnType ctype = ColumnType::kText;

  bool operator==(const ColumnSpec&) const = default;
};

// TEXT columns hold strings, REAL columns hold finite doubles.
using Cell = std::variant<std::string, double>;

// Display form of a cell: strings verbatim, numbers without a trailing ".0".
std::string cell_text(const Cell& c);
std::string format_number(double v);

struct TableSchema {
  std::string table_id;
  std::vector<ColumnSpec> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t width() const { return columns.size(); }
  // Throws ValidationError when a structural invariant is broken.
  void validate() const;
};

using SQLLabel = sql::Query;

struct NLExample {
  std::string question;
  std::string table_id;
  SQLLabel label;

  bool operator==(const NLExample&) const = default;
};

using TableStore = std::map<std::string, TableSchema>;

// Throws ValidationError when a label index is out of range for `table`.
void validate_label(const SQLLabel& label, const TableSchema& table);

}  // namespace cfcdc::data
