#include "cfcdc/data/schema.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "cfcdc/error.hpp"

namespace cfcdc::data {

std::string_view type_word(ColumnType t) { return t == ColumnType::kReal ? "real" : "text"; }

std::string format_number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char shortbuf[32];
    std::snprintf(shortbuf, sizeof(shortbuf), "%.*g", prec, v);
    if (std::strtod(shortbuf, nullptr) == v) return shortbuf;
  }
  return buf;
}

std::string cell_text(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return format_number(std::get<double>(c));
}

void TableSchema::validate() const {
  if (table_id.empty()) throw ValidationError("table with empty id");
  std::set<int> seen;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const ColumnSpec& c = columns[i];
    if (c.index != static_cast<int>(i)) throw ValidationError(table_id + ": column index out of order");
    if (!seen.insert(c.index).second) throw ValidationError(table_id + ": duplicate column index");
    if (c.name.empty()) throw ValidationError(table_id + ": empty column name");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != columns.size()) {
      throw ValidationError(table_id + ": row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                            " cells, expected " + std::to_string(columns.size()));
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (columns[i].ctype == ColumnType::kReal) {
        const auto* d = std::get_if<double>(&row[i]);
        if (d == nullptr || !std::isfinite(*d)) {
          throw ValidationError(table_id + ": non-numeric cell in real column '" + columns[i].name + "'");
        }
      } else if (!std::holds_alternative<std::string>(row[i])) {
        throw ValidationError(table_id + ": numeric cell stored in text column '" + columns[i].name + "'");
      }
    }
  }
}

void validate_label(const SQLLabel& label, const TableSchema& table) {
  const int width = static_cast<int>(table.width());
  if (label.sel_col < 0 || label.sel_col >= width) {
    throw ValidationError("sel column " + std::to_string(label.sel_col) + " out of range for table " +
                          table.table_id);
  }
  if (label.conds.size() > static_cast<std::size_t>(sql::kMaxWhereNum)) {
    throw ValidationError("more than " + std::to_string(sql::kMaxWhereNum) + " conditions");
  }
  for (const auto& c : label.conds) {
    if (c.col < 0 || c.col >= width) {
      throw ValidationError("condition column " + std::to_string(c.col) + " out of range for table " +
                            table.table_id);
    }
  }
}

}  // namespace cfcdc::data
