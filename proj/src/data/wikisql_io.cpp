#include "cfcdc/data/wikisql_io.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "cfcdc/error.hpp"

namespace cfcdc::data {

using nlohmann::json;

namespace {

std::string scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_number(v.get<double>());
  throw ValidationError("expected a string or number, got " + v.dump());
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  while (end != nullptr && *end == ' ') ++end;
  return end != nullptr && *end == '\0' && std::isfinite(out);
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    fn(j, lineno);
  }
}

}  // namespace

TableSchema table_from_json(const json& j) {
  TableSchema t;
  t.table_id = j.at("id").get<std::string>();
  const auto& header = j.at("header");
  const auto& types = j.at("types");
  if (header.size() != types.size()) throw ValidationError(t.table_id + ": header/types length mismatch");
  for (std::size_t i = 0; i < header.size(); ++i) {
    ColumnSpec c;
    c.index = static_cast<int>(i);
    c.name = header[i].get<std::string>();
    const auto tw = types[i].get<std::string>();
    if (tw == "real") {
      c.ctype = ColumnType::kReal;
    } else if (tw == "text") {
      c.ctype = ColumnType::kText;
    } else {
      throw ValidationError(t.table_id + ": unknown column type '" + tw + "'");
    }
    t.columns.push_back(std::move(c));
  }
  for (const auto& row : j.at("rows")) {
    std::vector<Cell> cells;
    std::size_t i = 0;
    for (const auto& v : row) {
      if (i < t.columns.size() && t.columns[i].ctype == ColumnType::kReal) {
        double d = 0.0;
        if (v.is_number()) {
          cells.emplace_back(v.get<double>());
        } else if (v.is_string() && parse_double(v.get<std::string>(), d)) {
          cells.emplace_back(d);
        } else {
          throw ValidationError(t.table_id + ": non-numeric cell " + v.dump() + " in real column '" +
                                t.columns[i].name + "'");
        }
      } else {
        cells.emplace_back(scalar_to_string(v));
      }
      ++i;
    }
    t.rows.push_back(std::move(cells));
  }
  t.validate();
  return t;
}

json table_to_json(const TableSchema& t) {
  json header = json::array();
  json types = json::array();
  for (const auto& c : t.columns) {
    header.push_back(c.name);
    types.push_back(std::string(type_word(c.ctype)));
  }
  json rows = json::array();
  for (const auto& r : t.rows) {
    json row = json::array();
    for (const auto& cell : r) {
      if (const auto* d = std::get_if<double>(&cell)) {
        row.push_back(*d);
      } else {
        row.push_back(std::get<std::string>(cell));
      }
    }
    rows.push_back(std::move(row));
  }
  return json{{"id", t.table_id}, {"header", header}, {"types", types}, {"rows", rows}};
}

NLExample example_from_json(const json& j) {
  NLExample e;
  e.question = j.at("question").get<std::string>();
  e.table_id = j.at("table_id").get<std::string>();
  const auto& s = j.at("sql");
  e.label.sel_col = s.at("sel").get<int>();
  const auto agg = sql::agg_from_code(s.at("agg").get<int>());
  if (!agg) throw ValidationError("agg code out of range: " + s.at("agg").dump());
  e.label.agg = *agg;
  for (const auto& c : s.at("conds")) {
    if (!c.is_array() || c.size() != 3) throw ValidationError("condition must be [col, op, value]");
    sql::Condition cond;
    cond.col = c[0].get<int>();
    const auto op = sql::cond_from_code(c[1].get<int>());
    if (!op) throw ValidationError("condition op code out of range: " + c[1].dump());
    cond.op = *op;
    cond.value = scalar_to_string(c[2]);
    e.label.conds.push_back(std::move(cond));
  }
  if (e.question.empty()) throw ValidationError("empty question");
  return e;
}

json label_to_json(const SQLLabel& label) {
  json conds = json::array();
  for (const auto& c : label.conds) conds.push_back(json::array({c.col, static_cast<int>(c.op), c.value}));
  return json{{"sel", label.sel_col}, {"agg", static_cast<int>(label.agg)}, {"conds", conds}};
}

json example_to_json(const NLExample& e) {
  return json{{"question", e.question}, {"table_id", e.table_id}, {"sql", label_to_json(e.label)}};
}

TableStore read_tables(std::istream& in) {
  TableStore store;
  for_each_line(in, [&](const json& j, std::size_t lineno) {
    TableSchema t;
    try {
      t = table_from_json(j);
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad table record: ") + e.what(), lineno);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string id = t.table_id;
    if (!store.emplace(id, std::move(t)).second) {
      throw ValidationError("line " + std::to_string(lineno) + ": duplicate table id " + id);
    }
  });
  return store;
}

TableStore load_tables(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ReferenceError("cannot open table file: " + path.string());
  return read_tables(in);
}

std::vector<NLExample> read_examples(std::istream& in, const TableStore& tables) {
  std::vector<NLExample> out;
  for_each_line(in, [&](const json& j, std::size_t lineno) {
    NLExample e;
    try {
      e = example_from_json(j);
    } catch (const json::exception& ex) {
      throw ParseError(std::string("bad example record: ") + ex.what(), lineno);
    } catch (const ValidationError& ex) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + ex.what());
    }
    auto it = tables.find(e.table_id);
    if (it == tables.end()) {
      throw ReferenceError("line " + std::to_string(lineno) + ": unknown table_id " + e.table_id);
    }
    try {
      validate_label(e.label, it->second);
    } catch (const ValidationError& ex) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + ex.what());
    }
    out.push_back(std::move(e));
  });
  return out;
}

std::vector<NLExample> load_examples(const std::filesystem::path& path, const TableStore& tables) {
  std::ifstream in(path);
  if (!in) throw ReferenceError("cannot open example file: " + path.string());
  return read_examples(in, tables);
}

void write_tables(const std::filesystem::path& path, const TableStore& tables) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ReferenceError("cannot write table file: " + path.string());
  for (const auto& [id, t] : tables) out << table_to_json(t).dump() << '\n';
}

void write_examples(const std::filesystem::path& path, const std::vector<NLExample>& examples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ReferenceError("cannot write example file: " + path.string());
  for (const auto& e : examples) out << example_to_json(e).dump() << '\n';
}

}  // namespace cfcdc::data
