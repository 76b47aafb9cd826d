#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "json.hpp"

#include "cfcdc/data/schema.hpp"

namespace cfcdc::data {

// WikiSQL JSON-Lines layouts.
//   tables:   {"id", "header": [..], "types": ["text"|"real", ..], "rows": [[..], ..]}
//   examples: {"question", "table_id", "sql": {"sel", "agg", "conds": [[col, op, value], ..]}}

TableSchema table_from_json(const nlohmann::json& j);
nlohmann::json table_to_json(const TableSchema& t);

NLExample example_from_json(const nlohmann::json& j);
nlohmann::json example_to_json(const NLExample& e);
nlohmann::json label_to_json(const SQLLabel& label);

TableStore load_tables(const std::filesystem::path& path);
TableStore read_tables(std::istream& in);

// One example per line in file order. Errors carry the 1-based line number.
std::vector<NLExample> load_examples(const std::filesystem::path& path, const TableStore& tables);
std::vector<NLExample> read_examples(std::istream& in, const TableStore& tables);

void write_tables(const std::filesystem::path& path, const TableStore& tables);
void write_examples(const std::filesystem::path& path, const std::vector<NLExample>& examples);

}  // namespace cfcdc::data
