#include "cfcdc/data/cache.hpp"

#include <fstream>

#include "json.hpp"

#include "cfcdc/data/wikisql_io.hpp"
#include "cfcdc/error.hpp"

namespace cfcdc::data {

namespace fs = std::filesystem;
using nlohmann::json;

PreparedExample prepare_example(const NLExample& ex, const TableSchema& table, const Vocabulary& vocab,
                                int max_seq_len) {
  PreparedExample out{ex, {}};
  out.candidates.reserve(table.columns.size());
  for (const auto& col : table.columns) {
    out.candidates.push_back(tokenize(build_candidate_input(col, ex.question), vocab, max_seq_len));
  }
  return out;
}

std::vector<PreparedExample> prepare_split(const std::vector<NLExample>& examples, const TableStore& tables,
                                           const Vocabulary& vocab, int max_seq_len) {
  std::vector<PreparedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    auto it = tables.find(ex.table_id);
    if (it == tables.end()) throw ReferenceError("unknown table_id: " + ex.table_id);
    out.push_back(prepare_example(ex, it->second, vocab, max_seq_len));
  }
  return out;
}

Vocabulary build_vocabulary(const std::vector<NLExample>& train, const TableStore& tables) {
  std::vector<std::string> texts = {"text real :"};
  for (const auto& ex : train) texts.push_back(ex.question);
  for (const auto& [id, t] : tables) {
    for (const auto& c : t.columns) texts.push_back(c.name);
  }
  return Vocabulary::build(texts);
}

namespace {

json candidate_to_json(const TokenizedInput& t) {
  json spans = json::array();
  for (const auto& [b, e] : t.question_spans) spans.push_back({b, e});
  return {{"ids", t.token_ids}, {"seg", t.segment_mask}, {"match", t.match_mask}, {"col", t.column_index}, {"qstart", t.question_start},
          {"spans", spans}};
}

TokenizedInput candidate_from_json(const json& j) {
  TokenizedInput t;
  t.token_ids = j.at("ids").get<std::vector<int>>();
  t.segment_mask = j.at("seg").get<std::vector<int>>();
  t.match_mask = j.at("match").get<std::vector<int>>();
  t.column_index = j.at("col").get<int>();
  t.question_start = j.at("qstart").get<int>();
  for (const auto& s : j.at("spans")) t.question_spans.emplace_back(s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>());
  return t;
}

json split_to_json(const std::vector<PreparedExample>& split) {
  json arr = json::array();
  for (const auto& p : split) {
    json cands = json::array();
    for (const auto& c : p.candidates) cands.push_back(candidate_to_json(c));
    arr.push_back({{"example", example_to_json(p.example)}, {"candidates", std::move(cands)}});
  }
  return arr;
}

std::vector<PreparedExample> split_from_json(const json& arr, const TableStore& tables) {
  std::vector<PreparedExample> out;
  for (const auto& item : arr) {
    PreparedExample p;
    p.example = example_from_json(item.at("example"));
    auto it = tables.find(p.example.table_id);
    if (it == tables.end()) throw ReferenceError("cache references unknown table_id: " + p.example.table_id);
    validate_label(p.example.label, it->second);
    for (const auto& c : item.at("candidates")) p.candidates.push_back(candidate_from_json(c));
    if (p.candidates.size() != it->second.columns.size()) throw FormatError("cache candidate count mismatch");
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<NLExample> raw(const std::vector<PreparedExample>& split) {
  std::vector<NLExample> out;
  for (const auto& p : split) out.push_back(p.example);
  return out;
}

}  // namespace

void write_cache(const fs::path& dir, const DatasetCache& cache) {
  fs::create_directories(dir);
  cache.vocab.save(dir / "vocab.txt");
  write_tables(dir / "tables.jsonl", cache.tables);
  write_examples(dir / "train.jsonl", raw(cache.train));
  write_examples(dir / "dev.jsonl", raw(cache.dev));
  json j = {{"format", "cfcdc-dataset-cache"},
            {"version", kCacheVersion},
            {"source", cache.source},
            {"seed", cache.seed},
            {"max_seq_len", cache.max_seq_len},
            {"vocab_size", cache.vocab.size()},
            {"train", split_to_json(cache.train)},
            {"dev", split_to_json(cache.dev)}};
  std::ofstream out(dir / "cache.json", std::ios::trunc);
  if (!out) throw ReferenceError("cannot write cache: " + (dir / "cache.json").string());
  out << j.dump() << '\n';
}

DatasetCache read_cache(const fs::path& dir) {
  std::ifstream in(dir / "cache.json");
  if (!in) throw ReferenceError("no dataset cache in " + dir.string() + " (run prepare first)");
  DatasetCache c;
  try {
    const json j = json::parse(in);
    if (j.at("format") != "cfcdc-dataset-cache") throw FormatError("not a dataset cache: " + dir.string());
    if (j.at("version").get<int>() != kCacheVersion) {
      throw FormatError("dataset cache version " + std::to_string(j.at("version").get<int>()) + " is not supported");
    }
    c.source = j.at("source").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.max_seq_len = j.at("max_seq_len").get<int>();
    c.vocab = Vocabulary::load(dir / "vocab.txt");
    if (c.vocab.size() != j.at("vocab_size").get<int>()) throw FormatError("vocabulary does not match cache");
    c.tables = load_tables(dir / "tables.jsonl");
    c.train = split_from_json(j.at("train"), c.tables);
    c.dev = split_from_json(j.at("dev"), c.tables);
  } catch (const json::exception& e) {
    throw FormatError(std::string("corrupt dataset cache: ") + e.what());
  }
  return c;
}

}  // namespace cfcdc::data
