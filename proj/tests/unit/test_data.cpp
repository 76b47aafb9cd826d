#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"

#include "cfcdc/data/cache.hpp"
#include "cfcdc/data/synth.hpp"
#include "cfcdc/data/tokenizer.hpp"
#include "cfcdc/data/wikisql_io.hpp"
#include "cfcdc/error.hpp"
#include "cfcdc/nn/checkpoint.hpp"
#include "cfcdc/sql/engine.hpp"

using namespace cfcdc;
using namespace cfcdc::data;
namespace fs = std::filesystem;

namespace {

const char* kTables =
    R"({"id": "1-1", "header": ["department", "age"], "types": ["text", "real"], "rows": [["CS", 30], ["EE", 20]]})"
    "\n";

TableStore tables() {
  std::istringstream in(kTables);
  return read_tables(in);
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cfcdc_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("load_examples reads the WikiSQL layout") {
  const auto ts = tables();
  REQUIRE(ts.size() == 1);
  const auto& t = ts.at("1-1");
  CHECK(t.columns[1].ctype == ColumnType::kReal);
  CHECK(std::get<double>(t.rows[0][1]) == 30.0);

  std::istringstream in(
      R"({"question": "what is the average age in CS", "table_id": "1-1", "sql": {"sel": 1, "agg": 5, "conds": [[0, 0, "CS"]]}})"
      "\n");
  const auto ex = read_examples(in, ts);
  REQUIRE(ex.size() == 1);
  CHECK(ex[0].label.agg == sql::AggOp::kAvg);
  CHECK(ex[0].label.sel_col == 1);
  REQUIRE(ex[0].label.conds.size() == 1);
  CHECK(ex[0].label.conds[0].value == "CS");
}

TEST_CASE("numeric condition values are read as strings") {
  std::istringstream in(
      R"({"question": "q", "table_id": "1-1", "sql": {"sel": 0, "agg": 0, "conds": [[1, 1, 25]]}})"
      "\n");
  const auto ex = read_examples(in, tables());
  CHECK(ex[0].label.conds[0].value == "25");
}

TEST_CASE("empty file gives an empty list") {
  std::istringstream in("");
  CHECK(read_examples(in, tables()).empty());
}

TEST_CASE("load errors") {
  const auto ts = tables();
  SUBCASE("sel past the last column") {
    std::istringstream in(R"({"question": "q", "table_id": "1-1", "sql": {"sel": 2, "agg": 0, "conds": []}})");
    CHECK_THROWS_AS(read_examples(in, ts), ValidationError);
  }
  SUBCASE("malformed line carries its number") {
    std::istringstream in(
        R"({"question": "q", "table_id": "1-1", "sql": {"sel": 0, "agg": 0, "conds": []}})"
        "\n{not json\n");
    try {
      read_examples(in, ts);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("unknown table") {
    std::istringstream in(R"({"question": "q", "table_id": "nope", "sql": {"sel": 0, "agg": 0, "conds": []}})");
    CHECK_THROWS_AS(read_examples(in, ts), ReferenceError);
  }
  SUBCASE("bad agg code") {
    std::istringstream in(R"({"question": "q", "table_id": "1-1", "sql": {"sel": 0, "agg": 9, "conds": []}})");
    CHECK_THROWS_AS(read_examples(in, ts), Error);
  }
  SUBCASE("real column with a non-numeric cell") {
    std::istringstream in(R"({"id": "x", "header": ["a"], "types": ["real"], "rows": [["abc"]]})");
    CHECK_THROWS_AS(read_tables(in), ValidationError);
  }
  SUBCASE("ragged row") {
    std::istringstream in(R"({"id": "x", "header": ["a", "b"], "types": ["real", "text"], "rows": [[1]]})");
    CHECK_THROWS_AS(read_tables(in), ValidationError);
  }
}

TEST_CASE("records round-trip through JSON") {
  const auto ds = synth_dataset(3, 60, 8);
  const fs::path dir = temp_dir("roundtrip");
  write_tables(dir / "tables.jsonl", ds.tables);
  write_examples(dir / "train.jsonl", ds.train);
  const auto ts = load_tables(dir / "tables.jsonl");
  CHECK(ts.size() == ds.tables.size());
  for (const auto& [id, t] : ds.tables) {
    const auto& u = ts.at(id);
    CHECK(u.rows == t.rows);
    REQUIRE(u.columns.size() == t.columns.size());
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      CHECK(u.columns[i].name == t.columns[i].name);
      CHECK(u.columns[i].ctype == t.columns[i].ctype);
    }
  }
  CHECK(load_examples(dir / "train.jsonl", ts) == ds.train);
}

TEST_CASE("candidate serialization template") {
  CHECK(build_candidate_input({0, "age", ColumnType::kReal}, "what is the average age").serialized ==
        "real age : what is the average age");
  CHECK(build_candidate_input({0, "department", ColumnType::kText}, "who is in CS").serialized ==
        "text department : who is in CS");
  CHECK(build_candidate_input({0, "home team", ColumnType::kText}, "q").serialized == "text home team : q");
}

TEST_CASE("split_words") {
  const auto w = split_words("Who's 2.5 (in) CS?");
  std::vector<std::string> texts;
  for (const auto& t : w) texts.push_back(t.text);
  CHECK(texts == std::vector<std::string>{"who", "'", "s", "2.5", "(", "in", ")", "cs", "?"});
  CHECK(w[3].begin == 6);
  CHECK(w[3].end == 9);
}

TEST_CASE("tokenize layout") {
  const auto vocab = Vocabulary::build({"real age what is the average age"}, 1);
  const auto cand = build_candidate_input({3, "age", ColumnType::kReal}, "what is the average age");
  const auto t = tokenize(cand, vocab, 32);
  // [CLS] real age [SEP] what is the average age [SEP]
  REQUIRE(t.length() == 10);
  CHECK(t.token_ids.front() == Vocabulary::kCls);
  CHECK(std::count(t.token_ids.begin(), t.token_ids.end(), Vocabulary::kSep) == 2);
  CHECK(t.token_ids[3] == Vocabulary::kSep);
  CHECK(t.token_ids.back() == Vocabulary::kSep);
  CHECK(t.segment_mask == std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1, 1, 0});
  CHECK(t.match_mask == std::vector<int>{0, 0, 1, 0, 0, 0, 0, 0, 1, 0});
  CHECK(t.column_index == 3);
  CHECK(t.question_start == 4);
  CHECK(t.question_length() == 5);

  const auto oov = tokenize(build_candidate_input({0, "zzz", ColumnType::kText}, "qqq"), vocab, 32);
  CHECK(oov.token_ids[2] == Vocabulary::kUnk);
  CHECK(oov.token_ids[4] == Vocabulary::kUnk);
}

TEST_CASE("tokenize truncates the question tail first") {
  const Vocabulary vocab;
  std::string q;
  for (int i = 0; i < 40; ++i) q += "w" + std::to_string(i) + " ";
  const auto t = tokenize(build_candidate_input({0, "a b c", ColumnType::kText}, q), vocab, 16);
  CHECK(t.length() == 16);
  CHECK(t.token_ids.back() == Vocabulary::kSep);
  // text a b c stay; 16 - 3 specials - 4 column tokens = 9 question tokens
  int mask_sum = 0;
  for (int m : t.segment_mask) mask_sum += m;
  CHECK(mask_sum == 9);
  CHECK(t.question_length() == 9);
  CHECK(t.question_spans.front().first == 0);

  std::string long_name;
  for (int i = 0; i < 20; ++i) long_name += "n" + std::to_string(i) + " ";
  const auto u = tokenize(build_candidate_input({0, long_name, ColumnType::kText}, "q"), vocab, 8);
  CHECK(u.length() <= 8);
  CHECK(u.token_ids.back() == Vocabulary::kSep);
  CHECK(u.question_length() == 0);
  CHECK(u.question_start >= 3);

  CHECK_THROWS_AS(tokenize(build_candidate_input({0, "a", ColumnType::kText}, "q"), vocab, 7), InputError);
}

TEST_CASE("tokenize invariants over a synthetic split") {
  const auto ds = synth_dataset(9, 120, 10);
  const auto vocab = build_vocabulary(ds.train, ds.tables);
  for (int len : {8, 12, 48}) {
    for (const auto& pe : prepare_split(ds.train, ds.tables, vocab, len)) {
      for (const auto& t : pe.candidates) {
        CHECK(t.length() <= len);
        CHECK(t.segment_mask.size() == t.token_ids.size());
        CHECK(t.token_ids.front() == Vocabulary::kCls);
        CHECK(t.token_ids.back() == Vocabulary::kSep);
        CHECK(t.token_ids[static_cast<std::size_t>(t.question_start - 1)] == Vocabulary::kSep);
        CHECK(t.question_start >= 3);  // at least one column token
        for (int i = 0; i < t.length(); ++i) {
          const bool q = i >= t.question_start && i < t.question_start + t.question_length();
          CHECK(t.segment_mask[static_cast<std::size_t>(i)] == (q ? 1 : 0));
        }
      }
    }
  }
}

TEST_CASE("vocabulary save and load") {
  const auto v = Vocabulary::build({"b a a c"}, 1);
  CHECK(v.word(4) == "a");
  const fs::path dir = temp_dir("vocab");
  v.save(dir / "v.txt");
  CHECK(Vocabulary::load(dir / "v.txt") == v);
  {
    std::ofstream out(dir / "bad.txt");
    out << "a\nb\n";
  }
  CHECK_THROWS_AS(Vocabulary::load(dir / "bad.txt"), FormatError);
  CHECK_THROWS_AS(Vocabulary::load(dir / "missing.txt"), ReferenceError);
}

TEST_CASE("synthetic data") {
  const auto a = synth_dataset(7, 500, 40);
  const auto b = synth_dataset(7, 500, 40);
  CHECK(a.train.size() == 500);
  CHECK(a.train == b.train);
  CHECK(a.dev == b.dev);
  CHECK_FALSE(synth_dataset(8, 500, 40).train == a.train);

  std::set<int> aggs, ops, counts;
  for (const auto* split : {&a.train, &a.dev}) {
    for (const auto& ex : *split) {
      const auto& t = a.tables.at(ex.table_id);
      const auto rs = sql::execute(ex.label, t);
      CHECK_FALSE(rs.empty());
      aggs.insert(static_cast<int>(ex.label.agg));
      counts.insert(static_cast<int>(ex.label.conds.size()));
      std::set<int> cols;
      for (const auto& c : ex.label.conds) {
        ops.insert(static_cast<int>(c.op));
        cols.insert(c.col);
        CHECK(ex.question.find(c.value) != std::string::npos);
      }
      CHECK(cols.size() == ex.label.conds.size());
      CHECK(ex.question.find(t.columns[static_cast<std::size_t>(ex.label.sel_col)].name) != std::string::npos);
    }
  }
  CHECK(aggs.size() == 6);
  CHECK(ops.size() == 3);
  CHECK(counts == std::set<int>{0, 1, 2, 3, 4});
  CHECK_THROWS_AS(synth_dataset(7, 0, 40), InputError);
}

TEST_CASE("dataset cache round-trip and determinism") {
  auto make = [] {
    const auto ds = synth_dataset(5, 40, 6);
    DatasetCache c;
    c.source = "synthetic";
    c.seed = 5;
    c.max_seq_len = 32;
    c.tables = ds.tables;
    c.vocab = build_vocabulary(ds.train, ds.tables);
    c.train = prepare_split(ds.train, ds.tables, c.vocab, 32);
    c.dev = prepare_split(ds.dev, ds.tables, c.vocab, 32);
    return c;
  };
  const fs::path d1 = temp_dir("cache1");
  const fs::path d2 = temp_dir("cache2");
  const auto c = make();
  write_cache(d1, c);
  write_cache(d2, make());
  CHECK(nn::file_digest(d1 / "cache.json") == nn::file_digest(d2 / "cache.json"));

  const auto r = read_cache(d1);
  CHECK(r.vocab == c.vocab);
  CHECK(r.max_seq_len == 32);
  REQUIRE(r.train.size() == c.train.size());
  for (std::size_t i = 0; i < c.train.size(); ++i) {
    CHECK(r.train[i].example == c.train[i].example);
    REQUIRE(r.train[i].candidates.size() == c.train[i].candidates.size());
    for (std::size_t k = 0; k < c.train[i].candidates.size(); ++k) {
      const auto& x = r.train[i].candidates[k];
      const auto& y = c.train[i].candidates[k];
      CHECK(x.token_ids == y.token_ids);
      CHECK(x.segment_mask == y.segment_mask);
      CHECK(x.match_mask == y.match_mask);
      CHECK(x.question_spans == y.question_spans);
    }
  }

  CHECK_THROWS_AS(read_cache(temp_dir("empty")), ReferenceError);
  std::ifstream in(d1 / "cache.json");
  auto j = nlohmann::json::parse(in);
  j["version"] = kCacheVersion + 1;
  std::ofstream(d1 / "cache.json") << j.dump();
  CHECK_THROWS_AS(read_cache(d1), FormatError);
}
