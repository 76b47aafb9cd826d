#include <chrono>

#include "doctest.h"

#include "cfcdc/error.hpp"
#include "cfcdc/sql/engine.hpp"
#include "../support/oracle.hpp"

using namespace cfcdc;
using namespace cfcdc::sql;
using data::ColumnType;
using data::TableSchema;

namespace {

TableSchema dept_table() {
  TableSchema t;
  t.table_id = "t";
  t.columns = {{0, "department", ColumnType::kText}, {1, "age", ColumnType::kReal}};
  t.rows = {{std::string("CS"), 30.0}, {std::string("EE"), 20.0}, {std::string("CS"), 20.0}};
  return t;
}

}  // namespace

TEST_CASE("serialize follows the canonical template") {
  const auto t = dept_table();
  CHECK(serialize({1, AggOp::kAvg, {{0, CondOp::kEq, "CS"}}}, t) == "SELECT AVG(age) FROM t WHERE department = 'CS'");
  CHECK(serialize({0, AggOp::kNone, {}}, t) == "SELECT department FROM t");
  CHECK(serialize({0, AggOp::kNone, {{0, CondOp::kEq, "O'Brien"}}}, t) ==
        "SELECT department FROM t WHERE department = 'O''Brien'");
  CHECK(serialize({0, AggOp::kCount, {{1, CondOp::kGt, "20"}, {1, CondOp::kLt, "40"}}}, t) ==
        "SELECT COUNT(department) FROM t WHERE age > 20 AND age < 40");
  CHECK_THROWS_AS(serialize({7, AggOp::kNone, {}}, t), ValidationError);
  CHECK_THROWS_AS(serialize({0, AggOp::kNone, {{9, CondOp::kEq, "x"}}}, t), ValidationError);
}

TEST_CASE("parse inverts serialize on random queries") {
  nn::Rng rng(11);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    auto t = oracle::random_table(rng, i);
    auto q = oracle::random_query(rng, t);
    if (q.conds.size() > static_cast<std::size_t>(kMaxWhereNum)) continue;
    const std::string s = serialize(q, t);
    CHECK(parse(s, t) == q);
    CHECK(serialize(parse(s, t), t) == s);
    ++checked;
  }
  CHECK(checked > 250);
}

TEST_CASE("parse rejects malformed text") {
  const auto t = dept_table();
  CHECK_THROWS_AS(parse("SELECT nope FROM t", t), InputError);
  CHECK_THROWS_AS(parse("SELECT age FROM other", t), InputError);
  CHECK_THROWS_AS(parse("SELECT age FROM t WHERE age ~ 3", t), InputError);
  CHECK_THROWS_AS(parse("SELECT age FROM t WHERE department = 'CS", t), InputError);
}

TEST_CASE("execute examples") {
  const auto t = dept_table();
  SUBCASE("average over a filtered set") {
    const auto rs = execute({1, AggOp::kAvg, {{0, CondOp::kEq, "CS"}}}, t);
    REQUIRE(rs.values.size() == 1);
    CHECK(std::get<double>(rs.values[0]) == doctest::Approx(25.0).epsilon(1e-12));
  }
  SUBCASE("count with no match is zero") {
    const auto rs = execute({0, AggOp::kCount, {{0, CondOp::kEq, "ME"}}}, t);
    REQUIRE(rs.values.size() == 1);
    CHECK(std::get<double>(rs.values[0]) == 0.0);
  }
  SUBCASE("numeric aggregate over zero rows is empty") {
    CHECK(execute({1, AggOp::kMax, {{1, CondOp::kGt, "99"}}}, t).empty());
  }
  SUBCASE("string equality is case-insensitive and trimmed") {
    CHECK(execute({1, AggOp::kCount, {{0, CondOp::kEq, " cs "}}}, t).values == std::vector<Value>{2.0});
    ExecOptions exact;
    exact.case_insensitive = false;
    CHECK(execute({1, AggOp::kCount, {{0, CondOp::kEq, "cs"}}}, t, exact).values == std::vector<Value>{0.0});
  }
  SUBCASE("GT on text with a non-numeric cell is a type error") {
    TableSchema u;
    u.table_id = "u";
    u.columns = {{0, "x", ColumnType::kText}};
    u.rows = {{std::string("7")}, {std::string("abc")}};
    CHECK_THROWS_AS(execute({0, AggOp::kNone, {{0, CondOp::kGt, "5"}}}, u), SqlTypeError);
  }
  SUBCASE("AVG of integers is a float") {
    const auto rs = execute({1, AggOp::kAvg, {}}, t);
    CHECK(std::get<double>(rs.values[0]) == doctest::Approx(70.0 / 3.0));
  }
  SUBCASE("non-numeric literal on a real column") {
    CHECK_THROWS_AS(execute({1, AggOp::kNone, {{1, CondOp::kEq, "old"}}}, t), SqlTypeError);
  }
}

TEST_CASE("exec_match is an order-insensitive multiset comparison") {
  ResultSet a{{std::string("x"), 1.0, 2.0}};
  ResultSet b{{2.0, std::string("x"), 1.0}};
  CHECK(exec_match(a, a));
  CHECK(exec_match(a, b));
  CHECK(exec_match(ResultSet{{25.0}}, ResultSet{{25.0 + 1e-9}}));
  CHECK_FALSE(exec_match(ResultSet{{25.0}}, ResultSet{{25.1}}));
  CHECK_FALSE(exec_match(ResultSet{{1.0, 1.0}}, ResultSet{{1.0}}));
  CHECK_FALSE(exec_match(ResultSet{{std::string("1")}}, ResultSet{{1.0}}));
}

TEST_CASE("execute matches the brute-force oracle on 1000 random cases") {
  nn::Rng rng(2024);
  const auto t0 = std::chrono::steady_clock::now();
  int errors = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto t = oracle::random_table(rng, i);
    const auto q = oracle::random_query(rng, t);
    const auto want = oracle::run(q, t);
    INFO("case " << i << ": " << serialize(q, t));
    if (want.type_error) {
      CHECK_THROWS_AS(execute(q, t), SqlTypeError);
      ++errors;
    } else {
      CHECK(oracle::same(want, execute(q, t)));
    }
  }
  CHECK(errors > 0);
  CHECK(errors < 800);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 10.0);
}

TEST_CASE("eg_decode") {
  TableSchema t;
  t.table_id = "two";
  t.columns = {{0, "name", ColumnType::kText}, {1, "n", ColumnType::kReal}};
  t.rows = {{std::string("a"), 1.0}, {std::string("b"), 2.0}};
  const Query bad{0, AggOp::kSum, {}};                        // SUM over text: type error
  const Query empty{1, AggOp::kNone, {{1, CondOp::kGt, "9"}}};  // executes, no rows
  const Query good{1, AggOp::kNone, {{0, CondOp::kEq, "b"}}};

  CHECK(eg_decode({{good, 0.9}, {bad, 0.1}}, t) == good);
  CHECK(eg_decode({{bad, 0.6}, {good, 0.4}}, t) == good);
  CHECK(eg_decode({{empty, 0.6}, {good, 0.4}}, t) == good);
  CHECK(eg_decode({{bad, 0.6}, {empty, 0.4}}, t) == bad);
  CHECK(eg_decode({{bad, 0.6}, {good, 0.4}}, t, EgOptions{1, true, {}}) == bad);
  EgOptions lax;
  lax.require_non_empty = false;
  CHECK(eg_decode({{bad, 0.6}, {empty, 0.3}, {good, 0.1}}, t, lax) == empty);
  CHECK_THROWS_AS(eg_decode({}, t), InputError);
  CHECK_THROWS_AS(eg_decode({{good, 1.0}}, t, EgOptions{0, true, {}}), InputError);
}

TEST_CASE("eg_decode never returns an error when a clean alternative exists") {
  nn::Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto t = oracle::random_table(rng, i);
    std::vector<ScoredQuery> cands;
    for (int j = 0; j < 8; ++j) cands.push_back({oracle::random_query(rng, t), 1.0 - 0.1 * j});
    const Query chosen = eg_decode(cands, t);
    bool clean_exists = false;
    for (const auto& c : cands) {
      const auto o = oracle::run(c.query, t);
      clean_exists = clean_exists || (!o.type_error && (!o.numbers.empty() || !o.strings.empty()));
    }
    if (clean_exists) {
      const auto o = oracle::run(chosen, t);
      CHECK_FALSE(o.type_error);
      CHECK((!o.numbers.empty() || !o.strings.empty()));
    } else {
      CHECK(chosen == cands.front().query);
    }
  }
}
