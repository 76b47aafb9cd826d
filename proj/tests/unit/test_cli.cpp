#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "commands.hpp"
#include "cfcdc/error.hpp"
#include "cfcdc/nn/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace cfcdc;
using cli::run_cli;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("cfcdc_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const std::vector<std::string> kTiny = {
    "--set", "encoder.n_layers=1",    "--set", "encoder.hidden_dim=8", "--set", "encoder.n_heads=2",
    "--set", "encoder.ffn_dim=8",     "--set", "encoder.max_seq_len=32", "--set", "ifcd.lstm_dim=3",
    "--set", "couple.lstm_dim=3",     "--set", "train.epochs=1",       "--set", "couple.epochs=1",
    "--set", "data.synthetic_dev=12", "--set", "data.schema_pool=4"};

std::vector<std::string> with_tiny(const fs::path& work, std::vector<std::string> args) {
  std::vector<std::string> full = {"--workdir", work.string()};
  full.insert(full.end(), kTiny.begin(), kTiny.end());
  full.insert(full.end(), args.begin(), args.end());
  return full;
}

}  // namespace

TEST_CASE("configuration precedence") {
  const auto d = scratch("config");
  {
    std::ofstream(d / "c.ini") << "[train]\nepochs = 11\nbatch_size = 5\n[voting]\nalpha = 0.25\n";
  }
  auto cfg = cli::load_config(d / "c.ini", {});
  CHECK(cfg.train.epochs == 11);
  CHECK(cfg.voting.alpha == 0.25);
  CHECK(cfg.k == 8);

  cfg = cli::load_config(d / "c.ini", {"train.epochs=12"});
  CHECK(cfg.train.epochs == 12);
  CHECK(cfg.train.batch_size == 5);

  ::setenv("CFCDC_TRAIN_EPOCHS", "13", 1);
  cfg = cli::load_config(d / "c.ini", {"train.epochs=12"});
  ::unsetenv("CFCDC_TRAIN_EPOCHS");
  CHECK(cfg.train.epochs == 13);

  CHECK_THROWS_AS(cli::load_config(d / "c.ini", {"train.nonsense=1"}), cli::UsageError);
  CHECK_THROWS_AS(cli::load_config(d / "c.ini", {"train.epochs"}), cli::UsageError);
  {
    std::ofstream(d / "bad.ini") << "[mystery]\nx = 1\n";
  }
  CHECK_THROWS_AS(cli::load_config(d / "bad.ini", {}), cli::UsageError);
  for (const auto& k : cli::config_keys()) CHECK(k.find('.') != std::string::npos);
}

TEST_CASE("usage errors exit 64") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({"prepare", "--bogus"}).code == cli::kUsage);
  CHECK(run({"train", "--role", "from"}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
}

TEST_CASE("malformed input exits 2") {
  const auto d = scratch("malformed");
  {
    std::ofstream(d / "t.jsonl") << R"({"id":"t","header":["a"],"types":["text"],"rows":[["x"]]})" << "\n";
    std::ofstream(d / "q.jsonl") << R"({"question":"a?","table_id":"t","sql":{"sel":0,"agg":0,"conds":[]}})"
                                 << "\n{not json\n";
  }
  const auto r = run({"--workdir", d.string(), "prepare", "--tables", "t.jsonl", "--train", "q.jsonl", "--dev",
                      "q.jsonl", "--out", "cache"});
  CHECK(r.code == cli::kDataError);
  INFO(r.err);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("tiny pipeline: determinism, missing checkpoints, query") {
  const auto a = scratch("pipe_a"), b = scratch("pipe_b");
  for (const auto& d : {a, b}) {
    const auto r = run(with_tiny(d, {"prepare", "--synthetic", "30", "--seed", "5"}));
    REQUIRE(r.code == 0);
  }
  CHECK(nn::file_digest(a / "cache" / "cache.json") == nn::file_digest(b / "cache" / "cache.json"));

  for (const auto& d : {a, b}) REQUIRE(run(with_tiny(d, {"train", "--role", "select"})).code == 0);
  CHECK(nn::file_digest(a / "checkpoints" / "select.ckpt") == nn::file_digest(b / "checkpoints" / "select.ckpt"));
  CHECK(fs::exists(a / "checkpoints" / "select.epoch1.ckpt"));

  REQUIRE(run(with_tiny(a, {"train", "--role", "where"})).code == 0);
  const auto missing = run(with_tiny(a, {"couple"}));
  CHECK(missing.code == cli::kDataError);
  CHECK(missing.err.find("'sw'") != std::string::npos);

  REQUIRE(run(with_tiny(a, {"train", "--role", "sw"})).code == 0);
  REQUIRE(run(with_tiny(a, {"couple"})).code == 0);
  const auto ev = run(with_tiny(a, {"evaluate", "--split", "dev"}));
  CHECK((ev.code == 0 || ev.code == cli::kInvariantFailed));
  CHECK(fs::exists(a / "reports" / "dev.json"));
  CHECK(fs::exists(a / "reports" / "dev.predictions.jsonl"));

  {
    std::ofstream(a / "t.jsonl") << R"({"id":"people","header":["Name","Dept"],"types":["text","text"],)"
                                 << R"("rows":[["Ann","CS"],["Bob","Math"]]})" << "\n";
  }
  CHECK(run(with_tiny(a, {"query", "--table", "t.jsonl", "--table-id", "people", "--question", ""})).code ==
        cli::kUsage);
  const auto q = run(with_tiny(a, {"query", "--table", "t.jsonl", "--table-id", "people", "--question",
                                   "who is in CS", "--eg"}));
  CHECK((q.code == 0 || q.code == cli::kExecutionFailed));
  CHECK(q.out.find("SELECT") != std::string::npos);
}
