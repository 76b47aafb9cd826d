#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "cfcdc/cfcc/assemble.hpp"
#include "cfcdc/cfcc/cfcc.hpp"
#include "cfcdc/cfcd/cfcd.hpp"
#include "cfcdc/data/cache.hpp"
#include "cfcdc/sql/engine.hpp"

namespace cfcdc::cfcc {

struct PredictOptions {
  bool eg = false;
  int k = 8;
  sql::ExecOptions exec;
};

// Everything the predictor knows about one candidate column.
struct ColumnView {
  int col = 0;
  cfcd::CandidateScores sel;
  cfcd::CandidateScores whr;
  cfcd::CandidateScores sw;
  std::map<ifcd::TaskId, nn::Matrix> coupled;
  std::map<ifcd::TaskId, nn::Matrix> voted;
};

struct ValueSpan {
  int start = 0;  // question-token indices, inclusive
  int end = 0;
  double score = 0.0;
};

// Best spans by start(i) * end(j) with i <= j < i + max_len, best first.
std::vector<ValueSpan> top_spans(const nn::Matrix& start, const nn::Matrix& end, int k, int max_len = 8);

struct Prediction {
  SQLComponents components;
  Assembled assembled;
  sql::Query query;  // final answer (EG choice when enabled)
  std::vector<sql::ScoredQuery> candidates;
  nlohmann::json scores;
};

// The three CFCD modules, the CFCC model and the vocabulary, loadable from one file.
class Predictor {
 public:
  Predictor(data::Vocabulary vocab, int max_seq_len, std::unique_ptr<cfcd::CFCDModule> select,
            std::unique_ptr<cfcd::CFCDModule> where, std::unique_ptr<cfcd::CFCDModule> sw,
            std::unique_ptr<CFCCModel> cfcc, VotingConfig voting);

  static Predictor load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path, const nlohmann::json& provenance) const;

  std::vector<ColumnView> analyze(const std::vector<data::TokenizedInput>& candidates) const;
  Prediction predict(const std::string& question, const data::TableSchema& table, const PredictOptions& opts) const;
  Prediction predict(const data::PreparedExample& ex, const data::TableSchema& table,
                     const PredictOptions& opts) const;

  const data::Vocabulary& vocab() const { return vocab_; }
  int max_seq_len() const { return max_seq_len_; }
  VotingConfig& voting() { return voting_; }
  const VotingConfig& voting() const { return voting_; }
  const cfcd::CFCDModule& module(cfcd::ClauseRole r) const;
  const CFCCModel& cfcc() const { return *cfcc_; }
  const nlohmann::json& provenance() const { return provenance_; }

 private:
  Prediction decide(const std::string& question, const std::vector<data::TokenizedInput>& candidates,
                    const data::TableSchema& table, const PredictOptions& opts) const;

  data::Vocabulary vocab_;
  int max_seq_len_ = 64;
  std::unique_ptr<cfcd::CFCDModule> select_;
  std::unique_ptr<cfcd::CFCDModule> where_;
  std::unique_ptr<cfcd::CFCDModule> sw_;
  std::unique_ptr<CFCCModel> cfcc_;
  VotingConfig voting_;
  nlohmann::json provenance_;
};

}  // namespace cfcdc::cfcc
