#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cfcdc/data/schema.hpp"
#include "cfcdc/data/tokenizer.hpp"

namespace cfcdc::data {

inline constexpr int kCacheVersion = 1;

// An example with one tokenized candidate per table column, in column order.
struct PreparedExample {
  NLExample example;
  std::vector<TokenizedInput> candidates;
};

PreparedExample prepare_example(const NLExample& ex, const TableSchema& table, const Vocabulary& vocab,
                                int max_seq_len);
std::vector<PreparedExample> prepare_split(const std::vector<NLExample>& examples, const TableStore& tables,
                                           const Vocabulary& vocab, int max_seq_len);

// Vocabulary over training questions, column names and the type words.
Vocabulary build_vocabulary(const std::vector<NLExample>& train, const TableStore& tables);

struct DatasetCache {
  std::string source;  // "synthetic" or the input directory
  std::uint64_t seed = 0;
  int max_seq_len = 64;
  Vocabulary vocab;
  TableStore tables;
  std::vector<PreparedExample> train;
  std::vector<PreparedExample> dev;
};

// Directory layout: cache.json (versioned, tokenized splits), vocab.txt,
// tables.jsonl, train.jsonl, dev.jsonl.
void write_cache(const std::filesystem::path& dir, const DatasetCache& cache);
// Throws FormatError on a version mismatch or an unreadable cache.
DatasetCache read_cache(const std::filesystem::path& dir);

}  // namespace cfcdc::data
