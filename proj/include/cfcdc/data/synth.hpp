#pragma once

#include <cstdint>
#include <vector>

#include "cfcdc/data/schema.hpp"

namespace cfcdc::data {

struct SynthOptions {
  int n_train = 500;
  int n_dev = 200;
  int schema_pool_size = 40;
  int text_columns = 3;
  int real_columns = 3;
  int rows_per_table = 12;
};

struct SynthDataset {
  TableStore tables;
  std::vector<NLExample> train;
  std::vector<NLExample> dev;
};

// Template-generated questions over sampled tables. Deterministic in `seed`.
// Every label names its columns and values verbatim in the question and is
// anchored on a table row, so it executes to a non-empty result.
SynthDataset synth_dataset(std::uint64_t seed, const SynthOptions& opts);

// Convenience form: dev split of max(1, n_examples * 2 / 5) examples.
SynthDataset synth_dataset(std::uint64_t seed, int n_examples, int schema_pool_size);

}  // namespace cfcdc::data
