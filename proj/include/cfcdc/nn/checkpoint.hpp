#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cfcdc/nn/tensor.hpp"

namespace cfcdc::nn {

// Binary checkpoint layout (little-endian):
//   "CFCDCKPT" | u32 version | u64 meta length | meta JSON text
//   | u64 tensor count | { u32 name length | name | u64 rows | u64 cols | f64[rows*cols] }*
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Matrix value;
};

struct Checkpoint {
  nlohmann::json meta;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
};

// A parameter store contributes its tensors under "<prefix>/<name>".
using StoreRef = std::pair<std::string, const ParameterStore*>;

void write_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta,
                      const std::vector<StoreRef>& stores);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Overwrites every parameter in `store` from "<prefix>/<name>" tensors.
// Throws FormatError on a missing tensor or a shape mismatch.
void load_parameters(const Checkpoint& ckpt, const std::string& prefix, ParameterStore& store);

// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

}  // namespace cfcdc::nn
