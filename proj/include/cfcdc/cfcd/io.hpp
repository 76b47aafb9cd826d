#pragma once

#include <filesystem>
#include <memory>

#include "json.hpp"

#include "cfcdc/cfcd/cfcd.hpp"

namespace cfcdc::cfcd {

// Role checkpoint: module config and `extra` in the metadata, tensors under "module/".
void save_module(const std::filesystem::path& path, const CFCDModule& module, const nlohmann::json& extra = {});
// Throws ReferenceError when the file is missing, FormatError when it is not a role checkpoint.
std::unique_ptr<CFCDModule> load_module(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

}  // namespace cfcdc::cfcd
