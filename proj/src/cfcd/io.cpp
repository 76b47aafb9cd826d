#include "cfcdc/cfcd/io.hpp"

#include "cfcdc/error.hpp"
#include "cfcdc/nn/checkpoint.hpp"

namespace cfcdc::cfcd {

void save_module(const std::filesystem::path& path, const CFCDModule& module, const nlohmann::json& extra) {
  nlohmann::json meta = {{"format", "cfcdc-role"}, {"module", to_json(module.config())}, {"extra", extra}};
  nn::write_checkpoint(path, meta, {{"module", &module.store()}});
}

std::unique_ptr<CFCDModule> load_module(const std::filesystem::path& path, nlohmann::json* meta) {
  if (!std::filesystem::exists(path)) throw ReferenceError("checkpoint not found: " + path.string());
  const nn::Checkpoint ckpt = nn::read_checkpoint(path);
  if (ckpt.meta.value("format", "") != "cfcdc-role") throw FormatError("not a role checkpoint: " + path.string());
  auto module = std::make_unique<CFCDModule>(module_config_from_json(ckpt.meta.at("module")));
  nn::load_parameters(ckpt, "module", module->store());
  if (meta) *meta = ckpt.meta;
  return module;
}

}  // namespace cfcdc::cfcd
