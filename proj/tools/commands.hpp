#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cfcdc/cfcc/cfcc.hpp"
#include "cfcdc/cfcc/train.hpp"
#include "cfcdc/cfcd/cfcd.hpp"
#include "cfcdc/cfcd/train.hpp"
#include "cfcdc/encoder/encoder.hpp"
#include "cfcdc/error.hpp"

namespace cfcdc::cli {

enum ExitCode : int {
  kOk = 0,
  kInvariantFailed = 1,
  kDataError = 2,
  kDiverged = 3,
  kExecutionFailed = 4,
  kUsage = 64,
};

// Bad flags, config keys or values. Maps to kUsage.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::uint64_t seed = 7;
  std::string device = "cpu";
  std::filesystem::path cache = "cache";
  std::filesystem::path checkpoints = "checkpoints";
  std::filesystem::path bundle = "bundle.ckpt";
  std::filesystem::path reports = "reports";
  int synthetic_dev = 200;
  int schema_pool = 40;

  encoder::EncoderConfig encoder;
  int lstm_dim = 64;
  double mask_c = 1e4;
  cfcd::RDropConfig rdrop;
  cfcd::FGMConfig fgm;
  cfcd::TrainConfig train;
  cfcc::CoupleConfig couple;
  int couple_lstm_dim = 64;
  cfcc::VotingConfig voting;
  int k = 8;
};

// Every recognised "section.key".
std::vector<std::string> config_keys();

// Defaults, then the INI file, then "section.key=value" overrides, then
// CFCDC_SECTION_KEY environment variables. Unknown keys are usage errors.
RunConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

// Full command line without the program name. Writes normal output to `out`
// and diagnostics to `err`; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cfcdc::cli
