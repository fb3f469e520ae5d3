#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "microloc/config.hpp"
#include "microloc/geometry.hpp"

namespace microloc {

enum ExitCode { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2, kExitNonConvergence = 3 };

struct CliOptions {
  std::string config_path;
  std::string out_dir = ".";
  int jobs = 0;  // 0: hardware concurrency
  std::string seed_list;
  std::vector<std::string> checks;
  std::string format;              // csv or json; empty: per-command default
  double tolerance_scale = 1.0;    // from MICROLOC_TOLERANCE_SCALE
};

int exit_code_for(ErrorCode code);

MetricSpec metric_from_config(const Config& cfg);

// Runs the command named in [command] and writes its files under out_dir.
// Progress and summaries go to `out`; a one-line JSON error record goes to `err`.
int run_command(const CliOptions& options, std::ostream& out, std::ostream& err);

// Flag parsing (CLI11) then run_command on std::cout / std::cerr.
int run_cli(int argc, char** argv);

}  // namespace microloc
