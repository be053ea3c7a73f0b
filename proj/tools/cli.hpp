#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "hashlab/evaluation.hpp"

namespace hashlab::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kTraining = 4 };

/// Runs the command line in-process; `argv[0]` is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Sets one method parameter from its config-file / --set spelling. Throws
/// InvalidArgument on an unknown key or a bad value.
void apply_parameter(TrainConfig& config, EncodingScheme& scheme, std::string_view key, std::string_view value);

/**
 * Declarative run, line-oriented:
 *
 *   # comment
 *   [run]
 *   train = train.bhds
 *   test = test.bhds
 *   lengths = 32,64,128,256
 *   queries = 20000
 *   seed = 1
 *   output = report.csv
 *
 *   [method itq]
 *   iterations = 50
 *
 *   [method splh-eta100]
 *   method = splh
 *   eta = 100
 *   pairs = knn:20
 *
 * Relative paths resolve against `base_dir`. Sections run in file order.
 */
struct RunConfig {
  std::filesystem::path train;
  std::filesystem::path test;
  std::filesystem::path output;
  SweepOptions options;
  std::uint64_t seed = 0;
  std::vector<MethodSpec> methods;
};

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir);

}  // namespace hashlab::cli
