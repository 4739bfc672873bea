#pragma once

#include "hodohj/cli/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hodohj::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitGateFailed = 3;

/// solve, verify, transform, conjugate, compare, rank-map
const std::vector<std::string>& command_names();

struct DispatchOptions {
  std::optional<std::filesystem::path> out;  ///< overrides output.directory
  std::size_t workers = 1;
};

/// Runs one command and writes its artifacts. Returns 0, 2 (invalid input or
/// any other error) or 3 (a configured gate failed); nonzero codes come with
/// a diagnostic on `err`.
int dispatch(const std::string& command, const RunConfig& cfg, const DispatchOptions& opts,
             std::ostream& err);

/// Full command line: hodohj <command> --config <path> [--out <dir>]
/// [--workers N] [--override key=value ...].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hodohj::cli
