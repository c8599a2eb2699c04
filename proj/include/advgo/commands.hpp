#pragma once

// Subcommands of the advgo tool. Every command except gtp writes
// resolved.cfg and manifest.txt into its output directory.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "advgo/runconfig.hpp"

namespace advgo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

struct CommandRequest {
  std::string command;
  RunConfig config;
  /// Empty: run.out_dir.
  std::filesystem::path out_dir;
  bool resume = false;
  std::vector<std::string> args;
};

const std::vector<std::string>& command_names();

/// Runs one command and maps failures to exit codes (2 for configuration and
/// input errors, 3 for I/O and everything else). `in`/`out` carry the GTP
/// session; progress and errors go to `log`.
int run_command(const CommandRequest& request, std::istream& in, std::ostream& out, std::ostream& log);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string content_hash(const std::string& bytes);

}  // namespace advgo
