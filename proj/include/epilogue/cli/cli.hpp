#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "epilogue/core/error.hpp"

namespace epilogue::cli {

// Process exit codes. Stable across releases.
enum Exit : int {
  exit_ok = 0,
  exit_usage = 1,
  exit_format = 2,
  exit_corruption = 3,
  exit_config = 4,
  exit_kind_mismatch = 5,
};

int exit_code_for(ErrorCode code);

/// Runs one command line (without the program name):
///
///   inspect <file> [--episode I [--step J]] [--format text|json]
///   validate <file> [--format text|json]
///   stats <file> --field SEL [--bins N] [--format text|json]
///   convert --alignment sar|rsa <in> <out>
///   record --env gridpickplace --agent planner|random [--eps E] --episodes N
///          --seed S --out FILE [--time-limit T] [--fixed-length] [--images]
///   pipeline --spec FILE [--format text|json]
///   serve [--root DIR] [--host H] [--port P] [--benchmark [--steps N]]
///
/// EPILOGUE_CACHE_DIR overrides the catalog cache used by pipeline inputs.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace epilogue::cli
