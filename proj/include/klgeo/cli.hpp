// Command-line front end: `klgeo {sweep|geometry|check|gradcheck} [flags]`.
#pragma once

#include <iosfwd>
#include <string>

#include "klgeo/checks.hpp"
#include "klgeo/config.hpp"

namespace klgeo {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitIo = 2,
  kExitCheckFailed = 3,
};

/// Parses arguments, runs the subcommand and maps failures to exit codes.
/// Config precedence: defaults < --config file < KLGEO_SEED < explicit flags.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int cmd_sweep(const RunConfig& cfg, std::ostream& out);
int cmd_geometry(const RunConfig& cfg, std::ostream& out);
/// Runs the checks whose names start with `prefix`, prints the table and
/// returns kExitCheckFailed (naming the failures on `err`) if any fails.
int cmd_check(const CheckContext& ctx, const std::string& prefix, std::ostream& out,
              std::ostream& err);

}  // namespace klgeo
