#pragma once

#include "cbo/errors.hpp"

#include <iosfwd>

namespace cbo {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_usage = 2,
    exit_protocol = 3,
    exit_numeric = 4,
    exit_io = 5,
    exit_invalid_state = 6,
    exit_data = 7,
};

int exit_code_for(ErrorKind kind) noexcept;

/// Environment variable naming the default campaign directory.
inline constexpr const char* kCampaignDirEnv = "CBO_CAMPAIGN_DIR";

/// Entry point of the `cbo` tool. Subcommands: init, propose, ingest, evaluate,
/// run, report, slices. All files are read from and written to the campaign directory.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace cbo
