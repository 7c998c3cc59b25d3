#pragma once

#include "curbflow/config.hpp"

namespace curbflow {

// Each command reads its inputs from `config`, writes into `config.out`
// (created if needed) and persists the resolved configuration there as
// resolved_config.json. Errors propagate as exceptions; run_cli maps them to
// exit codes.
void cmd_ingest(const RunConfig& config);
void cmd_estimate(const RunConfig& config);
void cmd_reroute(const RunConfig& config);
void cmd_synth(const RunConfig& config);
void cmd_lagmodel(const RunConfig& config);
void cmd_report(const RunConfig& config);

// Parses `curbflow <command> [flags]` and returns the process exit code.
int run_cli(int argc, const char* const* argv);

} // namespace curbflow
