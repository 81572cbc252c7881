#pragma once

#include <string>

#include "output.hpp"

namespace qpert::cli {

// Each pipeline writes its files under ctx.out and returns 0 (all checks
// pass) or 2 (some acceptance check failed).  Errors propagate as exceptions.
int run_validate(const RunContext& ctx);
int run_solve_gs(const RunContext& ctx);
int run_spectrum_check(const RunContext& ctx);
int run_hoppings(const RunContext& ctx);
int run_dispersion(const RunContext& ctx);
int run_scatter(const RunContext& ctx);
int run_ed(const RunContext& ctx, const std::string& mode);
int run_report(const RunContext& ctx);

/// Dispatches `command` ("ed spectrum" style for the ed modes); returns the exit code,
/// mapping qpert::Error and std::exception to 1 with a message on stderr.
int run_command(RunContext ctx, const std::string& command);

}  // namespace qpert::cli
