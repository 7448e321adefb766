#ifndef OSCLAIMS_CLI_HPP
#define OSCLAIMS_CLI_HPP

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "osclaims/config.hpp"
#include "osclaims/report.hpp"

namespace osclaims {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitNumeric = 3,
    kExitValidation = 4,
    kExitIo = 5,
};

enum class Command { Mean, SecondMoment, Variance, Simulate, Validate, Asymptote };

std::string to_string(Command command);

// Engines a configuration supports: the closed form needs a mixed (or
// homogeneous) Poisson process with Boudreault or independent claims, the
// quadrature engines accept every model, simulation always applies.
struct EngineSupport {
    bool closed_mean = false;
    bool closed_second = false;
    bool quadrature = true;
    bool simulate = true;
};

EngineSupport engine_support(const RunConfig& cfg);

// Build the report of a subcommand. Throws ConfigError, NumericFailure,
// InfiniteMoment or DegenerateProcess; a failed validation gate is recorded
// in the report, not thrown.
Report build_report(Command command, const RunConfig& cfg);

// One-line stdout summary of a report.
std::string summarize(const Report& report);

// Entry point: parse argv, run, write the report. Returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace osclaims

#endif
