#ifndef OSCLAIMS_REPORT_HPP
#define OSCLAIMS_REPORT_HPP

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "osclaims/config.hpp"
#include "osclaims/errors.hpp"

namespace osclaims {

// A report file could not be written or read.
class IoError : public Error {
public:
    using Error::Error;
};

struct ReportRow {
    double t = 0.0;
    std::string engine;
    std::string quantity;
    double value = 0.0;
    std::optional<double> standard_error;
    std::optional<double> residual_bound;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    // Set on validation gates only.
    std::optional<bool> passed;
};

struct Report {
    std::string command;
    std::vector<ReportRow> rows;
    std::optional<bool> passed;
};

// Field-wise equality; NaN matches NaN.
bool same_report(const Report& a, const Report& b);

// CSV columns: t, engine, quantity, value, stderr, residual_bound, seed,
// replicates, passed (empty when absent). JSON carries the same fields per
// row, plus the command and overall verdict. Non-finite numbers are written
// as empty cells / null.
void write_report(const Report& report, OutputFormat format, std::ostream& out, int precision = 17);
void emit_report(const Report& report, OutputFormat format, const std::filesystem::path& path, int precision = 17);

Report read_report_json(std::istream& in);
Report read_report_json(const std::filesystem::path& path);

} // namespace osclaims

#endif
