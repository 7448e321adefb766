#include "osclaims/report.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace osclaims {

namespace {

std::string format_number(double x, int precision) {
    if (!std::isfinite(x)) {
        return {};
    }
    std::ostringstream out;
    out.precision(precision);
    out << x;
    return out.str();
}

std::string json_number(double x, int precision) {
    const std::string s = format_number(x, precision);
    return s.empty() ? "null" : s;
}

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

bool same_number(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same_optional(const std::optional<double>& a, const std::optional<double>& b) {
    if (a.has_value() != b.has_value()) {
        return false;
    }
    return !a || same_number(*a, *b);
}

double read_number(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

void write_csv(const Report& report, std::ostream& out, int precision) {
    out << "t,engine,quantity,value,stderr,residual_bound,seed,replicates,passed\n";
    for (const auto& row : report.rows) {
        out << format_number(row.t, precision) << ',' << row.engine << ',' << row.quantity << ','
            << format_number(row.value, precision) << ',';
        if (row.standard_error) {
            out << format_number(*row.standard_error, precision);
        }
        out << ',';
        if (row.residual_bound) {
            out << format_number(*row.residual_bound, precision);
        }
        out << ',';
        if (row.seed) {
            out << *row.seed;
        }
        out << ',';
        if (row.replicates) {
            out << *row.replicates;
        }
        out << ',';
        if (row.passed) {
            out << (*row.passed ? "true" : "false");
        }
        out << '\n';
    }
}

// Written by hand so that numbers carry exactly the requested digits.
void write_json(const Report& report, std::ostream& out, int precision) {
    out << "{\n  \"command\": " << json_string(report.command) << ",\n  \"passed\": ";
    if (report.passed) {
        out << (*report.passed ? "true" : "false");
    } else {
        out << "null";
    }
    out << ",\n  \"rows\": [";
    for (std::size_t k = 0; k < report.rows.size(); ++k) {
        const auto& row = report.rows[k];
        out << (k == 0 ? "\n" : ",\n") << "    {\"t\": " << json_number(row.t, precision)
            << ", \"engine\": " << json_string(row.engine) << ", \"quantity\": " << json_string(row.quantity)
            << ", \"value\": " << json_number(row.value, precision);
        if (row.standard_error) {
            out << ", \"stderr\": " << json_number(*row.standard_error, precision);
        }
        if (row.residual_bound) {
            out << ", \"residual_bound\": " << json_number(*row.residual_bound, precision);
        }
        if (row.seed) {
            out << ", \"seed\": " << *row.seed;
        }
        if (row.replicates) {
            out << ", \"replicates\": " << *row.replicates;
        }
        if (row.passed) {
            out << ", \"passed\": " << (*row.passed ? "true" : "false");
        }
        out << '}';
    }
    out << (report.rows.empty() ? "]\n}\n" : "\n  ]\n}\n");
}

} // namespace

bool same_report(const Report& a, const Report& b) {
    if (a.command != b.command || a.passed != b.passed || a.rows.size() != b.rows.size()) {
        return false;
    }
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        const auto& x = a.rows[k];
        const auto& y = b.rows[k];
        if (!same_number(x.t, y.t) || x.engine != y.engine || x.quantity != y.quantity ||
            !same_number(x.value, y.value) || !same_optional(x.standard_error, y.standard_error) ||
            !same_optional(x.residual_bound, y.residual_bound) || x.seed != y.seed ||
            x.replicates != y.replicates || x.passed != y.passed) {
            return false;
        }
    }
    return true;
}

void write_report(const Report& report, OutputFormat format, std::ostream& out, int precision) {
    if (format == OutputFormat::Csv) {
        write_csv(report, out, precision);
    } else {
        write_json(report, out, precision);
    }
}

void emit_report(const Report& report, OutputFormat format, const std::filesystem::path& path, int precision) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open report file '" + path.string() + "' for writing");
    }
    write_report(report, format, out, precision);
    out.flush();
    if (!out) {
        throw IoError("failed writing report file '" + path.string() + "'");
    }
}

Report read_report_json(std::istream& in) {
    Report report;
    try {
        const auto j = nlohmann::json::parse(in);
        report.command = j.at("command").get<std::string>();
        if (!j.at("passed").is_null()) {
            report.passed = j.at("passed").get<bool>();
        }
        for (const auto& r : j.at("rows")) {
            ReportRow row;
            row.t = read_number(r.at("t"));
            row.engine = r.at("engine").get<std::string>();
            row.quantity = r.at("quantity").get<std::string>();
            row.value = read_number(r.at("value"));
            if (r.contains("stderr")) {
                row.standard_error = read_number(r.at("stderr"));
            }
            if (r.contains("residual_bound")) {
                row.residual_bound = read_number(r.at("residual_bound"));
            }
            if (r.contains("seed")) {
                row.seed = r.at("seed").get<std::uint64_t>();
            }
            if (r.contains("replicates")) {
                row.replicates = r.at("replicates").get<std::size_t>();
            }
            if (r.contains("passed")) {
                row.passed = r.at("passed").get<bool>();
            }
            report.rows.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed JSON report: ") + e.what());
    }
    return report;
}

Report read_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open report file '" + path.string() + "'");
    }
    return read_report_json(in);
}

} // namespace osclaims
