#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "frozen_values.hpp"
#include "osclaims/cli.hpp"

using namespace osclaims;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = OSCLAIMS_CONFIG_DIR;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("osclaims-cli-" + std::to_string(::getpid()) + "-" +
                                             std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path_ / name) << text;
        return path_ / name;
    }

private:
    fs::path path_;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string slurp_config(const std::string& name) { return read_file(kConfigs / name); }

const ReportRow* find(const Report& r, const std::string& engine, const std::string& quantity, double t) {
    for (const auto& row : r.rows) {
        if (row.engine == engine && row.quantity == quantity && row.t == t) {
            return &row;
        }
    }
    return nullptr;
}

} // namespace

TEST_CASE("mean on the benchmark") {
    TempDir dir;
    const auto report_path = dir.path() / "mean.json";
    const auto o = invoke({"mean", "--config", (kConfigs / "bench.cfg").string(), "--engine", "closed", "--output",
                           report_path.string()});
    REQUIRE(o.code == kExitOk);
    CHECK(o.out.find("closed.mean=8.79121") != std::string::npos);
    const auto report = read_report_json(report_path);
    const auto* row = find(report, "closed", "mean", 2.0);
    REQUIRE(row != nullptr);
    CHECK(row->value == doctest::Approx(frozen::kBenchMean).epsilon(1e-14));
}

TEST_CASE("validate passes on the compound-Poisson configuration with tight gates") {
    TempDir dir;
    const auto report_path = dir.path() / "v.csv";
    const auto o = invoke({"validate", "--config", (kConfigs / "degenerate-beta0.cfg").string(), "--output",
                           report_path.string(), "--format", "json"});
    CHECK(o.code == kExitOk);
    CHECK(o.out.rfind("validate PASS", 0) == 0);
    const auto report = read_report_json(report_path);
    REQUIRE(report.passed.has_value());
    CHECK(*report.passed);
    std::size_t relative = 0;
    std::size_t z = 0;
    for (const auto& row : report.rows) {
        if (row.quantity.ends_with(".relative_difference")) {
            ++relative;
            CHECK(row.value < 1e-10);
            CHECK(row.engine.find("-vs-") != std::string::npos);
        } else if (row.quantity.ends_with(".z_score")) {
            ++z;
            CHECK(std::abs(row.value) <= 4.0);
        }
    }
    CHECK(relative > 0);
    CHECK(z > 0);
}

TEST_CASE("asymptote reports the quadratic variance limit next to Var/t^2") {
    TempDir dir;
    const auto report_path = dir.path() / "a.json";
    const auto o = invoke({"asymptote", "--config", (kConfigs / "two-atom.cfg").string(), "--output",
                           report_path.string(), "--format", "json"});
    REQUIRE(o.code == kExitOk);
    const auto report = read_report_json(report_path);
    const double t_max = report.rows.back().t;
    const auto* limit = find(report, "limit", "variance_quadratic_limit", t_max);
    const auto* ratio = find(report, "closed", "variance_over_t2", t_max);
    REQUIRE(limit != nullptr);
    REQUIRE(ratio != nullptr);
    // Atoms 0.5 and 2.5 with equal weight and Exp(1) claims: E[Y]^2 Var[Lambda] = 1.
    CHECK(limit->value == doctest::Approx(1.0));
    CHECK(std::abs(ratio->value - limit->value) < 0.02 * limit->value);
}

TEST_CASE("a variance run emits one row per engine, quantity and horizon") {
    TempDir dir;
    const auto cfg = dir.write("grid.cfg", slurp_config("degenerate-beta0.cfg"));
    const auto report_path = dir.path() / "r.json";
    const auto o = invoke({"variance", "--config", cfg.string(), "--engine", "closed", "--format", "json",
                           "--output", report_path.string()});
    REQUIRE(o.code == kExitOk);
    const auto report = read_report_json(report_path);
    std::set<double> ts;
    std::size_t variance_rows = 0;
    for (const auto& row : report.rows) {
        CHECK(row.engine == "closed");
        ts.insert(row.t);
        variance_rows += row.quantity == "variance";
    }
    CHECK(ts == std::set<double>{0.5, 1.25, 2.0});
    CHECK(variance_rows == 3);
}

TEST_CASE("simulate rows carry seed and replicate count; --seed overrides") {
    TempDir dir;
    const auto report_path = dir.path() / "s.json";
    const auto o = invoke({"simulate", "--config", (kConfigs / "bench.cfg").string(), "--seed", "99", "--output",
                           report_path.string()});
    REQUIRE(o.code == kExitOk);
    const auto report = read_report_json(report_path);
    REQUIRE_FALSE(report.rows.empty());
    for (const auto& row : report.rows) {
        CHECK(row.engine == "simulate");
        CHECK(row.seed == std::optional<std::uint64_t>(99));
        CHECK(row.replicates == std::optional<std::size_t>(200000));
        CHECK(row.standard_error.has_value());
    }
}

TEST_CASE("the report defaults to ./report.<format>") {
    TempDir dir;
    const auto cwd = fs::current_path();
    fs::current_path(dir.path());
    const auto o = invoke({"mean", "--config", (kConfigs / "bench.cfg").string(), "--engine", "closed", "--format",
                           "csv"});
    fs::current_path(cwd);
    CHECK(o.code == kExitOk);
    CHECK(fs::exists(dir.path() / "report.csv"));
    CHECK(read_file(dir.path() / "report.csv").rfind("t,engine,quantity", 0) == 0);
}

TEST_CASE("configuration errors exit 2 and name the key") {
    TempDir dir;
    auto text = slurp_config("bench.cfg");
    text.replace(text.find("beta = 1"), 8, "beta = -3");
    const auto bad = dir.write("bad.cfg", text);
    auto o = invoke({"mean", "--config", bad.string(), "--output", (dir.path() / "x.csv").string()});
    CHECK(o.code == kExitConfig);
    CHECK(o.err.find("dependence.beta") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path() / "x.csv"));

    o = invoke({"mean", "--config", (dir.path() / "missing.cfg").string()});
    CHECK(o.code == kExitConfig);
    o = invoke({"mean"});
    CHECK(o.code == kExitConfig);
    o = invoke({"frobnicate", "--config", bad.string()});
    CHECK(o.code == kExitConfig);
    o = invoke({"mean", "--config", (kConfigs / "bench.cfg").string(), "--engine", "magic"});
    CHECK(o.code == kExitConfig);
    CHECK(o.err.find("--engine") != std::string::npos);
}

TEST_CASE("asymptote without a closed form is a configuration error") {
    TempDir dir;
    const auto o = invoke({"asymptote", "--config", (kConfigs / "nhpp-power.cfg").string(), "--output",
                           (dir.path() / "a.csv").string()});
    CHECK(o.code == kExitConfig);
    CHECK(o.err.find("process.kind") != std::string::npos);
}

TEST_CASE("numeric nonconvergence exits 3") {
    TempDir dir;
    // Lambda(4) = 6.4: a ten-term count series leaves too much tail.
    const auto cfg = dir.write("cap.cfg", R"(
[process]
kind = nhpp_power_law
scale = 0.8
exponent = 1.5

[dependence]
kind = independent

[severity]
kind = exponential
mean = 1

[computation]
t = 4

[quadrature]
n_cap = 10
)");
    const auto o = invoke({"mean", "--config", cfg.string(), "--engine", "quadrature", "--output",
                           (dir.path() / "m.csv").string()});
    CHECK(o.code == kExitNumeric);
    CHECK(o.err.find("residual") != std::string::npos);
}

TEST_CASE("a failed validation gate exits 4 and names the engine pair") {
    TempDir dir;
    auto text = slurp_config("gamma-mixed.cfg");
    text += "\n[validation]\nrelative_tolerance = 1e-300\n";
    const auto cfg = dir.write("strict.cfg", text);
    const auto report_path = dir.path() / "v.json";
    const auto o = invoke({"validate", "--config", cfg.string(), "--output", report_path.string(), "--format",
                           "json", "--engine", "closed"});
    CHECK(o.code == kExitValidation);
    CHECK(o.out.find("FAIL") != std::string::npos);
    CHECK(o.out.find("-vs-") != std::string::npos);
    const auto report = read_report_json(report_path);
    CHECK(report.passed == std::optional<bool>(false));
}

TEST_CASE("unwritable reports exit 5") {
    const auto o = invoke({"mean", "--config", (kConfigs / "bench.cfg").string(), "--engine", "closed", "--output",
                           "/nonexistent-dir/report.csv"});
    CHECK(o.code == kExitIo);
}

TEST_CASE("engine support follows the model") {
    const auto bench = load_config(kConfigs / "bench.cfg");
    CHECK(engine_support(bench).closed_second);
    const auto nhpp = load_config(kConfigs / "nhpp-power.cfg");
    CHECK_FALSE(engine_support(nhpp).closed_mean);
    const auto tab = load_config(kConfigs / "tabulated-v.cfg");
    CHECK(engine_support(tab).closed_mean);
    CHECK_FALSE(engine_support(tab).closed_second);
}
