#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "osclaims/config.hpp"
#include "osclaims/report.hpp"

using namespace osclaims;

namespace {

const char* kBase = R"(
[process]
kind = mixed_poisson_gamma
shape = 2
rate = 2

[dependence]
kind = boudreault
beta = 0.5

[severity.large]
kind = gamma
shape = 2
scale = 3

[severity.small]
kind = lognormal
mu = 0
sigma = 0.5

[computation]
t_start = 0.5
t_stop = 2
t_count = 4
engine = quadrature
)";

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

// Key named by the rejection of `text`, or "" when it parses.
std::string rejected_key(const std::string& text) {
    try {
        (void)parse(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return {};
}

std::string with(const std::string& extra) { return std::string(kBase) + extra; }

std::string replaced(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

Report sample_report() {
    Report r;
    r.command = "validate";
    r.passed = false;
    r.rows.push_back({0.5, "closed", "mean", 1.0 / 3.0, std::nullopt, std::nullopt, std::nullopt, std::nullopt,
                      std::nullopt});
    r.rows.push_back({2.0, "simulate", "second_moment", 208.90108284375401, 0.56, std::nullopt, 20240101ULL,
                      std::size_t{200000}, std::nullopt});
    r.rows.push_back({2.0, "quadrature", "mean", 8.7912101856770298, std::nullopt, 3.2e-9, std::nullopt,
                      std::nullopt, std::nullopt});
    r.rows.push_back({2.0, "closed-vs-simulate", "mean.z_score", -1.2345678901234567, std::nullopt, std::nullopt,
                      std::nullopt, std::nullopt, true});
    r.rows.push_back({2.0, "closed-vs-quadrature", "mean.relative_difference", 2.1e-10, std::nullopt, std::nullopt,
                      std::nullopt, std::nullopt, false});
    r.rows.push_back({1.0, "simulate", "variance", std::numeric_limits<double>::quiet_NaN(),
                      std::numeric_limits<double>::quiet_NaN(), std::nullopt, 7ULL, std::size_t{1}, std::nullopt});
    return r;
}

} // namespace

TEST_CASE("a complete configuration parses") {
    const auto cfg = parse(kBase);
    CHECK(cfg.engine == EngineSelection::Quadrature);
    const auto grid = cfg.grid.points();
    REQUIRE(grid.size() == 4);
    CHECK(grid.front() == 0.5);
    CHECK(grid.back() == 2.0);
    CHECK(grid[1] == doctest::Approx(1.0));
    CHECK(cfg.dependence.has_closed_form());
    CHECK(cfg.process.has_uniform_arrivals());
    CHECK(cfg.output.format == OutputFormat::Csv);
    CHECK(cfg.output.precision == 17);
    CHECK(cfg.simulation.replicates == 100000);
}

TEST_CASE("log grids are geometric") {
    const auto cfg = parse(replaced(kBase, "t_count = 4", "t_count = 3\nt_spacing = log"));
    const auto grid = cfg.grid.points();
    REQUIRE(grid.size() == 3);
    CHECK(grid[1] == doctest::Approx(1.0));
}

TEST_CASE("every shipped configuration parses") {
    for (const auto& entry : std::filesystem::directory_iterator(OSCLAIMS_CONFIG_DIR)) {
        CAPTURE(entry.path().string());
        CHECK_NOTHROW((void)load_config(entry.path()));
    }
}

TEST_CASE("process variants") {
    const auto nhpp = parse(replaced(kBase, "kind = mixed_poisson_gamma\nshape = 2\nrate = 2",
                                     "kind = nhpp_seasonal\nbase = 2\namplitude = 1\nperiod = 0.5"));
    CHECK_FALSE(nhpp.process.has_uniform_arrivals());
    const auto atoms = parse(replaced(kBase, "kind = mixed_poisson_gamma\nshape = 2\nrate = 2",
                                      "kind = mixed_poisson_atoms\nrates = 0.5, 2.5\nprobabilities = 0.5, 0.5"));
    CHECK(atoms.process.structure().mean() == doctest::Approx(1.5));
}

TEST_CASE("rejections name the offending key") {
    CHECK(rejected_key(with("[output]\nfromat = json\n")) == "output.fromat");
    CHECK(rejected_key(with("[bogus]\nx = 1\n")) == "bogus.x");
    CHECK(rejected_key(replaced(kBase, "beta = 0.5", "beta = -1")) == "dependence.beta");
    CHECK(rejected_key(replaced(kBase, "shape = 2\nrate = 2", "shape = 0\nrate = 2")) == "process.shape");
    CHECK(rejected_key(replaced(kBase, "sigma = 0.5", "sigma = abc")) == "severity.small.sigma");
    CHECK(rejected_key(replaced(kBase, "engine = quadrature", "engine = magic")) == "computation.engine");
    CHECK(rejected_key(replaced(kBase, "t_count = 4", "t_count = 0")) == "computation.t_count");
    CHECK(rejected_key(replaced(kBase, "t_start = 0.5", "t_start = -0.5")) == "computation.t_start");
    CHECK(rejected_key(replaced(kBase, "kind = mixed_poisson_gamma", "kind = renewal")) == "process.kind");
    CHECK(rejected_key(with("[quadrature]\nnodes_per_axis = 3\n")) == "quadrature.nodes_per_axis");
    CHECK(rejected_key(with("[quadrature]\ntail_epsilon = 0.5\n")) == "quadrature.tail_epsilon");
    CHECK(rejected_key(with("[simulation]\nreplicates = 0\n")) == "simulation.replicates");
    CHECK(rejected_key(with("[output]\nprecision = 30\n")) == "output.precision");
    CHECK(rejected_key(with("[output]\nformat = xml\n")) == "output.format");
    CHECK(rejected_key(with("[validation]\nz_threshold = 0\n")) == "validation.z_threshold");
    CHECK_FALSE(rejected_key(replaced(kBase, "[severity.small]", "[severity.tiny]")).empty());
}

TEST_CASE("missing sections are rejected") {
    CHECK(rejected_key("[process]\nkind = homogeneous\nrate = 1\n") == "dependence.kind");
    CHECK_FALSE(rejected_key("").empty());
}

TEST_CASE("engine and format names") {
    for (auto e : {EngineSelection::Closed, EngineSelection::Quadrature, EngineSelection::Simulate,
                   EngineSelection::All}) {
        CHECK(parse_engine(to_string(e)) == e);
    }
    CHECK(parse_format("json") == OutputFormat::Json);
    CHECK_THROWS_AS(parse_format("yaml"), ConfigError);
}

TEST_CASE("JSON reports round-trip exactly") {
    const auto report = sample_report();
    std::stringstream buf;
    write_report(report, OutputFormat::Json, buf);
    const auto back = read_report_json(buf);
    CHECK(same_report(report, back));
    auto other = report;
    other.rows[2].value = std::nextafter(other.rows[2].value, 10.0);
    CHECK_FALSE(same_report(report, other));
}

TEST_CASE("random reports round-trip through JSON") {
    Rng rng(77);
    for (int k = 0; k < 50; ++k) {
        Report r;
        r.command = "mean";
        for (int j = 0; j < 20; ++j) {
            const double mag = std::pow(10.0, 40.0 * rng.uniform() - 20.0);
            ReportRow row;
            row.t = rng.uniform() * 100.0;
            row.engine = "closed";
            row.quantity = "mean";
            row.value = (rng.uniform() < 0.5 ? -1.0 : 1.0) * mag;
            if (rng.uniform() < 0.5) {
                row.standard_error = mag * rng.uniform();
            }
            r.rows.push_back(row);
        }
        std::stringstream buf;
        write_report(r, OutputFormat::Json, buf);
        CHECK(same_report(r, read_report_json(buf)));
    }
}

TEST_CASE("CSV reports have one line per row and 17 significant digits") {
    const auto report = sample_report();
    std::stringstream buf;
    write_report(report, OutputFormat::Csv, buf);
    std::string line;
    std::getline(buf, line);
    CHECK(line == "t,engine,quantity,value,stderr,residual_bound,seed,replicates,passed");
    std::getline(buf, line);
    CHECK(line == "0.5,closed,mean,0.33333333333333331,,,,,");
    std::getline(buf, line);
    CHECK(line == "2,simulate,second_moment,208.90108284375401,0.56000000000000005,,20240101,200000,");
    std::size_t rows = 2;
    while (std::getline(buf, line)) {
        ++rows;
    }
    CHECK(rows == report.rows.size());
}

TEST_CASE("unwritable report paths raise I/O errors") {
    CHECK_THROWS_AS(emit_report(sample_report(), OutputFormat::Csv, "/nonexistent-dir/report.csv"), IoError);
    CHECK_THROWS_AS(read_report_json(std::filesystem::path("/nonexistent-dir/report.json")), IoError);
    std::istringstream bad("{\"command\": 3}");
    CHECK_THROWS_AS(read_report_json(bad), IoError);
}
