#include "osclaims/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/program_options/parsers.hpp>

namespace osclaims {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// Flat key/value view of the file with consumption tracking, so keys that no
// branch of the schema reads are reported as unknown.
class Reader {
public:
    explicit Reader(std::map<std::string, std::string> raw) : raw_(std::move(raw)) {}

    bool has(const std::string& key) const { return raw_.count(key) != 0; }

    std::optional<std::string> text(const std::string& key) {
        const auto it = raw_.find(key);
        if (it == raw_.end()) {
            return std::nullopt;
        }
        used_.insert(key);
        return it->second;
    }

    std::string required_text(const std::string& key) {
        auto v = text(key);
        if (!v) {
            throw ConfigError(key, "required key is missing");
        }
        return *v;
    }

    double number(const std::string& key) { return parse_number(key, required_text(key)); }

    double number(const std::string& key, double fallback) {
        const auto v = text(key);
        return v ? parse_number(key, *v) : fallback;
    }

    double positive(const std::string& key) {
        const double x = number(key);
        if (!(x > 0.0)) {
            throw ConfigError(key, "must be positive");
        }
        return x;
    }

    double nonnegative(const std::string& key) {
        const double x = number(key);
        if (!(x >= 0.0)) {
            throw ConfigError(key, "must be nonnegative");
        }
        return x;
    }

    double nonnegative(const std::string& key, double fallback) {
        const double x = number(key, fallback);
        if (!(x >= 0.0)) {
            throw ConfigError(key, "must be nonnegative");
        }
        return x;
    }

    std::uint64_t integer(const std::string& key, std::uint64_t fallback) {
        const auto v = text(key);
        if (!v) {
            return fallback;
        }
        std::uint64_t out = 0;
        const std::string s = trim(*v);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
            throw ConfigError(key, "expected a nonnegative integer, got '" + *v + "'");
        }
        return out;
    }

    std::vector<double> list(const std::string& key) {
        const std::string raw = required_text(key);
        std::vector<double> out;
        std::stringstream in(raw);
        std::string item;
        while (std::getline(in, item, ',')) {
            out.push_back(parse_number(key, item));
        }
        if (out.empty()) {
            throw ConfigError(key, "expected a comma-separated list of numbers");
        }
        return out;
    }

    void finish() const {
        for (const auto& [key, value] : raw_) {
            if (used_.count(key) == 0) {
                throw ConfigError(key, "unknown key for this configuration");
            }
        }
    }

private:
    static double parse_number(const std::string& key, const std::string& raw) {
        const std::string s = trim(raw);
        double out = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(out)) {
            throw ConfigError(key, "expected a finite number, got '" + raw + "'");
        }
        return out;
    }

    std::map<std::string, std::string> raw_;
    std::set<std::string> used_;
};

template <class F>
auto wrap(const std::string& key, F&& build) {
    try {
        return build();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(key, e.what());
    }
}

SeverityLaw read_severity(Reader& r, const std::string& section) {
    const std::string kind = r.required_text(section + ".kind");
    return wrap(section, [&] {
        if (kind == "exponential") {
            return SeverityLaw::exponential(r.positive(section + ".mean"));
        }
        if (kind == "gamma") {
            const double shape = r.positive(section + ".shape");
            return SeverityLaw::gamma(shape, r.positive(section + ".scale"));
        }
        if (kind == "lognormal") {
            const double mu = r.number(section + ".mu");
            return SeverityLaw::lognormal(mu, r.positive(section + ".sigma"));
        }
        if (kind == "pareto") {
            const double shape = r.positive(section + ".shape");
            return SeverityLaw::pareto(shape, r.positive(section + ".scale"));
        }
        if (kind == "point_mass") {
            return SeverityLaw::point_mass(r.nonnegative(section + ".value"));
        }
        throw ConfigError(section + ".kind", "unknown severity kind '" + kind + "'");
    });
}

ProcessSpec read_process(Reader& r) {
    const std::string kind = r.required_text("process.kind");
    return wrap("process", [&] {
        if (kind == "homogeneous") {
            return ProcessSpec::homogeneous(r.positive("process.rate"));
        }
        if (kind == "mixed_poisson_degenerate") {
            return ProcessSpec::mixed_poisson(StructureDistribution::degenerate(r.positive("process.rate")));
        }
        if (kind == "mixed_poisson_atoms") {
            const auto rates = r.list("process.rates");
            const auto probs = r.list("process.probabilities");
            if (rates.size() != probs.size()) {
                throw ConfigError("process.probabilities", "needs one probability per rate");
            }
            std::vector<RateAtom> atoms;
            for (std::size_t k = 0; k < rates.size(); ++k) {
                atoms.push_back({rates[k], probs[k]});
            }
            return ProcessSpec::mixed_poisson(StructureDistribution::finite_atoms(std::move(atoms)));
        }
        if (kind == "mixed_poisson_gamma") {
            const double shape = r.positive("process.shape");
            return ProcessSpec::mixed_poisson(StructureDistribution::gamma(shape, r.positive("process.rate")));
        }
        if (kind == "mixed_poisson_tabulated") {
            auto rates = r.list("process.rates");
            auto density = r.list("process.density");
            return ProcessSpec::mixed_poisson(StructureDistribution::tabulated(std::move(rates), std::move(density)));
        }
        if (kind == "nhpp_power_law") {
            const double scale = r.positive("process.scale");
            return ProcessSpec::non_homogeneous(CumulativeIntensity::power_law(scale, r.positive("process.exponent")));
        }
        if (kind == "nhpp_linear") {
            const double intercept = r.nonnegative("process.intercept");
            return ProcessSpec::non_homogeneous(CumulativeIntensity::linear(intercept, r.number("process.slope")));
        }
        if (kind == "nhpp_seasonal") {
            const double base = r.positive("process.base");
            const double amplitude = r.nonnegative("process.amplitude");
            const double period = r.positive("process.period");
            return ProcessSpec::non_homogeneous(
                CumulativeIntensity::seasonal(base, amplitude, period, r.number("process.phase", 0.0)));
        }
        throw ConfigError("process.kind", "unknown process kind '" + kind + "'");
    });
}

DependenceModel read_dependence(Reader& r, std::optional<SeverityLaw>& single) {
    const std::string kind = r.required_text("dependence.kind");
    if (kind == "boudreault") {
        const double beta = r.nonnegative("dependence.beta");
        auto large = read_severity(r, "severity.large");
        auto small = read_severity(r, "severity.small");
        return wrap("dependence", [&] { return DependenceModel::boudreault(beta, large, small); });
    }
    if (kind == "independent") {
        auto severity = read_severity(r, "severity");
        single = severity;
        return wrap("dependence", [&] { return DependenceModel::independent(severity); });
    }
    if (kind == "tabulated_v") {
        auto grid = r.list("dependence.v_grid");
        auto means = r.list("dependence.means");
        auto seconds = r.list("dependence.seconds");
        return wrap("dependence", [&] {
            return DependenceModel::tabulated_v(std::move(grid), std::move(means), std::move(seconds));
        });
    }
    if (kind == "tabulated_tv") {
        auto x_grid = r.list("dependence.x_grid");
        auto v_grid = r.list("dependence.v_grid");
        auto means = r.list("dependence.means");
        auto seconds = r.list("dependence.seconds");
        return wrap("dependence", [&] {
            return DependenceModel::tabulated_tv(std::move(x_grid), std::move(v_grid), std::move(means),
                                                 std::move(seconds));
        });
    }
    throw ConfigError("dependence.kind", "unknown dependence kind '" + kind + "'");
}

TimeGrid read_grid(Reader& r) {
    TimeGrid grid;
    if (r.has("computation.t")) {
        for (const char* key : {"computation.t_start", "computation.t_stop", "computation.t_count",
                                "computation.t_spacing"}) {
            if (r.has(key)) {
                throw ConfigError(key, "conflicts with computation.t");
            }
        }
        grid.start = grid.stop = r.nonnegative("computation.t");
        grid.count = 1;
        return grid;
    }
    grid.start = r.nonnegative("computation.t_start");
    grid.stop = r.nonnegative("computation.t_stop");
    grid.count = r.integer("computation.t_count", 0);
    if (grid.count < 1) {
        throw ConfigError("computation.t_count", "must be at least 1");
    }
    if (grid.stop < grid.start) {
        throw ConfigError("computation.t_stop", "must not be below computation.t_start");
    }
    const std::string spacing = r.text("computation.t_spacing").value_or("linear");
    if (spacing == "log") {
        grid.logarithmic = true;
        if (!(grid.start > 0.0)) {
            throw ConfigError("computation.t_start", "must be positive for log spacing");
        }
    } else if (spacing != "linear") {
        throw ConfigError("computation.t_spacing", "expected 'linear' or 'log'");
    }
    return grid;
}

QuadratureConfig read_quadrature(Reader& r) {
    QuadratureConfig q;
    q.nodes_per_axis = r.integer("quadrature.nodes_per_axis", q.nodes_per_axis);
    q.tail_epsilon = r.number("quadrature.tail_epsilon", q.tail_epsilon);
    q.n_cap = r.integer("quadrature.n_cap", q.n_cap);
    q.dim_cap = r.integer("quadrature.dim_cap", q.dim_cap);
    q.mc_fallback_samples = r.integer("quadrature.mc_fallback_samples", q.mc_fallback_samples);
    q.residual_tolerance = r.number("quadrature.residual_tolerance", q.residual_tolerance);
    q.double_pair_tensor_max_n = r.integer("quadrature.double_pair_tensor_max_n", q.double_pair_tensor_max_n);
    q.joint_nodes_per_axis = r.integer("quadrature.joint_nodes_per_axis", q.joint_nodes_per_axis);
    q.qmc_seed = r.integer("quadrature.qmc_seed", q.qmc_seed);
    try {
        q.validate();
    } catch (const InvalidArgument& e) {
        const std::string what = e.what();
        throw ConfigError(what.substr(0, what.find(' ')), what);
    }
    return q;
}

} // namespace

std::vector<double> TimeGrid::points() const {
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double f = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
        out[k] = logarithmic ? start * std::pow(stop / start, f) : start + (stop - start) * f;
    }
    if (count > 1) {
        out.back() = stop;
    }
    return out;
}

EngineSelection parse_engine(const std::string& name, const std::string& key) {
    if (name == "closed") {
        return EngineSelection::Closed;
    }
    if (name == "quadrature") {
        return EngineSelection::Quadrature;
    }
    if (name == "simulate") {
        return EngineSelection::Simulate;
    }
    if (name == "all") {
        return EngineSelection::All;
    }
    throw ConfigError(key, "expected closed, quadrature, simulate or all; got '" + name + "'");
}

OutputFormat parse_format(const std::string& name, const std::string& key) {
    if (name == "csv") {
        return OutputFormat::Csv;
    }
    if (name == "json") {
        return OutputFormat::Json;
    }
    throw ConfigError(key, "expected csv or json; got '" + name + "'");
}

std::string to_string(EngineSelection engine) {
    switch (engine) {
    case EngineSelection::Closed:
        return "closed";
    case EngineSelection::Quadrature:
        return "quadrature";
    case EngineSelection::Simulate:
        return "simulate";
    case EngineSelection::All:
        return "all";
    }
    return "all";
}

std::string to_string(OutputFormat format) { return format == OutputFormat::Json ? "json" : "csv"; }

RunConfig parse_config(std::istream& in) {
    namespace po = boost::program_options;
    std::map<std::string, std::string> raw;
    try {
        const auto parsed = po::parse_config_file(in, po::options_description{}, true);
        for (const auto& opt : parsed.options) {
            const std::string value = opt.value.empty() ? std::string{} : trim(opt.value.front());
            if (!raw.emplace(opt.string_key, value).second) {
                throw ConfigError(opt.string_key, "key appears more than once");
            }
        }
    } catch (const po::error& e) {
        throw ConfigError("config", e.what());
    }

    Reader r(std::move(raw));
    std::optional<SeverityLaw> single;
    ProcessSpec process = read_process(r);
    DependenceModel dependence = read_dependence(r, single);
    RunConfig cfg{std::move(process), std::move(dependence), std::move(single), {}, EngineSelection::All, {}, {}, {}, {}};
    cfg.grid = read_grid(r);
    cfg.engine = parse_engine(r.text("computation.engine").value_or("all"));
    cfg.quadrature = read_quadrature(r);

    cfg.simulation.replicates = r.integer("simulation.replicates", cfg.simulation.replicates);
    if (cfg.simulation.replicates < 1) {
        throw ConfigError("simulation.replicates", "must be at least 1");
    }
    cfg.simulation.seed = r.integer("simulation.seed", cfg.simulation.seed);
    cfg.simulation.threads = r.integer("simulation.threads", cfg.simulation.threads);

    cfg.validation.relative_tolerance = r.number("validation.relative_tolerance", cfg.validation.relative_tolerance);
    if (!(cfg.validation.relative_tolerance > 0.0)) {
        throw ConfigError("validation.relative_tolerance", "must be positive");
    }
    cfg.validation.z_threshold = r.number("validation.z_threshold", cfg.validation.z_threshold);
    if (!(cfg.validation.z_threshold > 0.0)) {
        throw ConfigError("validation.z_threshold", "must be positive");
    }

    cfg.output.format = parse_format(r.text("output.format").value_or("csv"));
    if (auto p = r.text("output.path")) {
        if (p->empty()) {
            throw ConfigError("output.path", "must not be empty");
        }
        cfg.output.path = *p;
    }
    const auto precision = r.integer("output.precision", 17);
    if (precision < 1 || precision > 17) {
        throw ConfigError("output.precision", "must lie in [1, 17]");
    }
    cfg.output.precision = static_cast<int>(precision);

    r.finish();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("--config", "cannot open '" + path.string() + "'");
    }
    return parse_config(in);
}

} // namespace osclaims
