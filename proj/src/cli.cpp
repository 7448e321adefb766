#include "osclaims/cli.hpp"

#include <cmath>
#include <sstream>

#include <CLI11.hpp>

#include "osclaims/moments_closed.hpp"
#include "osclaims/quadrature.hpp"
#include "osclaims/simulator.hpp"

namespace osclaims {

namespace {

struct Estimate {
    double value = 0.0;
    std::optional<double> standard_error;
    std::optional<double> residual_bound;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
};

struct Moments {
    std::optional<Estimate> mean;
    std::optional<Estimate> second;
    std::optional<Estimate> variance;
};

Estimate exact(double value) {
    Estimate e;
    e.value = value;
    return e;
}

enum Wanted : unsigned { kMean = 1, kSecond = 2, kVariance = 4, kAll = 7 };

Estimate from_series(const SeriesResult& r) {
    Estimate e = exact(r.value);
    e.residual_bound = r.residual_bound;
    if (r.standard_error > 0.0) {
        e.standard_error = r.standard_error;
    }
    return e;
}

SeriesResult quadrature_mean(const RunConfig& cfg, double t) {
    if (!cfg.process.has_uniform_arrivals()) {
        return mean_os_series(t, cfg.process, cfg.dependence, cfg.quadrature);
    }
    return cfg.dependence.is_v_only() ? mean_mixed_integral(t, cfg.process, cfg.dependence, cfg.quadrature)
                                      : mean_mixed_series(t, cfg.process, cfg.dependence, cfg.quadrature);
}

SeriesResult quadrature_second(const RunConfig& cfg, double t) {
    if (!cfg.process.has_uniform_arrivals()) {
        return second_moment_os_series(t, cfg.process, cfg.dependence, cfg.quadrature);
    }
    return cfg.dependence.is_v_only()
               ? second_moment_mixed_integral(t, cfg.process, cfg.dependence, cfg.quadrature)
               : second_moment_mixed_series(t, cfg.process, cfg.dependence, cfg.quadrature);
}

Moments closed_moments(const RunConfig& cfg, const EngineSupport& support, double t, unsigned wanted) {
    Moments m;
    const bool need_mean = (wanted & (kMean | kVariance)) != 0;
    const bool need_second = (wanted & (kSecond | kVariance)) != 0;
    double mean = 0.0;
    if (need_mean && support.closed_mean) {
        if (cfg.dependence.has_closed_form()) {
            mean = mean_closed(t, cfg.process, cfg.dependence);
        } else {
            const auto& h = std::get<ProcessSpec::HomogeneousPoisson>(cfg.process.variant());
            mean = mean_closed_homogeneous(t, h.rate, cfg.dependence);
        }
        if (wanted & kMean) {
            m.mean = exact(mean);
        }
    }
    if (need_second && support.closed_second) {
        const double second = second_moment_closed(t, cfg.process, cfg.dependence);
        if (wanted & kSecond) {
            m.second = exact(second);
        }
        if (wanted & kVariance) {
            m.variance = exact(second - mean * mean);
        }
    }
    return m;
}

Moments quadrature_moments(const RunConfig& cfg, double t, unsigned wanted) {
    Moments m;
    SeriesResult mean;
    SeriesResult second;
    if (wanted & (kMean | kVariance)) {
        mean = quadrature_mean(cfg, t);
        if (wanted & kMean) {
            m.mean = from_series(mean);
        }
    }
    if (wanted & (kSecond | kVariance)) {
        second = quadrature_second(cfg, t);
        if (wanted & kSecond) {
            m.second = from_series(second);
        }
    }
    if (wanted & kVariance) {
        SeriesResult v = second;
        v.value = second.value - mean.value * mean.value;
        v.residual_bound = second.residual_bound + 2.0 * std::abs(mean.value) * mean.residual_bound;
        m.variance = from_series(v);
    }
    return m;
}

Moments simulated_moments(const RunConfig& cfg, double t, unsigned wanted) {
    Moments m;
    auto tag = [&](double value, double se) {
        Estimate e = exact(value);
        e.standard_error = se;
        e.seed = cfg.simulation.seed;
        e.replicates = cfg.simulation.replicates;
        return e;
    };
    if (t == 0.0) {
        m.mean = tag(0.0, 0.0);
        m.second = tag(0.0, 0.0);
        m.variance = tag(0.0, 0.0);
    } else {
        const SimulationPlan plan{cfg.process,
                                  cfg.dependence,
                                  t,
                                  cfg.simulation.replicates,
                                  cfg.simulation.seed,
                                  cfg.simulation.threads};
        const auto est = estimate_moments(plan);
        m.mean = tag(est.mean.point, est.mean.standard_error);
        m.second = tag(est.second_moment.point, est.second_moment.standard_error);
        m.variance = tag(est.variance.point, est.variance.standard_error);
    }
    if (!(wanted & kMean)) {
        m.mean.reset();
    }
    if (!(wanted & kSecond)) {
        m.second.reset();
    }
    if (!(wanted & kVariance)) {
        m.variance.reset();
    }
    return m;
}

struct EngineRun {
    std::string name;
    Moments moments;
};

void push_rows(Report& report, double t, const EngineRun& run) {
    auto push = [&](const char* quantity, const std::optional<Estimate>& e) {
        if (!e) {
            return;
        }
        ReportRow row;
        row.t = t;
        row.engine = run.name;
        row.quantity = quantity;
        row.value = e->value;
        row.standard_error = e->standard_error;
        row.residual_bound = e->residual_bound;
        row.seed = e->seed;
        row.replicates = e->replicates;
        report.rows.push_back(std::move(row));
    };
    push("mean", run.moments.mean);
    push("second_moment", run.moments.second);
    push("variance", run.moments.variance);
}

std::vector<std::string> selected_engines(const RunConfig& cfg, const EngineSupport& support, unsigned wanted) {
    const bool closed_ok = ((wanted & kMean) == 0 || support.closed_mean) &&
                           ((wanted & (kSecond | kVariance)) == 0 || support.closed_second);
    switch (cfg.engine) {
    case EngineSelection::Closed:
        if (!closed_ok) {
            throw ConfigError("computation.engine",
                              "the closed form needs a mixed or homogeneous Poisson process with Boudreault or "
                              "independent claims (means only: homogeneous with waiting-time tables)");
        }
        return {"closed"};
    case EngineSelection::Quadrature:
        return {"quadrature"};
    case EngineSelection::Simulate:
        return {"simulate"};
    case EngineSelection::All:
        break;
    }
    std::vector<std::string> out;
    if (closed_ok) {
        out.push_back("closed");
    }
    out.push_back("quadrature");
    out.push_back("simulate");
    return out;
}

Moments run_engine(const std::string& name, const RunConfig& cfg, const EngineSupport& support, double t,
                   unsigned wanted) {
    if (name == "closed") {
        return closed_moments(cfg, support, t, wanted);
    }
    if (name == "quadrature") {
        return quadrature_moments(cfg, t, wanted);
    }
    return simulated_moments(cfg, t, wanted);
}

double relative_difference(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Gate rows comparing every pair of engines on every shared quantity.
void push_gates(Report& report, double t, const std::vector<EngineRun>& runs, const ValidationSettings& settings) {
    using Getter = std::optional<Estimate> Moments::*;
    const std::pair<const char*, Getter> quantities[] = {
        {"mean", &Moments::mean}, {"second_moment", &Moments::second}, {"variance", &Moments::variance}};
    for (const auto& [quantity, getter] : quantities) {
        for (std::size_t a = 0; a < runs.size(); ++a) {
            for (std::size_t b = a + 1; b < runs.size(); ++b) {
                const auto& ea = runs[a].moments.*getter;
                const auto& eb = runs[b].moments.*getter;
                if (!ea || !eb) {
                    continue;
                }
                ReportRow row;
                row.t = t;
                row.engine = runs[a].name + "-vs-" + runs[b].name;
                const bool stochastic = runs[b].name == "simulate";
                const double se = stochastic ? eb->standard_error.value_or(0.0) : 0.0;
                if (stochastic && se > 0.0) {
                    row.quantity = std::string(quantity) + ".z_score";
                    row.value = (ea->value - eb->value) / se;
                    row.passed = std::abs(row.value) <= settings.z_threshold;
                } else {
                    row.quantity = std::string(quantity) + ".relative_difference";
                    row.value = relative_difference(ea->value, eb->value);
                    row.passed = row.value <= settings.relative_tolerance;
                }
                report.rows.push_back(std::move(row));
            }
        }
    }
}

void push_limit(Report& report, double t, const std::string& engine, const std::string& quantity, double value) {
    ReportRow row;
    row.t = t;
    row.engine = engine;
    row.quantity = quantity;
    row.value = value;
    report.rows.push_back(std::move(row));
}

Report asymptote_report(const RunConfig& cfg) {
    if (!cfg.process.has_uniform_arrivals() || !cfg.dependence.has_closed_form()) {
        throw ConfigError("process.kind", "asymptotic limits need a mixed or homogeneous Poisson process with "
                                          "Boudreault or independent claims");
    }
    Report report;
    report.command = "asymptote";
    const auto structure = cfg.process.structure();
    const auto ts = cfg.grid.points();
    for (double t : ts) {
        if (!(t > 0.0)) {
            throw ConfigError("computation.t_start", "asymptote needs positive horizons");
        }
        const auto closed = variance_closed(t, cfg.process, cfg.dependence);
        push_limit(report, t, "closed", "mean_over_t", closed.mean / t);
        push_limit(report, t, "closed", "variance_over_t2", closed.variance / (t * t));
        if (structure.is_degenerate()) {
            push_limit(report, t, "closed", "variance_over_t", closed.variance / t);
        }
    }
    const double t_max = ts.back();
    push_limit(report, t_max, "limit", "mean_rate_limit", mean_rate_limit(structure, cfg.dependence));
    push_limit(report, t_max, "limit", "mean_offset_limit", mean_offset_limit(structure, cfg.dependence));
    push_limit(report, t_max, "limit", "variance_quadratic_limit",
               variance_quadratic_limit(structure, cfg.dependence));
    const auto view = closed_form_view(cfg.dependence);
    if (structure.is_degenerate()) {
        push_limit(report, t_max, "limit", "variance_linear_limit", variance_linear_limit(structure, cfg.dependence));
        if (view.beta == 0.0) {
            push_limit(report, t_max, "limit", "variance_linear_limit_mean_squared",
                       variance_linear_limit_mean_squared(structure, view.small));
        }
    }
    return report;
}

std::string format_value(double x) {
    std::ostringstream out;
    out.precision(10);
    out << x;
    return out.str();
}

} // namespace

std::string to_string(Command command) {
    switch (command) {
    case Command::Mean:
        return "mean";
    case Command::SecondMoment:
        return "second-moment";
    case Command::Variance:
        return "variance";
    case Command::Simulate:
        return "simulate";
    case Command::Validate:
        return "validate";
    case Command::Asymptote:
        return "asymptote";
    }
    return "mean";
}

EngineSupport engine_support(const RunConfig& cfg) {
    EngineSupport s;
    const bool uniform = cfg.process.has_uniform_arrivals();
    const bool homogeneous = std::holds_alternative<ProcessSpec::HomogeneousPoisson>(cfg.process.variant());
    s.closed_second = uniform && cfg.dependence.has_closed_form();
    s.closed_mean = s.closed_second ||
                    (homogeneous && cfg.dependence.is_v_only() && cfg.dependence.is_index_invariant());
    return s;
}

Report build_report(Command command, const RunConfig& cfg) {
    if (command == Command::Asymptote) {
        return asymptote_report(cfg);
    }
    const EngineSupport support = engine_support(cfg);
    Report report;
    report.command = to_string(command);

    unsigned wanted = kAll;
    if (command == Command::Mean) {
        wanted = kMean;
    } else if (command == Command::SecondMoment) {
        wanted = kSecond;
    }

    std::vector<std::string> engines;
    if (command == Command::Simulate) {
        engines = {"simulate"};
    } else if (command == Command::Validate) {
        RunConfig all = cfg;
        all.engine = EngineSelection::All;
        // The closed engine joins whenever it covers at least the mean.
        engines = selected_engines(all, support, kMean);
    } else {
        engines = selected_engines(cfg, support, wanted);
    }

    bool passed = true;
    for (double t : cfg.grid.points()) {
        std::vector<EngineRun> runs;
        for (const auto& name : engines) {
            runs.push_back({name, run_engine(name, cfg, support, t, wanted)});
            push_rows(report, t, runs.back());
        }
        if (command == Command::Validate) {
            const std::size_t first_gate = report.rows.size();
            push_gates(report, t, runs, cfg.validation);
            for (std::size_t k = first_gate; k < report.rows.size(); ++k) {
                passed = passed && report.rows[k].passed.value_or(true);
            }
        }
    }
    if (command == Command::Validate) {
        report.passed = passed;
    }
    return report;
}

std::string summarize(const Report& report) {
    std::ostringstream out;
    out << report.command;
    if (report.passed) {
        std::size_t gates = 0;
        const ReportRow* worst = nullptr;
        for (const auto& row : report.rows) {
            if (!row.passed) {
                continue;
            }
            ++gates;
            if (!*row.passed && worst == nullptr) {
                worst = &row;
            }
        }
        out << (*report.passed ? " PASS" : " FAIL") << " (" << gates << " gates)";
        if (worst != nullptr) {
            out << "; first failure: " << worst->engine << ' ' << worst->quantity << " = " << format_value(worst->value)
                << " at t = " << format_value(worst->t);
        }
        return out.str();
    }
    // Values at the last horizon.
    if (!report.rows.empty()) {
        const double t = report.rows.back().t;
        out << " t=" << format_value(t);
        for (const auto& row : report.rows) {
            if (row.t == t) {
                out << ' ' << row.engine << '.' << row.quantity << '=' << format_value(row.value);
            }
        }
    }
    return out.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Moments of aggregate claims under order-statistic arrivals with waiting-time dependent claims",
                 "osclaims"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_path;
    std::optional<std::uint64_t> seed;
    std::string engine;
    std::string format;

    const std::pair<Command, const char*> commands[] = {
        {Command::Mean, "E[S(t)] over the time grid"},
        {Command::SecondMoment, "E[S(t)^2] over the time grid"},
        {Command::Variance, "Mean, second moment and variance over the time grid"},
        {Command::Simulate, "Monte Carlo estimates with standard errors"},
        {Command::Validate, "Cross-check every applicable engine pair"},
        {Command::Asymptote, "Growth limits of the mean and variance"},
    };
    std::vector<std::pair<Command, CLI::App*>> subs;
    for (const auto& [command, description] : commands) {
        auto* sub = app.add_subcommand(to_string(command), description);
        sub->add_option("--config", config_path, "Model configuration file")->required();
        sub->add_option("--output", output_path, "Report path (default ./report.<format>)");
        sub->add_option("--seed", seed, "Simulation seed (overrides simulation.seed)");
        sub->add_option("--engine", engine, "closed, quadrature, simulate or all");
        sub->add_option("--format", format, "csv or json");
        subs.emplace_back(command, sub);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    Command command = Command::Mean;
    for (const auto& [c, sub] : subs) {
        if (sub->parsed()) {
            command = c;
        }
    }

    std::optional<RunConfig> loaded;
    try {
        loaded = load_config(config_path);
        if (seed) {
            loaded->simulation.seed = *seed;
        }
        if (!engine.empty()) {
            loaded->engine = parse_engine(engine, "--engine");
        }
        if (!format.empty()) {
            loaded->output.format = parse_format(format, "--format");
        }
        if (!output_path.empty()) {
            loaded->output.path = output_path;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    const RunConfig& cfg = *loaded;

    Report report;
    try {
        report = build_report(command, cfg);
    } catch (const NumericFailure& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    const auto path = cfg.output.path.value_or("report." + to_string(cfg.output.format));
    try {
        emit_report(report, cfg.output.format, path, cfg.output.precision);
    } catch (const IoError& e) {
        err << "i/o failure: " << e.what() << '\n';
        return kExitIo;
    }
    out << summarize(report) << " -> " << path.string() << '\n';
    if (report.passed && !*report.passed) {
        return kExitValidation;
    }
    return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int k = 1; k < argc; ++k) {
        args.emplace_back(argv[k]);
    }
    return run(args, out, err);
}

} // namespace osclaims
