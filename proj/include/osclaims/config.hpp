#ifndef OSCLAIMS_CONFIG_HPP
#define OSCLAIMS_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "osclaims/errors.hpp"
#include "osclaims/model.hpp"
#include "osclaims/quadrature.hpp"

namespace osclaims {

// Rejected configuration; the message names the offending key.
class ConfigError : public InvalidArgument {
public:
    ConfigError(const std::string& key, const std::string& problem)
        : InvalidArgument(key + ": " + problem), key_(key) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

enum class EngineSelection { Closed, Quadrature, Simulate, All };
enum class OutputFormat { Csv, Json };

struct TimeGrid {
    double start = 1.0;
    double stop = 1.0;
    std::size_t count = 1;
    bool logarithmic = false;

    std::vector<double> points() const;
};

struct SimulationSettings {
    std::size_t replicates = 100000;
    std::uint64_t seed = 20240101;
    std::size_t threads = 0;
};

struct ValidationSettings {
    // Largest relative difference allowed between deterministic engines.
    double relative_tolerance = 1e-6;
    // Largest |z| allowed between a deterministic engine and Monte Carlo.
    double z_threshold = 4.0;
};

struct OutputSettings {
    OutputFormat format = OutputFormat::Csv;
    std::optional<std::filesystem::path> path;
    int precision = 17;
};

// A fully validated run description.
//
//   [process]     kind = homogeneous | mixed_poisson_degenerate | mixed_poisson_atoms
//                        | mixed_poisson_gamma | mixed_poisson_tabulated
//                        | nhpp_power_law | nhpp_linear | nhpp_seasonal
//   [dependence]  kind = boudreault | independent | tabulated_v | tabulated_tv
//   [severity.large], [severity.small], [severity]
//                 kind = exponential | gamma | lognormal | pareto | point_mass
//   [computation] t, or t_start / t_stop / t_count / t_spacing; engine
//   [quadrature], [simulation], [validation], [output]
struct RunConfig {
    ProcessSpec process;
    DependenceModel dependence;
    // The single severity of an independent model, when there is one.
    std::optional<SeverityLaw> severity;
    TimeGrid grid;
    EngineSelection engine = EngineSelection::All;
    QuadratureConfig quadrature;
    SimulationSettings simulation;
    ValidationSettings validation;
    OutputSettings output;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

EngineSelection parse_engine(const std::string& name, const std::string& key = "computation.engine");
OutputFormat parse_format(const std::string& name, const std::string& key = "output.format");
std::string to_string(EngineSelection engine);
std::string to_string(OutputFormat format);

} // namespace osclaims

#endif
