#ifndef OSCLAIMS_SIMULATOR_HPP
#define OSCLAIMS_SIMULATOR_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "osclaims/model.hpp"
#include "osclaims/rng.hpp"

namespace osclaims {

struct SimulationPlan {
    ProcessSpec process;
    DependenceModel dependence;
    double horizon = 1.0;
    std::size_t replicates = 100000;
    std::uint64_t master_seed = 20240101;
    // Worker threads; 0 uses the hardware count. OSCLAIMS_THREADS caps both.
    std::size_t threads = 0;

    void validate() const;
};

struct MomentEstimate {
    double point = 0.0;
    double standard_error = 0.0;
    double lower = 0.0;  // point - 1.96 stderr
    double upper = 0.0;  // point + 1.96 stderr
    std::size_t replicates = 0;
    std::uint64_t seed = 0;
    // Fewer than two replicates: the standard error (and, for the variance,
    // the point estimate) is undefined and reported as NaN.
    bool degenerate = false;
};

struct MomentEstimates {
    MomentEstimate mean;
    MomentEstimate second_moment;
    MomentEstimate variance;
};

// Replicates per deterministic work block.
inline constexpr std::size_t kSimulationBlock = 4096;

// N(t): draw Lambda from the structure law, then Poisson(Lambda t);
// NHPP draws Poisson(Lambda(t)). Counts use exact inverse transform.
std::size_t sample_count(const ProcessSpec& process, double t, Rng& rng);

// Poisson(mu) by inversion of one uniform.
std::size_t sample_poisson(double mu, Rng& rng);

// Inverse of F_t for a fixed process and horizon. NHPP inversion starts from
// a 1024-point monotone grid and refines by bisection.
class ArrivalSampler {
public:
    ArrivalSampler(const ProcessSpec& process, double t);

    double quantile(double u) const;
    // n sorted i.i.d. draws from F_t.
    std::vector<double> sample(std::size_t n, Rng& rng) const;

private:
    const ProcessSpec* process_;
    double t_;
    double total_ = 0.0;
    bool uniform_ = true;
    std::vector<double> grid_cdf_;
};

std::vector<double> sample_arrivals(const ProcessSpec& process, double t, std::size_t n, Rng& rng);

// One path of the model: count, sorted arrivals, then X_i given
// (T_{i-1}, V_i) for each claim.
class PathSampler {
public:
    PathSampler(const ProcessSpec& process, const DependenceModel& dependence, double t);

    SamplePath operator()(Rng& rng) const;

private:
    const ProcessSpec* process_;
    const DependenceModel* dependence_;
    double t_;
    ArrivalSampler arrivals_;
};

SamplePath sample_path(const ProcessSpec& process, const DependenceModel& dependence, double t, Rng& rng);
// Replicate k of a plan, drawn from its own substream.
SamplePath sample_path(const SimulationPlan& plan, std::size_t replicate);

// Worker count after applying the OSCLAIMS_THREADS cap.
std::size_t worker_threads(std::size_t requested);

// Sample mean of S and S^2 and unbiased sample variance of S, with standard
// errors. Bit-identical for a fixed plan whatever the thread count.
MomentEstimates estimate_moments(const SimulationPlan& plan);

} // namespace osclaims

#endif
