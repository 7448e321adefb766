#ifndef OSCLAIMS_QUADRATURE_HPP
#define OSCLAIMS_QUADRATURE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "osclaims/model.hpp"

namespace osclaims {

struct QuadratureConfig {
    std::size_t nodes_per_axis = 64;
    double tail_epsilon = kDefaultTailEpsilon;
    std::size_t n_cap = 60;
    // Highest integral dimension evaluated by tensor quadrature in the
    // general joint-product path; higher-dimensional families use QMC.
    std::size_t dim_cap = 4;
    std::size_t mc_fallback_samples = 200000;
    // Truncation residual allowed, relative to the computed value.
    double residual_tolerance = 1e-6;
    // Count terms up to this n use tensor quadrature for the four-dimensional
    // family of the joint-product path; larger n use QMC.
    std::size_t double_pair_tensor_max_n = 12;
    // Tensor nodes per axis for the joint-product path.
    std::size_t joint_nodes_per_axis = 16;
    std::uint64_t qmc_seed = 0x9E3779B97F4A7C15ULL;

    // InvalidArgument naming the offending field.
    void validate() const;
};

struct SeriesResult {
    double value = 0.0;
    // Bound on the discarded count-series tail.
    double residual_bound = 0.0;
    // Largest count n kept in the series.
    std::size_t terms = 0;
    // Monte Carlo standard error of QMC-evaluated parts; 0 when none.
    double standard_error = 0.0;
};

// Joint density of selected order statistics of n i.i.d. draws from F_t.
//   First:             T_1                       (n >= 1)
//   ConsecutivePair:   (T_{i-1}, T_i)            (2 <= i <= n)
//   FirstPlusPair:     (T_1, T_{j-1}, T_j)       (3 <= j <= n)
//   TripleConsecutive: (T_{i-1}, T_i, T_{i+1})   (2 <= i <= n - 1)
//   DoublePair:        (T_{i-1}, T_i, T_{j-1}, T_j) (2 <= i, i + 2 <= j <= n)
class OrderStatDensity {
public:
    enum class Kind { First, ConsecutivePair, FirstPlusPair, TripleConsecutive, DoublePair };

    OrderStatDensity(Kind kind, std::size_t i, std::size_t j, std::size_t n, ProcessSpec process, double t);

    std::size_t dimension() const noexcept;
    // Density at ascending times in [0, t]; 0 outside the ordered region.
    double operator()(std::span<const double> times) const;
    // Integral over the ordered region by nested Gauss-Legendre.
    double total_mass(std::size_t nodes = 24) const;

private:
    Kind kind_;
    std::size_t i_;
    std::size_t j_;
    std::size_t n_;
    ProcessSpec process_;
    double t_;
    double log_coefficient_;
};

// E[X_i X_j | T_{i-1} = x, T_i = y, T_{j-1} = w, T_j = z] for i < j (w = y
// when j = i + 1), with the conditional second moment of single claims and a
// bound on both used for the truncation residual.
using JointFunction =
    std::function<double(std::size_t i, std::size_t j, double x, double y, double w, double z)>;

struct JointProductModel {
    IndexedTVFunction second;  // E[X_i^2 | T_{i-1} = x, V_i = v]
    JointFunction product;
    double bound = 0.0;        // sup of |second| and |product| over the region

    // Conditionally independent claims: product = delta_i * delta_j.
    static JointProductModel from_dependence(const DependenceModel& dep, double t, std::size_t i_max);
};

// E[S(t)] for any order-statistic process, integrating the conditional claim
// mean against the order-statistic densities built from F_t and f_t.
SeriesResult mean_os_series(double t, const ProcessSpec& process, const DependenceModel& dep,
                            const QuadratureConfig& cfg = {});

// E[S^2(t)] for any order-statistic process and conditionally independent
// claims. Nested tensor rules are factorized so that every count term costs
// O(nodes^3).
SeriesResult second_moment_os_series(double t, const ProcessSpec& process, const DependenceModel& dep,
                                     const QuadratureConfig& cfg = {});

// E[S^2(t)] for a general joint law of claim pairs: tensor quadrature up to
// dim_cap dimensions and double_pair_tensor_max_n, randomized QMC beyond.
SeriesResult second_moment_os_series(double t, const ProcessSpec& process, const JointProductModel& model,
                                     const QuadratureConfig& cfg = {});

// E[S(t)] for a mixed Poisson process with claims depending on the previous
// arrival time and the waiting time, over uniform order-statistic kernels in
// (previous time, wait) coordinates.
SeriesResult mean_mixed_series(double t, const ProcessSpec& process, const DependenceModel& dep,
                               const QuadratureConfig& cfg = {});

// E[S(t)] for a mixed Poisson process with claims depending on the waiting
// time only: int int lambda e^{-lambda v} E[Q(N_lambda(t - v) + 1 | v)] dv dL.
SeriesResult mean_mixed_integral(double t, const ProcessSpec& process, const DependenceModel& dep,
                                 const QuadratureConfig& cfg = {});

// E[S^2(t)] for a mixed Poisson process, claims depending on the previous
// arrival time and the waiting time, conditionally independent.
SeriesResult second_moment_mixed_series(double t, const ProcessSpec& process, const DependenceModel& dep,
                                        const QuadratureConfig& cfg = {});

// E[S^2(t)] for a mixed Poisson process, claims depending on the waiting
// time only and conditionally independent.
SeriesResult second_moment_mixed_integral(double t, const ProcessSpec& process, const DependenceModel& dep,
                                          const QuadratureConfig& cfg = {});

// E[h(N)] for N ~ Poisson(lambda s), truncated by the tail rule. The
// residual is the magnitude of the next block of discarded terms.
SeriesResult poisson_functional_expectation(double lambda, double s, const std::function<double(std::size_t)>& h,
                                            const QuadratureConfig& cfg = {});

} // namespace osclaims

#endif
