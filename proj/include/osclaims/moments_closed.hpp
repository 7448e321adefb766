#ifndef OSCLAIMS_MOMENTS_CLOSED_HPP
#define OSCLAIMS_MOMENTS_CLOSED_HPP

#include <string>

#include "osclaims/model.hpp"

namespace osclaims {

// Weighted contributions to E[S^2(t)]; they sum to the second moment.
struct SecondMomentTerms {
    double large_square = 0.0;  // E[Y_l^2] * int (lambda t - A) dL
    double small_square = 0.0;  // E[Y_s^2] * int A dL
    double large_pair = 0.0;    // E[Y_l]^2 * int (B00 - 2 B0b + Bbb) dL
    double cross_pair = 0.0;    // 2 E[Y_l] E[Y_s] * int (B0b - Bbb) dL
    double small_pair = 0.0;    // E[Y_s]^2 * int Bbb dL

    double total() const { return large_square + small_square + large_pair + cross_pair + small_pair; }
};

struct MomentReport {
    double t = 0.0;
    double mean = 0.0;
    double second_moment = 0.0;
    double variance = 0.0;
    std::string method;
    SecondMomentTerms terms;
};

// E[S(t)] for a mixed Poisson process with Boudreault (or independent)
// claims. `dep` must have a closed form. t = 0 gives 0.
double mean_closed(double t, const StructureDistribution& structure, const DependenceModel& dep);
double mean_closed(double t, const ProcessSpec& process, const DependenceModel& dep);

// E[S(t)] for a homogeneous Poisson process of rate lambda. Closed-form
// models use the exact formula; other index-invariant, waiting-time-only
// models integrate the conditional mean against the one-dimensional kernel
// lambda e^{-lambda v} (lambda (t - v) + 1).
double mean_closed_homogeneous(double t, double lambda, const DependenceModel& dep);

// The same mean through the integrated-by-parts identity
//   lambda t (Delta(0) + int_0^t e^{-lambda v} (1 - v/t) dDelta(v)),
// with the derivative of Delta taken analytically. Closed-form models only.
double mean_by_parts(double t, double lambda, const DependenceModel& dep);

SecondMomentTerms second_moment_terms(double t, const StructureDistribution& structure,
                                      const DependenceModel& dep);
double second_moment_closed(double t, const StructureDistribution& structure, const DependenceModel& dep);
double second_moment_closed(double t, const ProcessSpec& process, const DependenceModel& dep);

MomentReport variance_closed(double t, const StructureDistribution& structure, const DependenceModel& dep);
MomentReport variance_closed(double t, const ProcessSpec& process, const DependenceModel& dep);

// Asymptotics as t -> infinity:
//   E[S(t)]   = mean_rate * t + mean_offset + o(1)
//   E[S^2(t)] = quadratic * t^2 + linear * t + O(1)
double mean_rate_limit(const StructureDistribution& structure, const DependenceModel& dep);
double mean_offset_limit(const StructureDistribution& structure, const DependenceModel& dep);

struct SecondRateLimits {
    double linear;
    double quadratic;
};
SecondRateLimits second_rate_limits(const StructureDistribution& structure, const DependenceModel& dep);

// lim Var[S(t)] / t^2 = quadratic - mean_rate^2; for one claim type this is
// E[Y]^2 Var[Lambda].
double variance_quadratic_limit(const StructureDistribution& structure, const DependenceModel& dep);

// lim Var[S(t)] / t for a degenerate structure (the quadratic rate then
// vanishes): linear - 2 mean_rate mean_offset. For one claim type Y this is
// E[Y^2] lambda_0. InvalidArgument for a non-degenerate structure.
double variance_linear_limit(const StructureDistribution& structure, const DependenceModel& dep);

// The limit written as E[Y]^2 lambda_0, which coincides with the line above
// only for a point-mass severity.
double variance_linear_limit_mean_squared(const StructureDistribution& structure, const SeverityLaw& severity);

} // namespace osclaims

#endif
