#ifndef OSCLAIMS_MODEL_HPP
#define OSCLAIMS_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "osclaims/rng.hpp"

namespace osclaims {

// Default tail mass left out when a count series is truncated.
inline constexpr double kDefaultTailEpsilon = 1e-10;
// Smallest truncation point of any count series.
inline constexpr std::size_t kMinTruncation = 10;
// Tolerance used when integrating against a structure distribution.
inline constexpr double kStructureTolerance = 1e-10;

// ---------------------------------------------------------------------------
// Structure distribution: the mixing law of the random Poisson rate.

struct RateAtom {
    double rate;
    double probability;
};

class StructureDistribution {
public:
    struct Degenerate {
        double rate;
    };
    struct FiniteAtoms {
        std::vector<RateAtom> atoms;
    };
    // Gamma law with density theta^a x^(a-1) e^(-theta x) / Gamma(a).
    struct Gamma {
        double shape;
        double rate;
    };
    // Piecewise-linear density on an increasing grid of positive rates, zero
    // outside the grid. Must integrate to 1 within kStructureTolerance.
    struct Tabulated {
        std::vector<double> rates;
        std::vector<double> density;
    };
    using Variant = std::variant<Degenerate, FiniteAtoms, Gamma, Tabulated>;

    static StructureDistribution degenerate(double rate);
    static StructureDistribution finite_atoms(std::vector<RateAtom> atoms);
    static StructureDistribution gamma(double shape, double rate);
    static StructureDistribution tabulated(std::vector<double> rates, std::vector<double> density);

    const Variant& variant() const noexcept { return variant_; }
    bool is_degenerate() const noexcept;

    double mean() const;
    double second_moment() const;
    double variance() const;

    // Inverse-transform draw from one uniform.
    double quantile(double u) const;
    double sample(Rng& rng) const { return quantile(rng.uniform()); }

    std::string describe() const;

private:
    explicit StructureDistribution(Variant v) : variant_(std::move(v)) {}
    Variant variant_;
};

struct IntegrationResult {
    double value;
    double error;
};

// Integral of g(lambda) dL(lambda). Exact for atomic laws, adaptive quadrature
// otherwise; throws NumericFailure when the error estimate exceeds
// tolerance * (integral of |g| dL), InfiniteMoment when g is not finite where
// L has mass.
IntegrationResult structure_integrate(const StructureDistribution& structure,
                                      const std::function<double(double)>& g,
                                      double tolerance = kStructureTolerance);

// ---------------------------------------------------------------------------
// Cumulative intensity of a non-homogeneous Poisson process.

class CumulativeIntensity {
public:
    // `cumulative` must be nondecreasing with cumulative(0) = 0. When
    // `intensity` is empty the derivative is taken by central differences.
    CumulativeIntensity(std::function<double(double)> cumulative,
                        std::function<double(double)> intensity, std::string label);

    // Lambda(x) = scale * x^exponent.
    static CumulativeIntensity power_law(double scale, double exponent);
    // lambda(x) = intercept + slope * x.
    static CumulativeIntensity linear(double intercept, double slope);
    // lambda(x) = base + amplitude * sin(2 pi (x - phase) / period), amplitude <= base.
    static CumulativeIntensity seasonal(double base, double amplitude, double period, double phase);

    double operator()(double x) const { return cumulative_(x); }
    double intensity(double x) const;
    const std::string& label() const noexcept { return label_; }

    // Power k of the substitution x = t w^k under which F_t and f_t become
    // smooth at the origin; 1 unless the intensity is singular there.
    double grading() const noexcept { return grading_; }

private:
    std::function<double(double)> cumulative_;
    std::function<double(double)> intensity_;
    std::string label_;
    double grading_ = 1.0;
};

// ---------------------------------------------------------------------------
// Arrival process.

class ProcessSpec {
public:
    struct MixedPoisson {
        StructureDistribution structure;
    };
    struct NonHomogeneousPoisson {
        CumulativeIntensity cumulative;
    };
    struct HomogeneousPoisson {
        double rate;
    };
    using Variant = std::variant<MixedPoisson, NonHomogeneousPoisson, HomogeneousPoisson>;

    static ProcessSpec mixed_poisson(StructureDistribution structure);
    static ProcessSpec non_homogeneous(CumulativeIntensity cumulative);
    static ProcessSpec homogeneous(double rate);

    const Variant& variant() const noexcept { return variant_; }

    // Mixed and homogeneous Poisson processes: arrivals are uniform order
    // statistics given the count.
    bool has_uniform_arrivals() const noexcept;
    // Structure law of a mixed or homogeneous process; InvalidArgument for NHPP.
    StructureDistribution structure() const;

    // E[N(t)] and E[N(t)(N(t) - 1)].
    double mean_count(double t) const;
    double factorial_second_moment(double t) const;

    std::string describe() const;

private:
    explicit ProcessSpec(Variant v) : variant_(std::move(v)) {}
    Variant variant_;
};

// P[N(t) = n]. t = 0 gives the point mass at n = 0.
double count_pmf(const ProcessSpec& process, double t, std::size_t n);

// P[N(t) = n] for n = 0..n_max in one pass.
std::vector<double> count_pmfs(const ProcessSpec& process, double t, std::size_t n_max);

struct CountTruncation {
    std::vector<double> pmf;  // pmf[n] for n = 0..n_max
    std::size_t n_max = 0;
    double tail_mass = 0.0;   // upper bound on sum over n > n_max
    bool capped = false;      // n_cap reached before the tail rule was met
};

// Smallest n_max >= kMinTruncation with cumulative mass >= 1 - epsilon, or
// n_cap if reached first.
CountTruncation truncate_counts(const ProcessSpec& process, double t,
                                double epsilon = kDefaultTailEpsilon,
                                std::size_t n_cap = 100000);

// Poisson probabilities for mean mu, n = 0..n_max, computed in log space.
std::vector<double> poisson_pmfs(double mu, std::size_t n_max);

// Conditional arrival-time cdf F_t(x) and its density f_t(x), 0 <= x <= t.
double os_cdf(const ProcessSpec& process, double t, double x);
double os_density(const ProcessSpec& process, double t, double x);

// ---------------------------------------------------------------------------
// Claim severity.

class SeverityLaw {
public:
    struct Exponential {
        double mean;
    };
    struct Gamma {
        double shape;
        double scale;
    };
    struct Lognormal {
        double mu;
        double sigma;
    };
    // Pareto type II (Lomax) on [0, inf): P[Y > y] = (scale / (scale + y))^shape.
    struct Pareto {
        double shape;
        double scale;
    };
    struct PointMass {
        double value;
    };
    using Variant = std::variant<Exponential, Gamma, Lognormal, Pareto, PointMass>;

    static SeverityLaw exponential(double mean);
    static SeverityLaw gamma(double shape, double scale);
    static SeverityLaw lognormal(double mu, double sigma);
    static SeverityLaw pareto(double shape, double scale);
    static SeverityLaw point_mass(double value);

    const Variant& variant() const noexcept { return variant_; }

    // E[Y^k]; +infinity when the moment does not exist.
    double raw_moment(int k) const;
    bool has_moment(int k) const;
    // E[Y^k], throwing InfiniteMoment when it does not exist.
    double require_moment(int k) const;

    double cdf(double y) const;
    double quantile(double u) const;
    double sample(Rng& rng) const { return quantile(rng.uniform()); }

    std::string describe() const;

private:
    explicit SeverityLaw(Variant v) : variant_(std::move(v)) {}
    Variant variant_;
};

// ---------------------------------------------------------------------------
// Dependence of claim sizes on arrival times.
//
// Claim i (1-based) is coupled to the previous arrival time x = T_{i-1}
// (T_0 = 0) and its waiting time v = V_i. Claims are conditionally
// independent given the arrival times.

using IndexedVFunction = std::function<double(std::size_t i, double v)>;
using IndexedTVFunction = std::function<double(std::size_t i, double x, double v)>;
using ClaimSampler = std::function<double(std::size_t i, double x, double v, Rng& rng)>;

// Piecewise-linear function on an increasing grid, flat outside it.
class PiecewiseLinear {
public:
    PiecewiseLinear(std::vector<double> knots, std::vector<double> values);
    double operator()(double x) const;
    double slope(double x) const;
    const std::vector<double>& knots() const noexcept { return knots_; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::vector<double> knots_;
    std::vector<double> values_;
};

// Bilinear interpolation on a rectangular grid, flat outside it. `values` is
// row-major with one row per x knot.
class BilinearTable {
public:
    BilinearTable(std::vector<double> x_knots, std::vector<double> v_knots, std::vector<double> values);
    double operator()(double x, double v) const;
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::vector<double> x_knots_;
    std::vector<double> v_knots_;
    std::vector<double> values_;
};

class DependenceModel {
public:
    // X_i | V_i = v is H_large with probability 1 - exp(-beta v), else H_small.
    struct Boudreault {
        double beta;
        SeverityLaw large;
        SeverityLaw small;
    };
    struct Independent {
        SeverityLaw severity;
    };
    // Conditional moments depending on the waiting time only.
    struct TabulatedV {
        IndexedVFunction mean;
        IndexedVFunction second;
        ClaimSampler sampler;
        bool index_invariant;
        // Waiting times where the moments may have kinks (table knots).
        std::vector<double> v_knots = {};
    };
    // Conditional moments depending on the previous arrival time and the wait.
    struct TabulatedTV {
        IndexedTVFunction mean;
        IndexedTVFunction second;
        ClaimSampler sampler;
        bool index_invariant;
    };
    using Variant = std::variant<Boudreault, Independent, TabulatedV, TabulatedTV>;

    static DependenceModel boudreault(double beta, SeverityLaw large, SeverityLaw small);
    static DependenceModel independent(SeverityLaw severity);
    // Function-backed variants. An empty sampler falls back to a gamma law
    // matched to the conditional mean and second moment.
    static DependenceModel v_dependent(IndexedVFunction mean, IndexedVFunction second,
                                       ClaimSampler sampler = {}, bool index_invariant = false);
    static DependenceModel tv_dependent(IndexedTVFunction mean, IndexedTVFunction second,
                                        ClaimSampler sampler = {}, bool index_invariant = false);
    // Grid-backed variants (piecewise-linear / bilinear, flat extrapolation).
    // Validates second >= mean^2 >= 0 at every knot.
    static DependenceModel tabulated_v(std::vector<double> v_grid, std::vector<double> means,
                                       std::vector<double> seconds);
    static DependenceModel tabulated_tv(std::vector<double> x_grid, std::vector<double> v_grid,
                                        std::vector<double> means, std::vector<double> seconds);

    const Variant& variant() const noexcept { return variant_; }

    // Waiting times where Delta_i or Theta_i may fail to be smooth; quadrature
    // panels are split there. Empty for smooth models.
    const std::vector<double>& v_kinks() const noexcept;

    // True when the claim law depends on V_i only (not on T_{i-1}).
    bool is_v_only() const noexcept;
    // True when Delta_i and Theta_i do not depend on the claim index.
    bool is_index_invariant() const noexcept;
    // Boudreault or Independent: the closed-form engine applies.
    bool has_closed_form() const noexcept;

    // Crude sup bounds of the conditional first and second moments over
    // v in [0, t], x in [0, t] and claim indices up to i_max.
    double mean_envelope(double t, std::size_t i_max) const;
    double second_envelope(double t, std::size_t i_max) const;

    // Draw X_i given T_{i-1} = x and V_i = v. Consumes exactly two uniforms
    // for the built-in variants.
    double sample_claim(std::size_t i, double x, double v, Rng& rng) const;

    std::string describe() const;

private:
    explicit DependenceModel(Variant v) : variant_(std::move(v)) {}
    Variant variant_;
};

// E[X_i | V_i = v, T_{i-1} = x] and E[X_i^2 | V_i = v, T_{i-1} = x].
double delta(const DependenceModel& dep, std::size_t i, double v, double x = 0.0);
double theta(const DependenceModel& dep, std::size_t i, double v, double x = 0.0);

// The (beta, large, small) triple of a model with a closed form. Independent(H)
// maps to (0, H, H). InvalidArgument for the tabulated variants.
DependenceModel::Boudreault closed_form_view(const DependenceModel& dep);

// Gamma law matched to a mean and second moment (point mass when the variance
// vanishes), sampled by inverse transform.
double sample_moment_matched(double mean, double second, double u);

// ---------------------------------------------------------------------------

struct SamplePath {
    double horizon = 0.0;
    std::vector<double> arrivals;
    std::vector<double> claims;
    double aggregate = 0.0;
};

} // namespace osclaims

#endif
