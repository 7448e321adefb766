#include "osclaims/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "osclaims/errors.hpp"
#include "osclaims/gauss_legendre.hpp"

namespace osclaims {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Exponential decay lengths after which a quadrature panel is split.
constexpr double kPanelDecay = 36.0;
// Random shifts of the randomized QMC rule.
constexpr std::size_t kQmcShifts = 16;

void require_horizon(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw InvalidArgument("time horizon must be finite and nonnegative");
    }
}

std::vector<double> log_factorials(std::size_t n) {
    std::vector<double> out(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        out[k] = std::lgamma(static_cast<double>(k) + 1.0);
    }
    return out;
}

// Count-series weights A_n = pi_{t,n} n! for n <= N, kept in log space, and
// the generating sums built from them:
//   K_j(q)          = sum_{n=j}^{N} A_n q^{n-j} / (n-j)!
//   collapsed(o, z) = sum_{m=0}^{N-o} A_{m+o} z^m / m!
class CountTable {
public:
    CountTable(const ProcessSpec& process, double t, const QuadratureConfig& cfg) {
        const auto trunc = truncate_counts(process, t, cfg.tail_epsilon, cfg.n_cap);
        n_max_ = trunc.n_max;
        lfact_ = log_factorials(n_max_);
        log_a_.assign(n_max_ + 1, kNegInf);
        double partial1 = 0.0;
        double partial2 = 0.0;
        for (std::size_t n = 0; n <= n_max_; ++n) {
            const double p = trunc.pmf[n];
            if (p > 0.0) {
                log_a_[n] = std::log(p) + lfact_[n];
            }
            const double nd = static_cast<double>(n);
            partial1 += nd * p;
            partial2 += nd * nd * p;
        }
        const double m1 = process.mean_count(t);
        const double m2 = process.factorial_second_moment(t) + m1;
        const double next = static_cast<double>(n_max_ + 1);
        tail1_ = std::max(m1 - partial1, next * trunc.tail_mass);
        tail2_ = std::max(m2 - partial2, next * next * trunc.tail_mass);
    }

    std::size_t n_max() const noexcept { return n_max_; }
    // Upper bounds of sum_{n > N} n pi_n and sum_{n > N} n^2 pi_n.
    double tail_first() const noexcept { return tail1_; }
    double tail_second() const noexcept { return tail2_; }

    // out[j] = K_j(q) restricted to n in [n_lo, n_hi], for j = 0..N.
    void fill(double q, std::vector<double>& out, std::size_t n_lo = 0,
              std::size_t n_hi = std::numeric_limits<std::size_t>::max()) const {
        out.assign(n_max_ + 1, 0.0);
        n_hi = std::min(n_hi, n_max_);
        const double log_q = q > 0.0 ? std::log(q) : kNegInf;
        for (std::size_t j = 0; j <= n_max_; ++j) {
            double sum = 0.0;
            for (std::size_t n = std::max(j, n_lo); n <= n_hi; ++n) {
                if (log_a_[n] == kNegInf) {
                    continue;
                }
                const std::size_t k = n - j;
                if (k == 0) {
                    sum += std::exp(log_a_[n]);
                } else if (q > 0.0) {
                    sum += std::exp(log_a_[n] - lfact_[k] + static_cast<double>(k) * log_q);
                }
            }
            out[j] = sum;
        }
    }

    double collapsed(std::size_t offset, double z) const {
        if (offset > n_max_) {
            return 0.0;
        }
        const double log_z = z > 0.0 ? std::log(z) : kNegInf;
        double sum = 0.0;
        for (std::size_t m = 0; m + offset <= n_max_; ++m) {
            const double la = log_a_[m + offset];
            if (la == kNegInf) {
                continue;
            }
            if (m == 0) {
                sum += std::exp(la);
            } else if (z > 0.0) {
                sum += std::exp(la - lfact_[m] + static_cast<double>(m) * log_z);
            }
        }
        return sum;
    }

private:
    std::size_t n_max_ = 0;
    std::vector<double> lfact_;
    std::vector<double> log_a_;
    double tail1_ = 0.0;
    double tail2_ = 0.0;
};

// Order-statistic geometry on graded unit coordinates: x = t phi(w) with
// phi(w) = w^k, cdf(w) = F_t(x) and density(w) = t f_t(x) phi'(w).
class Geometry {
public:
    Geometry(const ProcessSpec& process, double t) : process_(&process), t_(t) {
        if (const auto* p = std::get_if<ProcessSpec::NonHomogeneousPoisson>(&process.variant())) {
            total_ = p->cumulative(t);
            if (!(total_ > 0.0)) {
                throw DegenerateProcess("cumulative intensity vanishes on [0, t]");
            }
            uniform_ = false;
            power_ = p->cumulative.grading();
        }
    }

    static Geometry uniform(const ProcessSpec& process, double t) {
        Geometry g(process, t);
        g.uniform_ = true;
        g.power_ = 1.0;
        return g;
    }

    // Unit time phi(w).
    double time(double w) const { return power_ == 1.0 ? w : std::pow(w, power_); }

    double cdf(double w) const {
        if (uniform_) {
            return w;
        }
        const auto& p = std::get<ProcessSpec::NonHomogeneousPoisson>(process_->variant());
        return std::clamp(p.cumulative(t_ * time(w)) / total_, 0.0, 1.0);
    }

    double density(double w) const {
        if (uniform_) {
            return 1.0;
        }
        const auto& p = std::get<ProcessSpec::NonHomogeneousPoisson>(process_->variant());
        const double jac = power_ == 1.0 ? 1.0 : power_ * std::pow(w, power_ - 1.0);
        return t_ * p.cumulative.intensity(t_ * time(w)) / total_ * jac;
    }

private:
    const ProcessSpec* process_;
    double t_;
    double total_ = 1.0;
    double power_ = 1.0;
    bool uniform_ = true;
};

void check_residual(SeriesResult& result, const QuadratureConfig& cfg, const char* what) {
    if (result.residual_bound > cfg.residual_tolerance * std::abs(result.value)) {
        std::ostringstream msg;
        msg << what << ": truncation residual " << result.residual_bound << " exceeds tolerance "
            << cfg.residual_tolerance << " relative to value " << result.value << " (n_max = " << result.terms
            << ")";
        throw NumericFailure(msg.str(), result.residual_bound);
    }
}

// Conditional moment of claim i on unit times: previous arrival x, own arrival y.
using UnitMoment = std::function<double(std::size_t i, double x, double y)>;

// One-claim term plus the consecutive-pair family over order-statistic
// densities:
//   int fn(1, 0, y) f_{1|n}(y) dy + sum_i int int fn(i, x, y) f_{i-1,i|n}(x, y)
// summed against pi_n.
double single_claim_terms(const GaussLegendre& rule, const Geometry& geo, const CountTable& table,
                          const UnitMoment& fn, bool invariant) {
    const std::size_t n_max = table.n_max();
    std::vector<double> k;
    double total = 0.0;
    for (std::size_t a = 0; a < rule.size(); ++a) {
        const double y = rule.node(a);
        const double gy = geo.density(y);
        table.fill(1.0 - geo.cdf(y), k);
        if (n_max >= 1) {
            total += rule.weight(a) * gy * k[1] * fn(1, 0.0, y);
        }
        for (std::size_t b = 0; b < rule.size(); ++b) {
            const double x = y * rule.node(b);
            const double gx = geo.density(x);
            const double cx = geo.cdf(x);
            const double w = rule.weight(a) * rule.weight(b) * y * gx * gy;
            double acc = 0.0;
            double p = 1.0;  // F(x)^{i-2} / (i-2)!
            if (invariant) {
                for (std::size_t i = 2; i <= n_max; ++i) {
                    acc += p * k[i];
                    p *= cx / static_cast<double>(i - 1);
                }
                acc *= n_max >= 2 ? fn(2, x, y) : 0.0;
            } else {
                for (std::size_t i = 2; i <= n_max; ++i) {
                    acc += p * k[i] * fn(i, x, y);
                    p *= cx / static_cast<double>(i - 1);
                }
            }
            total += w * acc;
        }
    }
    return total;
}

UnitMoment unit_delta(const DependenceModel& dep, const Geometry& geo, double t) {
    return [&dep, &geo, t](std::size_t i, double x, double y) {
        const double tx = t * geo.time(x);
        return delta(dep, i, t * geo.time(y) - tx, tx);
    };
}

UnitMoment unit_theta(const DependenceModel& dep, const Geometry& geo, double t) {
    return [&dep, &geo, t](std::size_t i, double x, double y) {
        const double tx = t * geo.time(x);
        return theta(dep, i, t * geo.time(y) - tx, tx);
    };
}

// Pair terms of the second moment for conditionally independent claims. With
// R_j(w) = f(w) int_w^1 m_j(w, z) f(z) K_j(1 - F(z)) dz and
// P_i(y) = f(y) int_0^y m_i(x, y) f(x) F(x)^{i-2}/(i-2)! dx every family
// reduces to a two-dimensional sum.
double pair_terms(const GaussLegendre& rule, const Geometry& geo, const CountTable& table, const UnitMoment& mean,
                  bool invariant) {
    const std::size_t n_max = table.n_max();
    const std::size_t q = rule.size();
    if (n_max < 2) {
        return 0.0;
    }
    std::vector<double> k;
    std::vector<std::vector<double>> r(q, std::vector<double>(n_max + 1, 0.0));
    std::vector<double> g_node(q);
    std::vector<double> c_node(q);
    for (std::size_t a = 0; a < q; ++a) {
        const double w = rule.node(a);
        g_node[a] = geo.density(w);
        c_node[a] = geo.cdf(w);
        for (std::size_t c = 0; c < q; ++c) {
            const double z = w + (1.0 - w) * rule.node(c);
            const double wz = rule.weight(c) * (1.0 - w) * geo.density(z);
            table.fill(1.0 - geo.cdf(z), k);
            if (invariant) {
                const double m = wz * mean(2, w, z);
                for (std::size_t j = 2; j <= n_max; ++j) {
                    r[a][j] += m * k[j];
                }
            } else {
                for (std::size_t j = 2; j <= n_max; ++j) {
                    r[a][j] += wz * mean(j, w, z) * k[j];
                }
            }
        }
        for (std::size_t j = 2; j <= n_max; ++j) {
            r[a][j] *= g_node[a];
        }
    }

    // First two claims.
    double first_pair = 0.0;
    for (std::size_t a = 0; a < q; ++a) {
        first_pair += rule.weight(a) * mean(1, 0.0, rule.node(a)) * r[a][2];
    }

    double first_far = 0.0;    // claims 1 and j >= 3
    double consecutive = 0.0;  // claims i and i + 1, i >= 2
    double far = 0.0;          // claims i and j >= i + 2, i >= 2
    std::vector<double> dpow(n_max + 1);
    std::vector<double> p(n_max + 1);
    for (std::size_t a = 0; a < q; ++a) {
        const double w = rule.node(a);
        for (std::size_t b = 0; b < q; ++b) {
            const double y = w * rule.node(b);
            const double gy = geo.density(y);
            const double cy = geo.cdf(y);
            const double weight = rule.weight(a) * rule.weight(b) * w;
            const double d = c_node[a] - cy;
            dpow[0] = 1.0;
            for (std::size_t k2 = 1; k2 <= n_max; ++k2) {
                dpow[k2] = dpow[k2 - 1] * d / static_cast<double>(k2);
            }

            // Claim 1 at y, claim j with T_{j-1} = w.
            double acc = 0.0;
            for (std::size_t j = 3; j <= n_max; ++j) {
                acc += dpow[j - 3] * r[a][j];
            }
            first_far += weight * gy * mean(1, 0.0, y) * acc;

            // Claim i from y to w, claim i + 1 from w.
            acc = 0.0;
            double py = 1.0;
            if (invariant) {
                for (std::size_t i = 2; i + 1 <= n_max; ++i) {
                    acc += py * r[a][i + 1];
                    py *= cy / static_cast<double>(i - 1);
                }
                acc *= mean(2, y, w);
            } else {
                for (std::size_t i = 2; i + 1 <= n_max; ++i) {
                    acc += py * mean(i, y, w) * r[a][i + 1];
                    py *= cy / static_cast<double>(i - 1);
                }
            }
            consecutive += weight * gy * acc;

            if (n_max < 4) {
                continue;
            }
            // P_i(y) for i = 2..N-2.
            std::fill(p.begin(), p.end(), 0.0);
            for (std::size_t c = 0; c < q; ++c) {
                const double x = y * rule.node(c);
                const double cx = geo.cdf(x);
                const double wx = rule.weight(c) * y * geo.density(x);
                double px = 1.0;
                if (invariant) {
                    const double m = wx * mean(2, x, y);
                    for (std::size_t i = 2; i + 2 <= n_max; ++i) {
                        p[i] += m * px;
                        px *= cx / static_cast<double>(i - 1);
                    }
                } else {
                    for (std::size_t i = 2; i + 2 <= n_max; ++i) {
                        p[i] += wx * mean(i, x, y) * px;
                        px *= cx / static_cast<double>(i - 1);
                    }
                }
            }
            acc = 0.0;
            for (std::size_t j = 4; j <= n_max; ++j) {
                double inner = 0.0;
                for (std::size_t i = 2; i + 2 <= j; ++i) {
                    inner += p[i] * dpow[j - i - 2];
                }
                acc += inner * r[a][j];
            }
            far += weight * gy * acc;
        }
    }
    return first_pair + first_far + consecutive + far;
}

SeriesResult second_moment_factorized(double t, const ProcessSpec& process, const Geometry& geo,
                                      const DependenceModel& dep, const QuadratureConfig& cfg, const char* what) {
    SeriesResult result;
    if (t == 0.0) {
        return result;
    }
    const CountTable table(process, t, cfg);
    const auto& rule = gauss_legendre(cfg.nodes_per_axis);
    const bool invariant = dep.is_index_invariant();
    const double singles = single_claim_terms(rule, geo, table, unit_theta(dep, geo, t), invariant);
    const double pairs = pair_terms(rule, geo, table, unit_delta(dep, geo, t), invariant);
    result.value = singles + 2.0 * pairs;
    result.terms = table.n_max();
    const std::size_t n_max = std::max<std::size_t>(table.n_max(), 1);
    const double m = dep.mean_envelope(t, n_max);
    result.residual_bound = std::max(dep.second_envelope(t, n_max), m * m) * table.tail_second();
    check_residual(result, cfg, what);
    return result;
}

// ---------------------------------------------------------------------------
// Generic cube integration for the joint-product path.

using CubeIntegrand = std::function<double(const double* u)>;

double tensor_cube(std::size_t dim, const GaussLegendre& rule, const CubeIntegrand& f) {
    const std::size_t q = rule.size();
    std::array<std::size_t, 4> idx{};
    std::array<double, 4> u{};
    double total = 0.0;
    for (;;) {
        double w = 1.0;
        for (std::size_t d = 0; d < dim; ++d) {
            u[d] = rule.node(idx[d]);
            w *= rule.weight(idx[d]);
        }
        total += w * f(u.data());
        std::size_t d = 0;
        while (d < dim && ++idx[d] == q) {
            idx[d] = 0;
            ++d;
        }
        if (d == dim) {
            break;
        }
    }
    return total;
}

double radical_inverse(std::uint64_t index, std::uint64_t base) {
    double result = 0.0;
    double f = 1.0 / static_cast<double>(base);
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= static_cast<double>(base);
    }
    return result;
}

struct QmcEstimate {
    double value;
    double standard_error;
};

// Halton points with Cranley-Patterson random shifts; the spread across
// shifts gives the standard error.
QmcEstimate qmc_cube(std::size_t dim, std::size_t samples, std::uint64_t seed, const CubeIntegrand& f) {
    static constexpr std::array<std::uint64_t, 4> kBases{2, 3, 5, 7};
    const std::size_t per_shift = std::max<std::size_t>(1, samples / kQmcShifts);
    Rng rng(seed);
    std::array<double, kQmcShifts> estimates{};
    for (std::size_t s = 0; s < kQmcShifts; ++s) {
        std::array<double, 4> shift{};
        for (std::size_t d = 0; d < dim; ++d) {
            shift[d] = rng.uniform();
        }
        double sum = 0.0;
        std::array<double, 4> u{};
        for (std::size_t k = 1; k <= per_shift; ++k) {
            for (std::size_t d = 0; d < dim; ++d) {
                const double v = radical_inverse(k, kBases[d]) + shift[d];
                u[d] = v >= 1.0 ? v - 1.0 : v;
            }
            sum += f(u.data());
        }
        estimates[s] = sum / static_cast<double>(per_shift);
    }
    double mean = 0.0;
    for (double e : estimates) {
        mean += e;
    }
    mean /= kQmcShifts;
    double ss = 0.0;
    for (double e : estimates) {
        ss += (e - mean) * (e - mean);
    }
    return {mean, std::sqrt(ss / (kQmcShifts - 1) / kQmcShifts)};
}

// Descending ordered coordinates c_0 >= c_1 >= ... from cube coordinates:
// c_0 = u_0, c_k = c_{k-1} u_k. Returns the Jacobian.
double to_simplex(std::size_t dim, const double* u, double* c) {
    double jac = 1.0;
    c[0] = u[0];
    for (std::size_t d = 1; d < dim; ++d) {
        c[d] = c[d - 1] * u[d];
        jac *= c[d - 1];
    }
    return jac;
}

} // namespace

// ---------------------------------------------------------------------------

void QuadratureConfig::validate() const {
    if (nodes_per_axis < 8) {
        throw InvalidArgument("quadrature.nodes_per_axis must be at least 8");
    }
    if (!(tail_epsilon > 0.0 && tail_epsilon < 1e-3)) {
        throw InvalidArgument("quadrature.tail_epsilon must lie in (0, 1e-3)");
    }
    if (n_cap < kMinTruncation) {
        throw InvalidArgument("quadrature.n_cap must be at least 10");
    }
    if (dim_cap < 2 || dim_cap > 4) {
        throw InvalidArgument("quadrature.dim_cap must lie in [2, 4]");
    }
    if (mc_fallback_samples < kQmcShifts * 2) {
        throw InvalidArgument("quadrature.mc_fallback_samples must be at least 32");
    }
    if (!(residual_tolerance > 0.0) || !std::isfinite(residual_tolerance)) {
        throw InvalidArgument("quadrature.residual_tolerance must be positive");
    }
    if (joint_nodes_per_axis < 4) {
        throw InvalidArgument("quadrature.joint_nodes_per_axis must be at least 4");
    }
}

// ---------------------------------------------------------------------------

OrderStatDensity::OrderStatDensity(Kind kind, std::size_t i, std::size_t j, std::size_t n, ProcessSpec process,
                                   double t)
    : kind_(kind), i_(i), j_(j), n_(n), process_(std::move(process)), t_(t) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw InvalidArgument("order-statistic density needs t > 0");
    }
    auto lf = [](std::size_t k) { return std::lgamma(static_cast<double>(k) + 1.0); };
    switch (kind_) {
    case Kind::First:
        if (n < 1) {
            throw InvalidArgument("first order statistic needs n >= 1");
        }
        log_coefficient_ = std::log(static_cast<double>(n));
        break;
    case Kind::ConsecutivePair:
        if (i < 2 || i > n) {
            throw InvalidArgument("consecutive pair needs 2 <= i <= n");
        }
        log_coefficient_ = lf(n) - lf(i - 2) - lf(n - i);
        break;
    case Kind::FirstPlusPair:
        if (j < 3 || j > n) {
            throw InvalidArgument("first-plus-pair needs 3 <= j <= n");
        }
        log_coefficient_ = lf(n) - lf(j - 3) - lf(n - j);
        break;
    case Kind::TripleConsecutive:
        if (i < 2 || i + 1 > n) {
            throw InvalidArgument("consecutive triple needs 2 <= i <= n - 1");
        }
        log_coefficient_ = lf(n) - lf(i - 2) - lf(n - i - 1);
        break;
    case Kind::DoublePair:
        if (i < 2 || j < i + 2 || j > n) {
            throw InvalidArgument("double pair needs 2 <= i, i + 2 <= j <= n");
        }
        log_coefficient_ = lf(n) - lf(i - 2) - lf(j - i - 2) - lf(n - j);
        break;
    }
}

std::size_t OrderStatDensity::dimension() const noexcept {
    switch (kind_) {
    case Kind::First:
        return 1;
    case Kind::ConsecutivePair:
        return 2;
    case Kind::FirstPlusPair:
    case Kind::TripleConsecutive:
        return 3;
    case Kind::DoublePair:
        return 4;
    }
    return 0;
}

double OrderStatDensity::operator()(std::span<const double> times) const {
    const std::size_t dim = dimension();
    if (times.size() != dim) {
        throw InvalidArgument("order-statistic density evaluated at the wrong number of times");
    }
    for (std::size_t k = 0; k < dim; ++k) {
        if (times[k] < 0.0 || times[k] > t_ || (k > 0 && times[k] < times[k - 1])) {
            return 0.0;
        }
    }
    double f = std::exp(log_coefficient_);
    for (double x : times) {
        f *= os_density(process_, t_, x);
    }
    auto cdf = [&](double x) { return os_cdf(process_, t_, x); };
    auto pw = [](double base, std::size_t e) { return std::pow(base, static_cast<double>(e)); };
    switch (kind_) {
    case Kind::First:
        return f * pw(1.0 - cdf(times[0]), n_ - 1);
    case Kind::ConsecutivePair:
        return f * pw(cdf(times[0]), i_ - 2) * pw(1.0 - cdf(times[1]), n_ - i_);
    case Kind::FirstPlusPair:
        return f * pw(cdf(times[1]) - cdf(times[0]), j_ - 3) * pw(1.0 - cdf(times[2]), n_ - j_);
    case Kind::TripleConsecutive:
        return f * pw(cdf(times[0]), i_ - 2) * pw(1.0 - cdf(times[2]), n_ - i_ - 1);
    case Kind::DoublePair:
        return f * pw(cdf(times[0]), i_ - 2) * pw(cdf(times[2]) - cdf(times[1]), j_ - i_ - 2) *
               pw(1.0 - cdf(times[3]), n_ - j_);
    }
    return 0.0;
}

double OrderStatDensity::total_mass(std::size_t nodes) const {
    const std::size_t dim = dimension();
    const auto& rule = gauss_legendre(nodes);
    double k = 1.0;
    if (const auto* p = std::get_if<ProcessSpec::NonHomogeneousPoisson>(&process_.variant())) {
        k = p->cumulative.grading();
    }
    return tensor_cube(dim, rule, [&](const double* u) {
        std::array<double, 4> c{};
        double jac = to_simplex(dim, u, c.data());
        std::array<double, 4> times{};
        for (std::size_t d = 0; d < dim; ++d) {
            const double w = c[dim - 1 - d];
            times[d] = t_ * std::pow(w, k);
            jac *= k * std::pow(w, k - 1.0);
        }
        return jac * std::pow(t_, static_cast<double>(dim)) *
               (*this)(std::span<const double>(times.data(), dim));
    });
}

// ---------------------------------------------------------------------------

JointProductModel JointProductModel::from_dependence(const DependenceModel& dep, double t, std::size_t i_max) {
    JointProductModel model;
    model.second = [dep](std::size_t i, double x, double v) { return theta(dep, i, v, x); };
    model.product = [dep](std::size_t i, std::size_t j, double x, double y, double w, double z) {
        return delta(dep, i, y - x, x) * delta(dep, j, z - w, w);
    };
    const double m = dep.mean_envelope(t, i_max);
    model.bound = std::max(dep.second_envelope(t, i_max), m * m);
    return model;
}

SeriesResult mean_os_series(double t, const ProcessSpec& process, const DependenceModel& dep,
                            const QuadratureConfig& cfg) {
    cfg.validate();
    require_horizon(t);
    SeriesResult result;
    if (t == 0.0) {
        return result;
    }
    const CountTable table(process, t, cfg);
    const Geometry geo(process, t);
    const auto& rule = gauss_legendre(cfg.nodes_per_axis);
    result.value = single_claim_terms(rule, geo, table, unit_delta(dep, geo, t), dep.is_index_invariant());
    result.terms = table.n_max();
    result.residual_bound = dep.mean_envelope(t, std::max<std::size_t>(table.n_max(), 1)) * table.tail_first();
    check_residual(result, cfg, "order-statistic mean series");
    return result;
}

SeriesResult second_moment_os_series(double t, const ProcessSpec& process, const DependenceModel& dep,
                                     const QuadratureConfig& cfg) {
    cfg.validate();
    require_horizon(t);
    if (t == 0.0) {
        return {};
    }
    return second_moment_factorized(t, process, Geometry(process, t), dep, cfg,
                                    "order-statistic second-moment series");
}

SeriesResult second_moment_os_series(double t, const ProcessSpec& process, const JointProductModel& model,
                                     const QuadratureConfig& cfg) {
    cfg.validate();
    require_horizon(t);
    if (!model.second || !model.product) {
        throw InvalidArgument("joint-product model needs second-moment and product functions");
    }
    SeriesResult result;
    if (t == 0.0) {
        return result;
    }
    const CountTable table(process, t, cfg);
    const Geometry geo(process, t);
    const std::size_t n_max = table.n_max();
    const auto& rule = gauss_legendre(cfg.nodes_per_axis);
    const auto& joint_rule = gauss_legendre(std::min(cfg.joint_nodes_per_axis, cfg.nodes_per_axis));
    auto T = [&](double w) { return t * geo.time(w); };

    const double singles = single_claim_terms(
        rule, geo, table,
        [&](std::size_t i, double x, double y) { return model.second(i, T(x), T(y) - T(x)); }, false);

    double pairs = 0.0;
    double variance = 0.0;
    std::uint64_t family_seed = cfg.qmc_seed;
    auto integrate = [&](std::size_t dim, const CubeIntegrand& f) {
        if (dim <= cfg.dim_cap) {
            pairs += tensor_cube(dim, joint_rule, f);
        } else {
            const auto est = qmc_cube(dim, cfg.mc_fallback_samples, family_seed, f);
            pairs += est.value;
            variance += est.standard_error * est.standard_error;
        }
        family_seed = splitmix64(family_seed);
    };

    if (n_max >= 2) {
        // Claims 1 and 2: z = T_2, y = T_1.
        integrate(2, [&](const double* u) {
            double c[2];
            const double jac = to_simplex(2, u, c);
            const double z = c[0], y = c[1];
            std::vector<double> k;
            table.fill(1.0 - geo.cdf(z), k);
            return jac * geo.density(y) * geo.density(z) * k[2] * model.product(1, 2, 0.0, T(y), T(y), T(z));
        });
    }
    if (n_max >= 3) {
        // Claims 1 and j >= 3: z = T_j, w = T_{j-1}, y = T_1.
        integrate(3, [&](const double* u) {
            double c[3];
            const double jac = to_simplex(3, u, c);
            const double z = c[0], w = c[1], y = c[2];
            std::vector<double> k;
            table.fill(1.0 - geo.cdf(z), k);
            const double d = geo.cdf(w) - geo.cdf(y);
            double dp = 1.0;
            double acc = 0.0;
            for (std::size_t j = 3; j <= n_max; ++j) {
                acc += dp * k[j] * model.product(1, j, 0.0, T(y), T(w), T(z));
                dp *= d / static_cast<double>(j - 2);
            }
            return jac * geo.density(y) * geo.density(w) * geo.density(z) * acc;
        });
        // Claims i and i + 1, i >= 2: z = T_{i+1}, w = T_i, y = T_{i-1}.
        integrate(3, [&](const double* u) {
            double c[3];
            const double jac = to_simplex(3, u, c);
            const double z = c[0], w = c[1], y = c[2];
            std::vector<double> k;
            table.fill(1.0 - geo.cdf(z), k);
            const double cy = geo.cdf(y);
            double py = 1.0;
            double acc = 0.0;
            for (std::size_t i = 2; i + 1 <= n_max; ++i) {
                acc += py * k[i + 1] * model.product(i, i + 1, T(y), T(w), T(w), T(z));
                py *= cy / static_cast<double>(i - 1);
            }
            return jac * geo.density(y) * geo.density(w) * geo.density(z) * acc;
        });
    }
    if (n_max >= 4) {
        // Claims i and j >= i + 2: z = T_j, w = T_{j-1}, y = T_i, x = T_{i-1}.
        auto far_pairs = [&](std::size_t n_lo, std::size_t n_hi) {
            return [&, n_lo, n_hi](const double* u) {
                double c[4];
                const double jac = to_simplex(4, u, c);
                const double z = c[0], w = c[1], y = c[2], x = c[3];
                std::vector<double> k;
                table.fill(1.0 - geo.cdf(z), k, n_lo, n_hi);
                const double cx = geo.cdf(x);
                const double d = geo.cdf(w) - geo.cdf(y);
                double acc = 0.0;
                double px = 1.0;
                for (std::size_t i = 2; i + 2 <= n_max; ++i) {
                    double dp = 1.0;
                    for (std::size_t j = i + 2; j <= std::min(n_max, n_hi); ++j) {
                        acc += px * dp * k[j] * model.product(i, j, T(x), T(y), T(w), T(z));
                        dp *= d / static_cast<double>(j - i - 1);
                    }
                    px *= cx / static_cast<double>(i - 1);
                }
                return jac * geo.density(x) * geo.density(y) * geo.density(w) * geo.density(z) * acc;
            };
        };
        const std::size_t split = cfg.dim_cap >= 4 ? cfg.double_pair_tensor_max_n : 0;
        if (split >= 4) {
            pairs += tensor_cube(4, joint_rule, far_pairs(0, std::min(split, n_max)));
        }
        if (n_max > split) {
            const auto est = qmc_cube(4, cfg.mc_fallback_samples, family_seed, far_pairs(split + 1, n_max));
            pairs += est.value;
            variance += est.standard_error * est.standard_error;
        }
    }

    result.value = singles + 2.0 * pairs;
    result.standard_error = 2.0 * std::sqrt(variance);
    result.terms = n_max;
    result.residual_bound = model.bound * table.tail_second();
    check_residual(result, cfg, "joint-product second-moment series");
    return result;
}

// ---------------------------------------------------------------------------

SeriesResult mean_mixed_series(double t, const ProcessSpec& process, const DependenceModel& dep,
                               const QuadratureConfig& cfg) {
    cfg.validate();
    require_horizon(t);
    if (!process.has_uniform_arrivals()) {
        throw InvalidArgument("the mixed Poisson mean series needs uniform order-statistic arrivals");
    }
    SeriesResult result;
    if (t == 0.0) {
        return result;
    }
    const CountTable table(process, t, cfg);
    const auto& rule = gauss_legendre(cfg.nodes_per_axis);
    const std::size_t n_max = table.n_max();
    const bool invariant = dep.is_index_invariant();
    std::vector<double> k;
    double value = 0.0;
    // First claim: sum_n pi_n n (1 - s)^{n-1}.
    for (std::size_t a = 0; a < rule.size(); ++a) {
        const double s = rule.node(a);
        value += rule.weight(a) * delta(dep, 1, t * s, 0.0) * table.collapsed(1, 1.0 - s);
    }
    // Claim i >= 2 with T_{i-1} = t s and V_i = t (1 - s) r; the kernel
    // x^{i-2} (t - x - v)^{n-i} / t^n becomes s^{i-2} (1 - s)^{n-i+1} (1 - r)^{n-i}.
    if (n_max >= 2) {
        for (std::size_t a = 0; a < rule.size(); ++a) {
            const double s = rule.node(a);
            for (std::size_t b = 0; b < rule.size(); ++b) {
                const double r = rule.node(b);
                const double rest = (1.0 - s) * (1.0 - r);
                const double w = rule.weight(a) * rule.weight(b) * (1.0 - s);
                const double x = t * s;
                const double v = t * (1.0 - s) * r;
                if (invariant) {
                    value += w * delta(dep, 2, v, x) * table.collapsed(2, s + rest);
                } else {
                    table.fill(rest, k);
                    double p = 1.0;
                    double acc = 0.0;
                    for (std::size_t i = 2; i <= n_max; ++i) {
                        acc += p * k[i] * delta(dep, i, v, x);
                        p *= s / static_cast<double>(i - 1);
                    }
                    value += w * acc;
                }
            }
        }
    }
    result.value = value;
    result.terms = n_max;
    result.residual_bound = dep.mean_envelope(t, std::max<std::size_t>(n_max, 1)) * table.tail_first();
    check_residual(result, cfg, "mixed Poisson mean series");
    return result;
}

SeriesResult second_moment_mixed_series(double t, const ProcessSpec& process, const DependenceModel& dep,
                                        const QuadratureConfig& cfg) {
    cfg.validate();
    require_horizon(t);
    if (!process.has_uniform_arrivals()) {
        throw InvalidArgument("the mixed Poisson second-moment series needs uniform order-statistic arrivals");
    }
    if (t == 0.0) {
        return {};
    }
    return second_moment_factorized(t, process, Geometry::uniform(process, t), dep, cfg,
                                    "mixed Poisson second-moment series");
}

// ---------------------------------------------------------------------------

namespace {

// Truncated Poisson(mu) pmf: the first n >= 10 with tail mass below epsilon.
std::vector<double> poisson_truncated(double mu, const QuadratureConfig& cfg, double epsilon, double& tail_mass) {
    std::size_t guess = std::max<std::size_t>(
        kMinTruncation, static_cast<std::size_t>(std::ceil(mu + 10.0 * std::sqrt(mu) + 20.0)));
    guess = std::min(guess, cfg.n_cap);
    const auto pmf = poisson_pmfs(mu, guess);
    double cumulative = 0.0;
    for (std::size_t n = 0; n <= guess; ++n) {
        cumulative += pmf[n];
        if (n >= kMinTruncation && cumulative >= 1.0 - epsilon) {
            tail_mass = std::max(0.0, 1.0 - cumulative);
            return {pmf.begin(), pmf.begin() + static_cast<std::ptrdiff_t>(n + 1)};
        }
    }
    tail_mass = std::max(0.0, 1.0 - cumulative);
    return pmf;
}

// Integral over [0, length] of f against a factor decaying at `rate`. Panels
// break where the decay has run its course and at the kinks of f.
template <class F>
double decaying_integral(const GaussLegendre& rule, F&& f, double length, double rate,
                         const std::vector<double>& kinks) {
    if (length <= 0.0) {
        return 0.0;
    }
    std::vector<double> breaks{0.0, length};
    if (kPanelDecay / rate < length) {
        breaks.push_back(kPanelDecay / rate);
    }
    for (double k : kinks) {
        if (k > 0.0 && k < length) {
            breaks.push_back(k);
        }
    }
    std::sort(breaks.begin(), breaks.end());
    double sum = 0.0;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        if (breaks[p + 1] > breaks[p]) {
            sum += rule.integrate(f, breaks[p], breaks[p + 1]);
        }
    }
    return sum;
}

// Integral of per-rate residual bounds against the structure law. Rates seen
// while integrating the value are reused; a rough integral falls back to the
// largest bound seen.
double structure_residual(const StructureDistribution& structure, std::map<double, double>& seen,
                          const std::function<void(double)>& evaluate) {
    double largest = 0.0;
    for (const auto& [lambda, r] : seen) {
        largest = std::max(largest, r);
    }
    if (largest == 0.0) {
        return 0.0;
    }
    try {
        return structure_integrate(
                   structure,
                   [&](double lambda) {
                       auto it = seen.find(lambda);
                       if (it == seen.end()) {
                           evaluate(lambda);
                           it = seen.find(lambda);
                       }
                       return it->second;
                   },
                   1e-3)
            .value;
    } catch (const NumericFailure&) {
        return largest;
    }
}

void require_integral_inputs(const ProcessSpec& process, const DependenceModel& dep) {
    if (!process.has_uniform_arrivals()) {
        throw InvalidArgument("the mixed Poisson integral form needs a mixed or homogeneous Poisson process");
    }
    if (!dep.is_v_only()) {
        throw InvalidArgument("the mixed Poisson integral form needs claims depending on the waiting time only");
    }
}

} // namespace

SeriesResult mean_mixed_integral(double t, const ProcessSpec& process, const DependenceModel& dep,
                                 const QuadratureConfig& cfg) {
    cfg.validate();
    require_horizon(t);
    require_integral_inputs(process, dep);
    SeriesResult result;
    if (t == 0.0) {
        return result;
    }
    const auto& rule = gauss_legendre(cfg.nodes_per_axis);
    const bool invariant = dep.is_index_invariant();
    const auto& kinks = dep.v_kinks();
    // Inner Poisson sums are cheap, so they are truncated well past the tail rule.
    const double inner_epsilon = cfg.tail_epsilon * 1e-4;
    std::map<double, double> residual_at;
    std::size_t worst_terms = 0;
    const double env = invariant ? 0.0 : dep.mean_envelope(t, cfg.n_cap + 1);

    auto rate_term = [&](double lambda) {
        double residual = 0.0;
        const double value = decaying_integral(
            rule,
            [&](double v) {
                const double mu = lambda * (t - v);
                double expected_q = 0.0;
                if (invariant) {
                    expected_q = (mu + 1.0) * delta(dep, 1, v);
                } else {
                    double tail_mass = 0.0;
                    const auto pmf = poisson_truncated(mu, cfg, inner_epsilon, tail_mass);
                    double q = 0.0;
                    double covered = 0.0;
                    for (std::size_t k = 0; k < pmf.size(); ++k) {
                        q += delta(dep, k + 1, v);
                        expected_q += pmf[k] * q;
                        covered += pmf[k] * static_cast<double>(k + 1);
                    }
                    const double tail = std::max(mu + 1.0 - covered,
                                                 static_cast<double>(pmf.size() + 1) * tail_mass);
                    residual = std::max(residual, env * tail);
                    worst_terms = std::max(worst_terms, pmf.size() - 1);
                }
                return lambda * std::exp(-lambda * v) * expected_q;
            },
            t, lambda, kinks);
        residual_at[lambda] = residual * lambda * t;
        return value;
    };
    const auto structure = process.structure();
    result.value = structure_integrate(structure, rate_term).value;
    result.residual_bound = structure_residual(structure, residual_at, rate_term);
    result.terms = worst_terms;
    check_residual(result, cfg, "mixed Poisson mean integral");
    return result;
}

SeriesResult second_moment_mixed_integral(double t, const ProcessSpec& process, const DependenceModel& dep,
                                          const QuadratureConfig& cfg) {
    cfg.validate();
    require_horizon(t);
    require_integral_inputs(process, dep);
    SeriesResult result;
    if (t == 0.0) {
        return result;
    }
    const auto& rule = gauss_legendre(cfg.nodes_per_axis);
    const bool invariant = dep.is_index_invariant();
    const auto& kinks = dep.v_kinks();
    // Inner Poisson sums are cheap, so they are truncated well past the tail rule.
    const double inner_epsilon = cfg.tail_epsilon * 1e-4;
    std::map<double, double> residual_at;
    std::size_t worst_terms = 0;
    double env = 0.0;
    if (!invariant) {
        const double m = dep.mean_envelope(t, cfg.n_cap + 2);
        env = std::max(dep.second_envelope(t, cfg.n_cap + 2), m * m);
    }

    auto rate_term = [&](double lambda) {
        double residual = 0.0;
        // E[Theta(N_lambda(t - v) + 1 | v)]
        const double singles = decaying_integral(
            rule,
            [&](double v) {
                const double mu = lambda * (t - v);
                double expected = 0.0;
                if (invariant) {
                    expected = (mu + 1.0) * theta(dep, 1, v);
                } else {
                    double tail_mass = 0.0;
                    const auto pmf = poisson_truncated(mu, cfg, inner_epsilon, tail_mass);
                    double sum = 0.0;
                    double covered = 0.0;
                    for (std::size_t k = 0; k < pmf.size(); ++k) {
                        sum += theta(dep, k + 1, v);
                        expected += pmf[k] * sum;
                        covered += pmf[k] * static_cast<double>(k + 1);
                    }
                    const double tail = std::max(mu + 1.0 - covered,
                                                 static_cast<double>(pmf.size() + 1) * tail_mass);
                    residual = std::max(residual, env * tail * lambda * t);
                    worst_terms = std::max(worst_terms, pmf.size() - 1);
                }
                return lambda * std::exp(-lambda * v) * expected;
            },
            t, lambda, kinks);
        // E[Upsilon(N_lambda(t - y - v) + 2 | y, v)]
        const double pairs = decaying_integral(
            rule,
            [&](double y) {
                return decaying_integral(
                    rule,
                    [&](double v) {
                        const double mu = lambda * (t - y - v);
                        double expected = 0.0;
                        if (invariant) {
                            expected = ((mu + 2.0) * (mu + 2.0) - 2.0) * delta(dep, 1, y) * delta(dep, 1, v);
                        } else {
                            double tail_mass = 0.0;
                            const auto pmf = poisson_truncated(mu, cfg, inner_epsilon, tail_mass);
                            double sum_y = delta(dep, 1, y);
                            double sum_v = delta(dep, 1, v);
                            double diag = sum_y * sum_v;
                            double covered = 0.0;
                            for (std::size_t k = 0; k < pmf.size(); ++k) {
                                const std::size_t n = k + 2;
                                const double dy = delta(dep, n, y);
                                const double dv = delta(dep, n, v);
                                sum_y += dy;
                                sum_v += dv;
                                diag += dy * dv;
                                expected += pmf[k] * (sum_y * sum_v - diag);
                                covered += pmf[k] * static_cast<double>(n * (n - 1));
                            }
                            const double second = (mu + 2.0) * (mu + 2.0) - 2.0;
                            const double next = static_cast<double>(pmf.size() + 2);
                            const double tail = std::max(second - covered, next * next * tail_mass);
                            residual = std::max(residual, env * tail * lambda * lambda * t * t);
                            worst_terms = std::max(worst_terms, pmf.size() - 1);
                        }
                        return lambda * lambda * std::exp(-lambda * (y + v)) * expected;
                    },
                    t - y, lambda, kinks);
            },
            t, lambda, kinks);
        residual_at[lambda] = residual;
        return singles + pairs;
    };
    const auto structure = process.structure();
    result.value = structure_integrate(structure, rate_term).value;
    result.residual_bound = structure_residual(structure, residual_at, rate_term);
    result.terms = worst_terms;
    check_residual(result, cfg, "mixed Poisson second-moment integral");
    return result;
}

SeriesResult poisson_functional_expectation(double lambda, double s, const std::function<double(std::size_t)>& h,
                                            const QuadratureConfig& cfg) {
    cfg.validate();
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("Poisson rate must be finite and positive");
    }
    require_horizon(s);
    double tail_mass = 0.0;
    const double mu = lambda * s;
    const auto pmf = poisson_truncated(mu, cfg, cfg.tail_epsilon, tail_mass);
    SeriesResult result;
    for (std::size_t n = 0; n < pmf.size(); ++n) {
        result.value += pmf[n] * h(n);
    }
    result.terms = pmf.size() - 1;
    // Size of the next block of discarded terms.
    const std::size_t first = pmf.size();
    const std::size_t last = 2 * first + 20;
    const auto extended = poisson_pmfs(mu, last);
    for (std::size_t n = first; n <= last; ++n) {
        result.residual_bound += extended[n] * std::abs(h(n));
    }
    check_residual(result, cfg, "Poisson functional expectation");
    return result;
}

} // namespace osclaims
