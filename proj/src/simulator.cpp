#include "osclaims/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>

#include <boost/math/special_functions/gamma.hpp>

#include "osclaims/errors.hpp"

namespace osclaims {

namespace {

constexpr std::size_t kInversionGrid = 1024;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Running central moments up to order four, merged with the pairwise update
// formulas of Pebay (2008).
struct CentralMoments {
    double n = 0.0;
    double mean = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;

    void add(double x) {
        CentralMoments one;
        one.n = 1.0;
        one.mean = x;
        merge(one);
    }

    void merge(const CentralMoments& b) {
        if (b.n == 0.0) {
            return;
        }
        if (n == 0.0) {
            *this = b;
            return;
        }
        const double na = n;
        const double nb = b.n;
        const double nn = na + nb;
        const double d = b.mean - mean;
        const double d2 = d * d;
        const double m4_new = m4 + b.m4 + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (nn * nn * nn) +
                              6.0 * d2 * (na * na * b.m2 + nb * nb * m2) / (nn * nn) +
                              4.0 * d * (na * b.m3 - nb * m3) / nn;
        const double m3_new = m3 + b.m3 + d2 * d * na * nb * (na - nb) / (nn * nn) +
                              3.0 * d * (na * b.m2 - nb * m2) / nn;
        const double m2_new = m2 + b.m2 + d2 * na * nb / nn;
        mean += d * nb / nn;
        m2 = m2_new;
        m3 = m3_new;
        m4 = m4_new;
        n = nn;
    }
};

struct BlockStats {
    CentralMoments aggregate;
    CentralMoments square;
};

MomentEstimate make_estimate(double point, double stderr_value, std::size_t replicates, std::uint64_t seed) {
    MomentEstimate e;
    e.point = point;
    e.replicates = replicates;
    e.seed = seed;
    e.degenerate = replicates < 2;
    e.standard_error = e.degenerate ? kNaN : stderr_value;
    e.lower = point - 1.96 * e.standard_error;
    e.upper = point + 1.96 * e.standard_error;
    return e;
}

} // namespace

void SimulationPlan::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw InvalidArgument("simulation horizon must be finite and positive");
    }
    if (replicates < 1) {
        throw InvalidArgument("simulation needs at least one replicate");
    }
}

std::size_t sample_poisson(double mu, Rng& rng) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw InvalidArgument("Poisson mean must be finite and nonnegative");
    }
    if (mu == 0.0) {
        return 0;
    }
    const double u = rng.uniform();
    if (mu < 50.0) {
        double p = std::exp(-mu);
        double cdf = p;
        std::size_t n = 0;
        while (cdf < u && p > 0.0) {
            ++n;
            p *= mu / static_cast<double>(n);
            cdf += p;
        }
        return n;
    }
    // Start at the mode with the exact cdf, then walk.
    std::size_t n = static_cast<std::size_t>(std::floor(mu));
    auto pmf = [mu](std::size_t k) {
        const double kd = static_cast<double>(k);
        return std::exp(kd * std::log(mu) - mu - std::lgamma(kd + 1.0));
    };
    double cdf = boost::math::gamma_q(static_cast<double>(n) + 1.0, mu);
    if (cdf >= u) {
        while (n > 0) {
            const double below = cdf - pmf(n);
            if (below < u) {
                break;
            }
            cdf = below;
            --n;
        }
        return n;
    }
    while (cdf < u) {
        ++n;
        const double p = pmf(n);
        if (p == 0.0) {
            break;
        }
        cdf += p;
    }
    return n;
}

std::size_t sample_count(const ProcessSpec& process, double t, Rng& rng) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw InvalidArgument("time horizon must be finite and nonnegative");
    }
    if (const auto* m = std::get_if<ProcessSpec::MixedPoisson>(&process.variant())) {
        const double lambda = m->structure.sample(rng);
        return sample_poisson(lambda * t, rng);
    }
    if (const auto* h = std::get_if<ProcessSpec::HomogeneousPoisson>(&process.variant())) {
        return sample_poisson(h->rate * t, rng);
    }
    const auto& p = std::get<ProcessSpec::NonHomogeneousPoisson>(process.variant());
    return sample_poisson(p.cumulative(t), rng);
}

ArrivalSampler::ArrivalSampler(const ProcessSpec& process, double t) : process_(&process), t_(t) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw InvalidArgument("time horizon must be finite and nonnegative");
    }
    const auto* p = std::get_if<ProcessSpec::NonHomogeneousPoisson>(&process.variant());
    if (p == nullptr || t == 0.0) {
        return;
    }
    uniform_ = false;
    total_ = p->cumulative(t);
    if (!(total_ > 0.0) || !std::isfinite(total_)) {
        throw NumericFailure("arrival inversion needs a positive finite cumulative intensity at t",
                             std::isfinite(total_) ? total_ : 0.0);
    }
    grid_cdf_.resize(kInversionGrid + 1);
    for (std::size_t k = 0; k <= kInversionGrid; ++k) {
        const double x = t * static_cast<double>(k) / kInversionGrid;
        grid_cdf_[k] = std::clamp(p->cumulative(x) / total_, 0.0, 1.0);
        if (k > 0 && grid_cdf_[k] < grid_cdf_[k - 1]) {
            throw NumericFailure("cumulative intensity is not monotone on [0, t]", grid_cdf_[k - 1] - grid_cdf_[k]);
        }
    }
    grid_cdf_.back() = 1.0;
}

double ArrivalSampler::quantile(double u) const {
    if (uniform_) {
        return u * t_;
    }
    const auto& p = std::get<ProcessSpec::NonHomogeneousPoisson>(process_->variant());
    // First grid cell whose right edge reaches u.
    const auto it = std::lower_bound(grid_cdf_.begin() + 1, grid_cdf_.end(), u);
    const std::size_t k = static_cast<std::size_t>(it - grid_cdf_.begin());
    const double h = t_ / kInversionGrid;
    double lo = h * static_cast<double>(k - 1);
    double hi = std::min(t_, h * static_cast<double>(k));
    for (int iter = 0; iter < 200 && hi - lo > 1e-15 * t_; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (p.cumulative(mid) / total_ < u) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<double> ArrivalSampler::sample(std::size_t n, Rng& rng) const {
    std::vector<double> times(n);
    for (auto& x : times) {
        x = quantile(rng.uniform());
    }
    std::sort(times.begin(), times.end());
    return times;
}

std::vector<double> sample_arrivals(const ProcessSpec& process, double t, std::size_t n, Rng& rng) {
    if (n == 0) {
        return {};
    }
    return ArrivalSampler(process, t).sample(n, rng);
}

PathSampler::PathSampler(const ProcessSpec& process, const DependenceModel& dependence, double t)
    : process_(&process), dependence_(&dependence), t_(t), arrivals_(process, t) {}

SamplePath PathSampler::operator()(Rng& rng) const {
    SamplePath path;
    path.horizon = t_;
    const std::size_t n = sample_count(*process_, t_, rng);
    path.arrivals = arrivals_.sample(n, rng);
    path.claims.resize(n);
    double previous = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = previous;
        const double v = path.arrivals[i] - x;
        path.claims[i] = dependence_->sample_claim(i + 1, x, v, rng);
        path.aggregate += path.claims[i];
        previous = path.arrivals[i];
    }
    return path;
}

SamplePath sample_path(const ProcessSpec& process, const DependenceModel& dependence, double t, Rng& rng) {
    return PathSampler(process, dependence, t)(rng);
}

SamplePath sample_path(const SimulationPlan& plan, std::size_t replicate) {
    plan.validate();
    Rng rng = Rng::substream(plan.master_seed, replicate);
    return sample_path(plan.process, plan.dependence, plan.horizon, rng);
}

std::size_t worker_threads(std::size_t requested) {
    std::size_t n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    if (const char* env = std::getenv("OSCLAIMS_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) {
                n = std::min(n, static_cast<std::size_t>(cap));
            }
        } catch (const std::exception&) {
        }
    }
    return std::max<std::size_t>(n, 1);
}

MomentEstimates estimate_moments(const SimulationPlan& plan) {
    plan.validate();
    const PathSampler sampler(plan.process, plan.dependence, plan.horizon);
    const std::size_t blocks = (plan.replicates + kSimulationBlock - 1) / kSimulationBlock;
    std::vector<BlockStats> stats(blocks);

    auto run_block = [&](std::size_t b) {
        const std::size_t first = b * kSimulationBlock;
        const std::size_t last = std::min(plan.replicates, first + kSimulationBlock);
        BlockStats s;
        for (std::size_t k = first; k < last; ++k) {
            Rng rng = Rng::substream(plan.master_seed, k);
            const double total = sampler(rng).aggregate;
            s.aggregate.add(total);
            s.square.add(total * total);
        }
        stats[b] = s;
    };

    const std::size_t workers = std::min(worker_threads(plan.threads), blocks);
    if (workers <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) {
            run_block(b);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t b = next++; b < blocks && !failed; b = next++) {
                    try {
                        run_block(b);
                    } catch (...) {
                        if (!failed.exchange(true)) {
                            failure = std::current_exception();
                        }
                    }
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    // Block order fixes the floating-point merge sequence.
    BlockStats total;
    for (const auto& s : stats) {
        total.aggregate.merge(s.aggregate);
        total.square.merge(s.square);
    }

    const std::size_t r = plan.replicates;
    const double rn = static_cast<double>(r);
    MomentEstimates out;
    if (r < 2) {
        out.mean = make_estimate(total.aggregate.mean, kNaN, r, plan.master_seed);
        out.second_moment = make_estimate(total.square.mean, kNaN, r, plan.master_seed);
        out.variance = make_estimate(kNaN, kNaN, r, plan.master_seed);
        return out;
    }
    const double var_s = total.aggregate.m2 / (rn - 1.0);
    const double var_s2 = total.square.m2 / (rn - 1.0);
    out.mean = make_estimate(total.aggregate.mean, std::sqrt(var_s / rn), r, plan.master_seed);
    out.second_moment = make_estimate(total.square.mean, std::sqrt(var_s2 / rn), r, plan.master_seed);
    // Large-sample standard error of the sample variance: sqrt((mu_4 - sigma^4) / R).
    const double mu4 = total.aggregate.m4 / rn;
    const double sigma2 = total.aggregate.m2 / rn;
    const double var_of_var = std::max(0.0, mu4 - sigma2 * sigma2) / rn;
    out.variance = make_estimate(var_s, std::sqrt(var_of_var), r, plan.master_seed);
    return out;
}

} // namespace osclaims
