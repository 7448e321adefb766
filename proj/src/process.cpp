#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "osclaims/detail/overloaded.hpp"
#include "osclaims/errors.hpp"
#include "osclaims/gauss_legendre.hpp"
#include "osclaims/model.hpp"

namespace osclaims {

using detail::Overloaded;

namespace {

double log_poisson(double mu, std::size_t n) {
    if (mu == 0.0) {
        return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    const double nd = static_cast<double>(n);
    return nd * std::log(mu) - mu - std::lgamma(nd + 1.0);
}

double log_negative_binomial(double shape, double rate, double t, std::size_t n) {
    const double nd = static_cast<double>(n);
    return std::lgamma(nd + shape) - std::lgamma(shape) - std::lgamma(nd + 1.0) +
           shape * std::log(rate / (rate + t)) + nd * std::log(t / (rate + t));
}

void require_horizon(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw InvalidArgument("time horizon must be finite and nonnegative");
    }
}

// Mixture of Poisson pmfs against a tabulated density: 32-node rule per cell,
// error estimated against the 16-node rule.
std::vector<double> tabulated_count_pmfs(const StructureDistribution::Tabulated& tab, double t,
                                         std::size_t n_max) {
    const auto& fine = gauss_legendre(32);
    const auto& coarse = gauss_legendre(16);
    std::vector<double> hi(n_max + 1, 0.0);
    std::vector<double> lo(n_max + 1, 0.0);
    auto accumulate = [&](const GaussLegendre& rule, std::vector<double>& out, double a, double b, double fa,
                          double fb) {
        for (std::size_t k = 0; k < rule.size(); ++k) {
            const double lambda = a + (b - a) * rule.node(k);
            const double w = (lambda - a) / (b - a);
            const double weight = rule.weight(k) * (b - a) * ((1.0 - w) * fa + w * fb);
            if (weight == 0.0) {
                continue;
            }
            const auto p = poisson_pmfs(lambda * t, n_max);
            for (std::size_t n = 0; n <= n_max; ++n) {
                out[n] += weight * p[n];
            }
        }
    };
    for (std::size_t c = 0; c + 1 < tab.rates.size(); ++c) {
        accumulate(fine, hi, tab.rates[c], tab.rates[c + 1], tab.density[c], tab.density[c + 1]);
        accumulate(coarse, lo, tab.rates[c], tab.rates[c + 1], tab.density[c], tab.density[c + 1]);
    }
    double residual = 0.0;
    for (std::size_t n = 0; n <= n_max; ++n) {
        residual = std::max(residual, std::abs(hi[n] - lo[n]));
    }
    if (residual > 1e-8) {
        throw NumericFailure("rate quadrature for the tabulated structure did not converge", residual);
    }
    return hi;
}

} // namespace

// ---------------------------------------------------------------------------

CumulativeIntensity::CumulativeIntensity(std::function<double(double)> cumulative,
                                         std::function<double(double)> intensity, std::string label)
    : cumulative_(std::move(cumulative)), intensity_(std::move(intensity)), label_(std::move(label)) {
    if (!cumulative_) {
        throw InvalidArgument("cumulative intensity function is empty");
    }
    if (std::abs(cumulative_(0.0)) > 1e-14) {
        throw InvalidArgument("cumulative intensity must vanish at 0");
    }
}

CumulativeIntensity CumulativeIntensity::power_law(double scale, double exponent) {
    if (!(scale > 0.0) || !(exponent > 0.0) || !std::isfinite(scale) || !std::isfinite(exponent)) {
        throw InvalidArgument("power-law intensity needs positive scale and exponent");
    }
    std::ostringstream label;
    label << "power(scale=" << scale << ", exponent=" << exponent << ")";
    CumulativeIntensity law([=](double x) { return x <= 0.0 ? 0.0 : scale * std::pow(x, exponent); },
                               [=](double x) {
                                   if (x <= 0.0) {
                                       return exponent < 1.0   ? std::numeric_limits<double>::infinity()
                                              : exponent == 1.0 ? scale
                                                                : 0.0;
                                   }
                                   return scale * exponent * std::pow(x, exponent - 1.0);
                               },
                               label.str());
    // x^a becomes w^{ka}: a polynomial for half-integer a, at least w^3 otherwise.
    if (exponent != std::floor(exponent)) {
        law.grading_ = std::clamp(std::ceil(3.0 / exponent), 2.0, 4.0);
    }
    return law;
}

CumulativeIntensity CumulativeIntensity::linear(double intercept, double slope) {
    if (!(intercept >= 0.0) || !(slope >= 0.0) || !(intercept + slope > 0.0) || !std::isfinite(intercept) ||
        !std::isfinite(slope)) {
        throw InvalidArgument("linear intensity needs nonnegative intercept and slope, not both zero");
    }
    std::ostringstream label;
    label << "linear(intercept=" << intercept << ", slope=" << slope << ")";
    return CumulativeIntensity([=](double x) { return x <= 0.0 ? 0.0 : intercept * x + 0.5 * slope * x * x; },
                               [=](double x) { return intercept + slope * std::max(x, 0.0); }, label.str());
}

CumulativeIntensity CumulativeIntensity::seasonal(double base, double amplitude, double period, double phase) {
    if (!(base > 0.0) || !(amplitude >= 0.0) || amplitude > base || !(period > 0.0) || !std::isfinite(phase)) {
        throw InvalidArgument("seasonal intensity needs base > 0, 0 <= amplitude <= base, period > 0");
    }
    const double omega = 2.0 * std::numbers::pi / period;
    std::ostringstream label;
    label << "seasonal(base=" << base << ", amplitude=" << amplitude << ", period=" << period
          << ", phase=" << phase << ")";
    return CumulativeIntensity(
        [=](double x) {
            if (x <= 0.0) {
                return 0.0;
            }
            return base * x + amplitude / omega * (std::cos(-omega * phase) - std::cos(omega * (x - phase)));
        },
        [=](double x) { return base + amplitude * std::sin(omega * (x - phase)); }, label.str());
}

double CumulativeIntensity::intensity(double x) const {
    if (intensity_) {
        return intensity_(x);
    }
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    if (x < h) {
        return (cumulative_(x + h) - cumulative_(x)) / h;
    }
    return (cumulative_(x + h) - cumulative_(x - h)) / (2.0 * h);
}

// ---------------------------------------------------------------------------

ProcessSpec ProcessSpec::mixed_poisson(StructureDistribution structure) {
    return ProcessSpec(MixedPoisson{std::move(structure)});
}

ProcessSpec ProcessSpec::non_homogeneous(CumulativeIntensity cumulative) {
    return ProcessSpec(NonHomogeneousPoisson{std::move(cumulative)});
}

ProcessSpec ProcessSpec::homogeneous(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw InvalidArgument("homogeneous Poisson rate must be finite and positive");
    }
    return ProcessSpec(HomogeneousPoisson{rate});
}

bool ProcessSpec::has_uniform_arrivals() const noexcept {
    return !std::holds_alternative<NonHomogeneousPoisson>(variant_);
}

StructureDistribution ProcessSpec::structure() const {
    return std::visit(Overloaded{
                          [](const MixedPoisson& m) { return m.structure; },
                          [](const HomogeneousPoisson& h) { return StructureDistribution::degenerate(h.rate); },
                          [](const NonHomogeneousPoisson&) -> StructureDistribution {
                              throw InvalidArgument("a non-homogeneous Poisson process has no structure law");
                          },
                      },
                      variant_);
}

double ProcessSpec::mean_count(double t) const {
    require_horizon(t);
    return std::visit(Overloaded{
                          [t](const MixedPoisson& m) { return m.structure.mean() * t; },
                          [t](const HomogeneousPoisson& h) { return h.rate * t; },
                          [t](const NonHomogeneousPoisson& n) { return n.cumulative(t); },
                      },
                      variant_);
}

double ProcessSpec::factorial_second_moment(double t) const {
    require_horizon(t);
    return std::visit(Overloaded{
                          [t](const MixedPoisson& m) { return m.structure.second_moment() * t * t; },
                          [t](const HomogeneousPoisson& h) { return h.rate * h.rate * t * t; },
                          [t](const NonHomogeneousPoisson& n) {
                              const double mu = n.cumulative(t);
                              return mu * mu;
                          },
                      },
                      variant_);
}

std::string ProcessSpec::describe() const {
    return std::visit(Overloaded{
                          [](const MixedPoisson& m) { return "mixed_poisson[" + m.structure.describe() + "]"; },
                          [](const HomogeneousPoisson& h) {
                              std::ostringstream out;
                              out << "homogeneous_poisson(" << h.rate << ")";
                              return out.str();
                          },
                          [](const NonHomogeneousPoisson& n) { return "nhpp[" + n.cumulative.label() + "]"; },
                      },
                      variant_);
}

// ---------------------------------------------------------------------------

std::vector<double> poisson_pmfs(double mu, std::size_t n_max) {
    std::vector<double> out(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) {
        out[n] = std::exp(log_poisson(mu, n));
    }
    return out;
}

double count_pmf(const ProcessSpec& process, double t, std::size_t n) {
    require_horizon(t);
    if (t == 0.0) {
        return n == 0 ? 1.0 : 0.0;
    }
    return std::visit(
        Overloaded{
            [&](const ProcessSpec::HomogeneousPoisson& h) { return std::exp(log_poisson(h.rate * t, n)); },
            [&](const ProcessSpec::NonHomogeneousPoisson& p) { return std::exp(log_poisson(p.cumulative(t), n)); },
            [&](const ProcessSpec::MixedPoisson& m) {
                return std::visit(
                    Overloaded{
                        [&](const StructureDistribution::Degenerate& d) {
                            return std::exp(log_poisson(d.rate * t, n));
                        },
                        [&](const StructureDistribution::FiniteAtoms& f) {
                            double sum = 0.0;
                            for (const auto& a : f.atoms) {
                                if (a.probability > 0.0) {
                                    sum += a.probability * std::exp(log_poisson(a.rate * t, n));
                                }
                            }
                            return sum;
                        },
                        [&](const StructureDistribution::Gamma& g) {
                            return std::exp(log_negative_binomial(g.shape, g.rate, t, n));
                        },
                        [&](const StructureDistribution::Tabulated& tab) {
                            return tabulated_count_pmfs(tab, t, n)[n];
                        },
                    },
                    m.structure.variant());
            },
        },
        process.variant());
}

std::vector<double> count_pmfs(const ProcessSpec& process, double t, std::size_t n_max) {
    require_horizon(t);
    if (const auto* m = std::get_if<ProcessSpec::MixedPoisson>(&process.variant()); m && t > 0.0) {
        if (const auto* tab = std::get_if<StructureDistribution::Tabulated>(&m->structure.variant())) {
            return tabulated_count_pmfs(*tab, t, n_max);
        }
    }
    std::vector<double> out(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) {
        out[n] = count_pmf(process, t, n);
    }
    return out;
}

CountTruncation truncate_counts(const ProcessSpec& process, double t, double epsilon, std::size_t n_cap) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw InvalidArgument("tail epsilon must lie in (0, 1)");
    }
    const double mean = process.mean_count(t);
    const double spread = std::sqrt(std::max(0.0, process.factorial_second_moment(t) + mean - mean * mean));
    std::size_t guess = std::max<std::size_t>(
        kMinTruncation, static_cast<std::size_t>(std::ceil(mean + 8.0 * spread + 10.0)));
    guess = std::min(guess, std::max(n_cap, kMinTruncation));
    for (;;) {
        const auto pmf = count_pmfs(process, t, guess);
        double cumulative = 0.0;
        for (std::size_t n = 0; n <= guess; ++n) {
            cumulative += pmf[n];
            if (n >= kMinTruncation && cumulative >= 1.0 - epsilon) {
                CountTruncation out;
                out.pmf.assign(pmf.begin(), pmf.begin() + static_cast<std::ptrdiff_t>(n + 1));
                out.n_max = n;
                // Rounding slack keeps the bound conservative.
                out.tail_mass = std::max(0.0, 1.0 - cumulative) + static_cast<double>(n + 1) * 0x1.0p-52;
                return out;
            }
        }
        if (guess >= n_cap) {
            CountTruncation out;
            out.pmf = pmf;
            out.n_max = guess;
            out.tail_mass = std::max(0.0, 1.0 - cumulative) + static_cast<double>(guess + 1) * 0x1.0p-52;
            out.capped = true;
            return out;
        }
        guess = std::min(2 * guess, n_cap);
    }
}

double os_cdf(const ProcessSpec& process, double t, double x) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw InvalidArgument("conditional arrival cdf needs t > 0");
    }
    if (!(x >= 0.0 && x <= t)) {
        throw InvalidArgument("conditional arrival cdf needs 0 <= x <= t");
    }
    if (const auto* p = std::get_if<ProcessSpec::NonHomogeneousPoisson>(&process.variant())) {
        const double total = p->cumulative(t);
        if (!(total > 0.0)) {
            throw DegenerateProcess("cumulative intensity vanishes on [0, t]");
        }
        return std::clamp(p->cumulative(x) / total, 0.0, 1.0);
    }
    return x / t;
}

double os_density(const ProcessSpec& process, double t, double x) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw InvalidArgument("conditional arrival density needs t > 0");
    }
    if (!(x >= 0.0 && x <= t)) {
        throw InvalidArgument("conditional arrival density needs 0 <= x <= t");
    }
    if (const auto* p = std::get_if<ProcessSpec::NonHomogeneousPoisson>(&process.variant())) {
        const double total = p->cumulative(t);
        if (!(total > 0.0)) {
            throw DegenerateProcess("cumulative intensity vanishes on [0, t]");
        }
        return p->cumulative.intensity(x) / total;
    }
    return 1.0 / t;
}

} // namespace osclaims
