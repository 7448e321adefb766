#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "osclaims/detail/overloaded.hpp"
#include "osclaims/errors.hpp"
#include "osclaims/gauss_legendre.hpp"
#include "osclaims/model.hpp"

namespace osclaims {

namespace {

using detail::Overloaded;

constexpr double kAtomSumTolerance = 1e-12;
constexpr double kTabulatedMassTolerance = 1e-6;

void require_rate(double rate, const char* what) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw InvalidArgument(std::string(what) + " must be a finite positive rate");
    }
}

double gamma_log_density(double x, double shape, double rate) {
    return (shape - 1.0) * std::log(x) - rate * x + shape * std::log(rate) - std::lgamma(shape);
}

// Integral of x^k * (linear density) over each cell; exact with 4 nodes.
double tabulated_moment(const StructureDistribution::Tabulated& tab, int k) {
    const auto& rule = gauss_legendre(4);
    double total = 0.0;
    for (std::size_t c = 0; c + 1 < tab.rates.size(); ++c) {
        const double a = tab.rates[c];
        const double b = tab.rates[c + 1];
        const double fa = tab.density[c];
        const double fb = tab.density[c + 1];
        total += rule.integrate(
            [&](double x) {
                const double w = (x - a) / (b - a);
                return std::pow(x, k) * ((1.0 - w) * fa + w * fb);
            },
            a, b);
    }
    return total;
}

} // namespace

StructureDistribution StructureDistribution::degenerate(double rate) {
    require_rate(rate, "degenerate structure rate");
    return StructureDistribution(Degenerate{rate});
}

StructureDistribution StructureDistribution::finite_atoms(std::vector<RateAtom> atoms) {
    if (atoms.empty()) {
        throw InvalidArgument("finite-atom structure needs at least one atom");
    }
    double total = 0.0;
    for (const auto& a : atoms) {
        require_rate(a.rate, "atom rate");
        if (!(a.probability >= 0.0) || a.probability > 1.0) {
            throw InvalidArgument("atom probability must lie in [0, 1]");
        }
        total += a.probability;
    }
    if (std::abs(total - 1.0) > kAtomSumTolerance) {
        std::ostringstream msg;
        msg << "atom probabilities sum to " << total << ", not 1";
        throw InvalidArgument(msg.str());
    }
    return StructureDistribution(FiniteAtoms{std::move(atoms)});
}

StructureDistribution StructureDistribution::gamma(double shape, double rate) {
    require_rate(shape, "gamma structure shape");
    require_rate(rate, "gamma structure rate");
    return StructureDistribution(Gamma{shape, rate});
}

StructureDistribution StructureDistribution::tabulated(std::vector<double> rates, std::vector<double> density) {
    if (rates.size() < 2 || rates.size() != density.size()) {
        throw InvalidArgument("tabulated structure needs matching grids of at least two points");
    }
    for (std::size_t k = 0; k < rates.size(); ++k) {
        require_rate(rates[k], "tabulated structure grid point");
        if (k > 0 && !(rates[k] > rates[k - 1])) {
            throw InvalidArgument("tabulated structure grid must be strictly increasing");
        }
        if (!(density[k] >= 0.0) || !std::isfinite(density[k])) {
            throw InvalidArgument("tabulated structure density must be finite and nonnegative");
        }
    }
    double mass = 0.0;
    for (std::size_t k = 0; k + 1 < rates.size(); ++k) {
        mass += 0.5 * (density[k] + density[k + 1]) * (rates[k + 1] - rates[k]);
    }
    if (std::abs(mass - 1.0) > kTabulatedMassTolerance) {
        std::ostringstream msg;
        msg << "tabulated structure density integrates to " << mass << ", not 1";
        throw InvalidArgument(msg.str());
    }
    for (auto& d : density) {
        d /= mass;
    }
    return StructureDistribution(Tabulated{std::move(rates), std::move(density)});
}

bool StructureDistribution::is_degenerate() const noexcept {
    if (std::holds_alternative<Degenerate>(variant_)) {
        return true;
    }
    if (const auto* atoms = std::get_if<FiniteAtoms>(&variant_)) {
        std::size_t with_mass = 0;
        double first = 0.0;
        bool distinct = false;
        for (const auto& a : atoms->atoms) {
            if (a.probability > 0.0) {
                if (with_mass == 0) {
                    first = a.rate;
                } else if (a.rate != first) {
                    distinct = true;
                }
                ++with_mass;
            }
        }
        return !distinct;
    }
    return false;
}

double StructureDistribution::mean() const {
    return std::visit(
        Overloaded{
            [](const Degenerate& d) { return d.rate; },
            [](const FiniteAtoms& f) {
                double m = 0.0;
                for (const auto& a : f.atoms) {
                    m += a.probability * a.rate;
                }
                return m;
            },
            [](const Gamma& g) { return g.shape / g.rate; },
            [](const Tabulated& t) { return tabulated_moment(t, 1); },
        },
        variant_);
}

double StructureDistribution::second_moment() const {
    return std::visit(
        Overloaded{
            [](const Degenerate& d) { return d.rate * d.rate; },
            [](const FiniteAtoms& f) {
                double m = 0.0;
                for (const auto& a : f.atoms) {
                    m += a.probability * a.rate * a.rate;
                }
                return m;
            },
            [](const Gamma& g) { return g.shape * (g.shape + 1.0) / (g.rate * g.rate); },
            [](const Tabulated& t) { return tabulated_moment(t, 2); },
        },
        variant_);
}

double StructureDistribution::variance() const {
    if (const auto* g = std::get_if<Gamma>(&variant_)) {
        return g->shape / (g->rate * g->rate);
    }
    if (std::holds_alternative<Degenerate>(variant_)) {
        return 0.0;
    }
    const double m = mean();
    return std::max(0.0, second_moment() - m * m);
}

double StructureDistribution::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) {
        throw InvalidArgument("structure quantile needs u in (0, 1)");
    }
    return std::visit(
        Overloaded{
            [](const Degenerate& d) { return d.rate; },
            [u](const FiniteAtoms& f) {
                double cumulative = 0.0;
                for (const auto& a : f.atoms) {
                    cumulative += a.probability;
                    if (u <= cumulative) {
                        return a.rate;
                    }
                }
                // Rounding left the last atoms' mass slightly short of 1.
                for (auto it = f.atoms.rbegin(); it != f.atoms.rend(); ++it) {
                    if (it->probability > 0.0) {
                        return it->rate;
                    }
                }
                return f.atoms.back().rate;
            },
            [u](const Gamma& g) { return boost::math::gamma_p_inv(g.shape, u) / g.rate; },
            [u](const Tabulated& t) {
                // Cell masses of the piecewise-linear density, then invert the
                // quadratic cdf inside the selected cell.
                double cumulative = 0.0;
                const std::size_t cells = t.rates.size() - 1;
                for (std::size_t c = 0; c < cells; ++c) {
                    const double h = t.rates[c + 1] - t.rates[c];
                    const double fa = t.density[c];
                    const double fb = t.density[c + 1];
                    const double mass = 0.5 * (fa + fb) * h;
                    if (u <= cumulative + mass || c + 1 == cells) {
                        const double target = std::clamp(u - cumulative, 0.0, mass);
                        // mass(s) = fa*s + (fb - fa) s^2 / (2h), s in [0, h]
                        const double a = 0.5 * (fb - fa) / h;
                        double s;
                        if (std::abs(a) < 1e-300 || std::abs(a * h) < 1e-12 * std::max(fa, fb)) {
                            s = fa > 0.0 ? target / fa : 0.0;
                        } else {
                            const double disc = std::max(0.0, fa * fa + 4.0 * a * target);
                            s = 2.0 * target / (fa + std::sqrt(disc));
                        }
                        return t.rates[c] + std::clamp(s, 0.0, h);
                    }
                    cumulative += mass;
                }
                return t.rates.back();
            },
        },
        variant_);
}

std::string StructureDistribution::describe() const {
    std::ostringstream out;
    std::visit(Overloaded{
                   [&](const Degenerate& d) { out << "degenerate(" << d.rate << ")"; },
                   [&](const FiniteAtoms& f) {
                       out << "atoms(";
                       for (std::size_t k = 0; k < f.atoms.size(); ++k) {
                           out << (k ? ", " : "") << f.atoms[k].rate << ":" << f.atoms[k].probability;
                       }
                       out << ")";
                   },
                   [&](const Gamma& g) { out << "gamma(shape=" << g.shape << ", rate=" << g.rate << ")"; },
                   [&](const Tabulated& t) { out << "tabulated(" << t.rates.size() << " points)"; },
               },
               variant_);
    return out.str();
}

IntegrationResult structure_integrate(const StructureDistribution& structure,
                                      const std::function<double(double)>& g, double tolerance) {
    auto checked = [&](double lambda) {
        const double value = g(lambda);
        if (!std::isfinite(value)) {
            std::ostringstream msg;
            msg << "integrand is not finite at rate " << lambda << " where the structure law has mass";
            throw InfiniteMoment(msg.str());
        }
        return value;
    };

    return std::visit(
        Overloaded{
            [&](const StructureDistribution::Degenerate& d) {
                return IntegrationResult{checked(d.rate), 0.0};
            },
            [&](const StructureDistribution::FiniteAtoms& f) {
                double sum = 0.0;
                for (const auto& a : f.atoms) {
                    if (a.probability > 0.0) {
                        sum += a.probability * checked(a.rate);
                    }
                }
                return IntegrationResult{sum, 0.0};
            },
            [&](const StructureDistribution::Gamma& gam) {
                auto integrand = [&](double lambda) {
                    if (!(lambda > 0.0)) {
                        return 0.0;
                    }
                    const double log_pdf = gamma_log_density(lambda, gam.shape, gam.rate);
                    if (log_pdf < -745.0) {
                        return 0.0;
                    }
                    return checked(lambda) * std::exp(log_pdf);
                };
                // Split at the mean: tanh-sinh copes with the x^(shape-1)
                // endpoint behaviour, exp-sinh with the infinite tail.
                thread_local boost::math::quadrature::tanh_sinh<double> head;
                thread_local boost::math::quadrature::exp_sinh<double> tail;
                const double split = gam.shape / gam.rate;
                double err_head = 0.0;
                double l1_head = 0.0;
                double err_tail = 0.0;
                double l1_tail = 0.0;
                const double value_head = head.integrate(integrand, 0.0, split, tolerance, &err_head, &l1_head);
                const double value_tail = tail.integrate(integrand, split, std::numeric_limits<double>::infinity(),
                                                         tolerance, &err_tail, &l1_tail);
                const double value = value_head + value_tail;
                const double error = err_head + err_tail;
                const double scale = std::max(l1_head + l1_tail, std::numeric_limits<double>::min());
                if (!std::isfinite(value) || error > std::max(tolerance, 1e-12) * scale * 10.0) {
                    throw NumericFailure("structure quadrature did not converge", error);
                }
                return IntegrationResult{value, error};
            },
            [&](const StructureDistribution::Tabulated& tab) {
                const auto& fine = gauss_legendre(32);
                const auto& coarse = gauss_legendre(16);
                double value = 0.0;
                double error = 0.0;
                double l1 = 0.0;
                for (std::size_t c = 0; c + 1 < tab.rates.size(); ++c) {
                    const double a = tab.rates[c];
                    const double b = tab.rates[c + 1];
                    const double fa = tab.density[c];
                    const double fb = tab.density[c + 1];
                    if (fa == 0.0 && fb == 0.0) {
                        continue;
                    }
                    auto f = [&](double x) {
                        const double w = (x - a) / (b - a);
                        return checked(x) * ((1.0 - w) * fa + w * fb);
                    };
                    const double hi = fine.integrate(f, a, b);
                    const double lo = coarse.integrate(f, a, b);
                    value += hi;
                    error += std::abs(hi - lo);
                    l1 += std::abs(hi);
                }
                // |hi - lo| estimates the error of the coarse rule, so it bounds
                // the fine rule's error with margin.
                if (error > std::max(tolerance, kTabulatedMassTolerance) * std::max(l1, std::numeric_limits<double>::min())) {
                    throw NumericFailure("tabulated structure quadrature did not converge", error);
                }
                return IntegrationResult{value, error};
            },
        },
        structure.variant());
}

} // namespace osclaims
