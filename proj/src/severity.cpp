#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "osclaims/detail/overloaded.hpp"
#include "osclaims/errors.hpp"
#include "osclaims/model.hpp"

namespace osclaims {

using detail::Overloaded;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw InvalidArgument(std::string(what) + " must be finite and positive");
    }
}

void require_unit(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw InvalidArgument("quantile level must lie in (0, 1)");
    }
}

} // namespace

SeverityLaw SeverityLaw::exponential(double mean) {
    require_positive(mean, "exponential mean");
    return SeverityLaw(Exponential{mean});
}

SeverityLaw SeverityLaw::gamma(double shape, double scale) {
    require_positive(shape, "gamma shape");
    require_positive(scale, "gamma scale");
    return SeverityLaw(Gamma{shape, scale});
}

SeverityLaw SeverityLaw::lognormal(double mu, double sigma) {
    if (!std::isfinite(mu)) {
        throw InvalidArgument("lognormal mu must be finite");
    }
    require_positive(sigma, "lognormal sigma");
    return SeverityLaw(Lognormal{mu, sigma});
}

SeverityLaw SeverityLaw::pareto(double shape, double scale) {
    require_positive(shape, "pareto shape");
    require_positive(scale, "pareto scale");
    return SeverityLaw(Pareto{shape, scale});
}

SeverityLaw SeverityLaw::point_mass(double value) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw InvalidArgument("point-mass severity must be finite and nonnegative");
    }
    return SeverityLaw(PointMass{value});
}

double SeverityLaw::raw_moment(int k) const {
    if (k < 0) {
        throw InvalidArgument("moment order must be nonnegative");
    }
    if (k == 0) {
        return 1.0;
    }
    const double kd = k;
    return std::visit(
        Overloaded{
            [&](const Exponential& e) { return std::tgamma(kd + 1.0) * std::pow(e.mean, kd); },
            [&](const Gamma& g) {
                return std::exp(std::lgamma(g.shape + kd) - std::lgamma(g.shape)) * std::pow(g.scale, kd);
            },
            [&](const Lognormal& l) { return std::exp(kd * l.mu + 0.5 * kd * kd * l.sigma * l.sigma); },
            [&](const Pareto& p) {
                if (p.shape <= kd) {
                    return kInf;
                }
                // E[Y^k] = scale^k k! / prod_{j=1..k} (shape - j)
                double m = std::pow(p.scale, kd);
                for (int j = 1; j <= k; ++j) {
                    m *= j / (p.shape - j);
                }
                return m;
            },
            [&](const PointMass& p) { return std::pow(p.value, kd); },
        },
        variant_);
}

bool SeverityLaw::has_moment(int k) const { return std::isfinite(raw_moment(k)); }

double SeverityLaw::require_moment(int k) const {
    const double m = raw_moment(k);
    if (!std::isfinite(m)) {
        std::ostringstream msg;
        msg << "severity " << describe() << " has no finite moment of order " << k;
        throw InfiniteMoment(msg.str());
    }
    return m;
}

double SeverityLaw::cdf(double y) const {
    if (y < 0.0) {
        return 0.0;
    }
    return std::visit(Overloaded{
                          [&](const Exponential& e) { return -std::expm1(-y / e.mean); },
                          [&](const Gamma& g) { return boost::math::gamma_p(g.shape, y / g.scale); },
                          [&](const Lognormal& l) {
                              if (y == 0.0) {
                                  return 0.0;
                              }
                              return 0.5 * std::erfc(-(std::log(y) - l.mu) / (l.sigma * std::numbers::sqrt2));
                          },
                          [&](const Pareto& p) { return 1.0 - std::pow(p.scale / (p.scale + y), p.shape); },
                          [&](const PointMass& p) { return y >= p.value ? 1.0 : 0.0; },
                      },
                      variant_);
}

double SeverityLaw::quantile(double u) const {
    require_unit(u);
    return std::visit(Overloaded{
                          [&](const Exponential& e) { return -e.mean * std::log1p(-u); },
                          [&](const Gamma& g) { return g.scale * boost::math::gamma_p_inv(g.shape, u); },
                          [&](const Lognormal& l) {
                              const double z = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
                              return std::exp(l.mu + l.sigma * z);
                          },
                          [&](const Pareto& p) { return p.scale * std::expm1(-std::log1p(-u) / p.shape); },
                          [&](const PointMass& p) { return p.value; },
                      },
                      variant_);
}

std::string SeverityLaw::describe() const {
    std::ostringstream out;
    std::visit(Overloaded{
                   [&](const Exponential& e) { out << "exponential(mean=" << e.mean << ")"; },
                   [&](const Gamma& g) { out << "gamma(shape=" << g.shape << ", scale=" << g.scale << ")"; },
                   [&](const Lognormal& l) { out << "lognormal(mu=" << l.mu << ", sigma=" << l.sigma << ")"; },
                   [&](const Pareto& p) { out << "pareto(shape=" << p.shape << ", scale=" << p.scale << ")"; },
                   [&](const PointMass& p) { out << "point_mass(" << p.value << ")"; },
               },
               variant_);
    return out.str();
}

} // namespace osclaims
