#include "osclaims/moments_closed.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "osclaims/errors.hpp"
#include "osclaims/gauss_legendre.hpp"
#include "osclaims/special_forms.hpp"

namespace osclaims {

namespace {

struct Moments {
    double beta;
    double large1 = 0.0;
    double small1 = 0.0;
    double large2 = 0.0;
    double small2 = 0.0;
};

// Severity moments of the closed-form view. The large-claim law is never
// touched when beta = 0, so it may lack moments there.
Moments moments_of(const DependenceModel& dep, int order) {
    const auto view = closed_form_view(dep);
    Moments m{view.beta};
    m.small1 = view.small.require_moment(1);
    if (order >= 2) {
        m.small2 = view.small.require_moment(2);
    }
    if (view.beta > 0.0) {
        m.large1 = view.large.require_moment(1);
        if (order >= 2) {
            m.large2 = view.large.require_moment(2);
        }
    }
    return m;
}

void require_horizon(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw InvalidArgument("time horizon must be finite and nonnegative");
    }
}

double integrate(const StructureDistribution& structure, const std::function<double(double)>& g) {
    return structure_integrate(structure, g).value;
}

} // namespace

double mean_closed(double t, const StructureDistribution& structure, const DependenceModel& dep) {
    require_horizon(t);
    const Moments m = moments_of(dep, 1);
    if (t == 0.0) {
        return 0.0;
    }
    double total = m.small1 * integrate(structure, [&](double l) { return expected_small_claims(t, l, m.beta); });
    if (m.beta > 0.0) {
        total += m.large1 * integrate(structure, [&](double l) { return expected_large_claims(t, l, m.beta); });
    }
    return total;
}

double mean_closed(double t, const ProcessSpec& process, const DependenceModel& dep) {
    return mean_closed(t, process.structure(), dep);
}

double mean_closed_homogeneous(double t, double lambda, const DependenceModel& dep) {
    require_horizon(t);
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("homogeneous rate must be finite and positive");
    }
    if (dep.has_closed_form()) {
        return mean_closed(t, StructureDistribution::degenerate(lambda), dep);
    }
    if (!dep.is_v_only() || !dep.is_index_invariant()) {
        throw InvalidArgument("homogeneous mean needs claims that depend on the waiting time only, "
                              "identically across claim indices");
    }
    if (t == 0.0) {
        return 0.0;
    }
    auto kernel = [&](double v) { return lambda * std::exp(-lambda * v) * (lambda * (t - v) + 1.0) * delta(dep, 1, v); };
    double error = 0.0;
    const double value =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(kernel, 0.0, t, 20, 1e-13, &error);
    if (error > 1e-9 * std::abs(value) + 1e-300) {
        throw NumericFailure("homogeneous mean quadrature did not converge", error);
    }
    return value;
}

double mean_by_parts(double t, double lambda, const DependenceModel& dep) {
    require_horizon(t);
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("homogeneous rate must be finite and positive");
    }
    const Moments m = moments_of(dep, 1);
    if (t == 0.0) {
        return 0.0;
    }
    const double jump = m.large1 - m.small1;
    // dDelta/dv = beta e^{-beta v} (E[Y_l] - E[Y_s])
    auto integrand = [&](double v) {
        return std::exp(-(lambda + m.beta) * v) * (1.0 - v / t) * m.beta * jump;
    };
    const auto& rule = gauss_legendre(64);
    const double knee = std::min(t, 36.0 / (lambda + m.beta));
    double correction = rule.integrate(integrand, 0.0, knee);
    if (knee < t) {
        correction += rule.integrate(integrand, knee, t);
    }
    return lambda * t * (m.small1 + correction);
}

SecondMomentTerms second_moment_terms(double t, const StructureDistribution& structure,
                                      const DependenceModel& dep) {
    require_horizon(t);
    const Moments m = moments_of(dep, 2);
    SecondMomentTerms terms;
    if (t == 0.0) {
        return terms;
    }
    const double b = m.beta;
    terms.small_square = m.small2 * integrate(structure, [&](double l) { return expected_small_claims(t, l, b); });
    terms.small_pair =
        m.small1 * m.small1 * integrate(structure, [&](double l) { return discounted_pair_sum(t, l, b, b); });
    if (b > 0.0) {
        terms.large_square =
            m.large2 * integrate(structure, [&](double l) { return expected_large_claims(t, l, b); });
        terms.large_pair =
            m.large1 * m.large1 * integrate(structure, [&](double l) { return pair_sum_large_large(t, l, b); });
        terms.cross_pair = 2.0 * m.large1 * m.small1 *
                           integrate(structure, [&](double l) { return pair_sum_large_small(t, l, b); });
    }
    return terms;
}

double second_moment_closed(double t, const StructureDistribution& structure, const DependenceModel& dep) {
    return second_moment_terms(t, structure, dep).total();
}

double second_moment_closed(double t, const ProcessSpec& process, const DependenceModel& dep) {
    return second_moment_closed(t, process.structure(), dep);
}

MomentReport variance_closed(double t, const StructureDistribution& structure, const DependenceModel& dep) {
    MomentReport report;
    report.t = t;
    report.method = "closed";
    report.mean = mean_closed(t, structure, dep);
    report.terms = second_moment_terms(t, structure, dep);
    report.second_moment = report.terms.total();
    report.variance = report.second_moment - report.mean * report.mean;
    return report;
}

MomentReport variance_closed(double t, const ProcessSpec& process, const DependenceModel& dep) {
    return variance_closed(t, process.structure(), dep);
}

double mean_rate_limit(const StructureDistribution& structure, const DependenceModel& dep) {
    const Moments m = moments_of(dep, 1);
    const double b = m.beta;
    return integrate(structure, [&](double l) { return (m.large1 * b * l + m.small1 * l * l) / (b + l); });
}

double mean_offset_limit(const StructureDistribution& structure, const DependenceModel& dep) {
    const Moments m = moments_of(dep, 1);
    const double b = m.beta;
    if (b == 0.0) {
        return 0.0;
    }
    return (m.small1 - m.large1) * integrate(structure, [&](double l) { return l * b / ((b + l) * (b + l)); });
}

SecondRateLimits second_rate_limits(const StructureDistribution& structure, const DependenceModel& dep) {
    const Moments m = moments_of(dep, 2);
    const double b = m.beta;
    SecondRateLimits out{};
    out.quadratic = integrate(structure, [&](double l) {
        const double w = (m.large1 * b + m.small1 * l) / (b + l);
        return w * w * l * l;
    });
    out.linear = integrate(structure, [&](double l) {
        const double c = b + l;
        const double c3 = c * c * c;
        return m.large2 * b * l / c + m.small2 * l * l / c - m.large1 * m.large1 * 4.0 * b * b * l * l / c3 +
               m.large1 * m.small1 * 4.0 * b * l * l * (b - l) / c3 + m.small1 * m.small1 * 4.0 * b * l * l * l / c3;
    });
    return out;
}

double variance_quadratic_limit(const StructureDistribution& structure, const DependenceModel& dep) {
    const double a = mean_rate_limit(structure, dep);
    return second_rate_limits(structure, dep).quadratic - a * a;
}

double variance_linear_limit(const StructureDistribution& structure, const DependenceModel& dep) {
    if (!structure.is_degenerate()) {
        throw InvalidArgument("the linear variance rate needs a degenerate structure law");
    }
    const double a = mean_rate_limit(structure, dep);
    const double b = mean_offset_limit(structure, dep);
    return second_rate_limits(structure, dep).linear - 2.0 * a * b;
}

double variance_linear_limit_mean_squared(const StructureDistribution& structure, const SeverityLaw& severity) {
    if (!structure.is_degenerate()) {
        throw InvalidArgument("the linear variance rate needs a degenerate structure law");
    }
    const double m = severity.require_moment(1);
    return m * m * structure.mean();
}

} // namespace osclaims
