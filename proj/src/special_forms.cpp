#include "osclaims/special_forms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "osclaims/errors.hpp"
#include "osclaims/gauss_legendre.hpp"

namespace osclaims {

namespace {

// Below this argument the exponential remainders are summed as power series.
constexpr double kSeriesCutoff = 2.0;
// Exponential decay lengths after which a quadrature panel is split.
constexpr double kPanelDecay = 36.0;

void require_args(double t, double lambda, double shift_a, double shift_b) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw InvalidArgument("time horizon must be finite and nonnegative");
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("rate lambda must be finite and positive");
    }
    if (!(shift_a >= 0.0) || !std::isfinite(shift_a) || !(shift_b >= 0.0) || !std::isfinite(shift_b)) {
        throw InvalidArgument("exponent shifts must be finite and nonnegative");
    }
}

// sum_{k >= k0} coef(k) u^k / k!
template <class Coef>
double exp_series(double u, int k0, Coef coef) {
    double power = 1.0;
    for (int k = 1; k <= k0; ++k) {
        power *= u / k;
    }
    double sum = 0.0;
    for (int k = k0; k < k0 + 60; ++k) {
        const double term = coef(k) * power;
        sum += term;
        if (std::abs(term) <= 1e-18 * std::abs(sum)) {
            break;
        }
        power *= u / (k + 1);
    }
    return sum;
}

double sign(int k) { return (k % 2 == 0) ? 1.0 : -1.0; }

// e^{-u} - 1 + u
double phi2(double u) {
    if (u < kSeriesCutoff) {
        return exp_series(u, 2, [](int k) { return sign(k); });
    }
    return std::exp(-u) - 1.0 + u;
}

// e^{-u} - 1 + u - u^2 / 2
double phi3(double u) {
    if (u < kSeriesCutoff) {
        return exp_series(u, 3, [](int k) { return sign(k); });
    }
    return std::exp(-u) - 1.0 + u - 0.5 * u * u;
}

// 1 - (1 + u) e^{-u}
double psi(double u) {
    if (u < kSeriesCutoff) {
        return exp_series(u, 2, [](int k) { return sign(k) * (k - 1); });
    }
    return 1.0 - (1.0 + u) * std::exp(-u);
}

// (2 + u) e^{-u} - 2 + u
double chi(double u) {
    if (u < kSeriesCutoff) {
        return exp_series(u, 3, [](int k) { return sign(k) * (2 - k); });
    }
    return (2.0 + u) * std::exp(-u) - 2.0 + u;
}

// u^2 - 4u + 6 - 2 (3 + u) e^{-u}
double quartic_remainder(double u) {
    if (u < kSeriesCutoff) {
        return exp_series(u, 4, [](int k) { return 2.0 * sign(k) * (k - 3); });
    }
    return u * u - 4.0 * u + 6.0 - 2.0 * (3.0 + u) * std::exp(-u);
}

// Pair sum with both shifts equal to beta > 0.
double pair_sum_equal(double t, double lambda, double beta) {
    const double c = beta + lambda;
    const double u = c * t;
    const double c2 = c * c;
    return 2.0 * beta * lambda * lambda / (c2 * c2) * (beta * psi(u) + 2.0 * lambda * phi2(u)) +
           t * t * lambda * lambda * lambda * lambda / c2;
}

// Pair sum with shifts (0, beta), beta > 0.
double pair_sum_one_sided(double t, double lambda, double beta) {
    const double c = beta + lambda;
    const double u = c * t;
    return 2.0 * beta * lambda * lambda / (c * c * c) * phi2(u) + t * t * lambda * lambda * lambda / c;
}

// Integral of f over [0, length] against a factor decaying at `rate`; the
// range is split where the decay has run its course.
template <class F>
double decaying_integral(const GaussLegendre& rule, F&& f, double length, double rate) {
    const double knee = std::min(length, kPanelDecay / rate);
    double sum = rule.integrate(f, 0.0, knee);
    if (knee < length) {
        sum += rule.integrate(f, knee, length);
    }
    return sum;
}

double pair_sum_nested(double t, double lambda, double theta, double delta, const GaussLegendre& rule) {
    const double a = lambda + theta;
    const double b = lambda + delta;
    auto inner = [&](double s) {
        return decaying_integral(
            rule,
            [&](double v) {
                const double q = lambda * (s - v) + 2.0;
                return std::exp(-b * v) * (q * q - 2.0);
            },
            s, b);
    };
    const double outer =
        decaying_integral(rule, [&](double y) { return std::exp(-a * y) * inner(t - y); }, t, a);
    return lambda * lambda * outer;
}

} // namespace

double expected_small_claims(double t, double lambda, double beta) {
    require_args(t, lambda, beta, 0.0);
    if (beta == 0.0) {
        return lambda * t;
    }
    const double c = beta + lambda;
    return lambda * lambda * t / c - lambda * beta * std::expm1(-c * t) / (c * c);
}

double expected_large_claims(double t, double lambda, double beta) {
    require_args(t, lambda, beta, 0.0);
    if (beta == 0.0) {
        return 0.0;
    }
    const double c = beta + lambda;
    return lambda * beta / (c * c) * phi2(c * t);
}

double discounted_pair_sum(double t, double lambda, double theta, double delta, std::size_t nodes) {
    require_args(t, lambda, theta, delta);
    if (theta > delta) {
        std::swap(theta, delta);
    }
    if (theta == delta) {
        return theta == 0.0 ? t * t * lambda * lambda : pair_sum_equal(t, lambda, theta);
    }
    if (theta == 0.0) {
        return pair_sum_one_sided(t, lambda, delta);
    }
    return discounted_pair_sum_quadrature(t, lambda, theta, delta, nodes);
}

double discounted_pair_sum_quadrature(double t, double lambda, double theta, double delta, std::size_t nodes) {
    require_args(t, lambda, theta, delta);
    if (nodes < 8) {
        throw InvalidArgument("pair-sum quadrature needs at least 8 nodes per axis");
    }
    if (theta > delta) {
        std::swap(theta, delta);
    }
    if (t == 0.0) {
        return 0.0;
    }
    const double fine = pair_sum_nested(t, lambda, theta, delta, gauss_legendre(nodes));
    const double coarse = pair_sum_nested(t, lambda, theta, delta, gauss_legendre((3 * nodes) / 4));
    const double residual = std::abs(fine - coarse);
    if (residual > 1e-8 * std::abs(fine) + 1e-300) {
        std::ostringstream msg;
        msg << "pair-sum quadrature with " << nodes << " nodes did not converge (residual " << residual << ")";
        throw NumericFailure(msg.str(), residual);
    }
    return fine;
}

double pair_sum_large_large(double t, double lambda, double beta) {
    require_args(t, lambda, beta, 0.0);
    if (beta == 0.0) {
        return 0.0;
    }
    const double c = beta + lambda;
    const double c2 = c * c;
    return lambda * lambda * beta * beta / (c2 * c2) * quartic_remainder(c * t);
}

double pair_sum_large_small(double t, double lambda, double beta) {
    require_args(t, lambda, beta, 0.0);
    if (beta == 0.0) {
        return 0.0;
    }
    const double c = beta + lambda;
    const double c2 = c * c;
    const double u = c * t;
    return beta * lambda * lambda / (c2 * c2) * (2.0 * beta * chi(u) - 2.0 * lambda * phi3(u));
}

double small_claims_growth(double lambda, double beta) {
    require_args(0.0, lambda, beta, 0.0);
    return lambda * lambda / (beta + lambda);
}

AffineGrowth pair_sum_growth(double lambda, double theta, double delta) {
    require_args(0.0, lambda, theta, delta);
    const double a = lambda + theta;
    const double b = lambda + delta;
    const double ab = a * b;
    const double l2 = lambda * lambda;
    return {l2 * (4.0 * lambda / ab - 2.0 * l2 * (a + b) / (ab * ab)), l2 * l2 / ab};
}

} // namespace osclaims
