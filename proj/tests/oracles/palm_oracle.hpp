// Moments of S(t) from Palm-type integrals over arrival epochs.
//
// For a Poisson process with intensity lambda(x), a claim at epoch w whose
// predecessor sits at a (a = 0 for the first claim) contributes
//   h(a, w) = int_0^{w-a} D(w-u, u) lambda(w-u) e^{-(Lambda(w) - Lambda(w-u))} du
//           + D(a, w-a) e^{-(Lambda(w) - Lambda(a))}
// where D(x, v) is the conditional claim moment. Then
//   E[S]   = int lambda(y) h_D(0, y) dy
//   E[S^2] = int lambda(y) h_T(0, y) dy + 2 int int_{y<w} lambda(y) lambda(w) h_D(0, y) h_D(y, w) dw dy.
// Nothing here is shared with the library: adaptive Gauss-Kronrod throughout.
#ifndef OSCLAIMS_TESTS_PALM_ORACLE_HPP
#define OSCLAIMS_TESTS_PALM_ORACLE_HPP

#include <cmath>
#include <functional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

using Fn1 = std::function<double(double)>;
using Fn2 = std::function<double(double, double)>;

struct Intensity {
    Fn1 cumulative;
    Fn1 rate;
};

inline Intensity homogeneous(double lambda) {
    return {[lambda](double x) { return lambda * x; }, [lambda](double) { return lambda; }};
}

inline double gk(const Fn1& f, double a, double b, double tol = 1e-12) {
    if (b <= a) {
        return 0.0;
    }
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, tol);
}

inline double claim_at(const Intensity& p, const Fn2& d, double a, double w, double tol) {
    const double cw = p.cumulative(w);
    const double body = gk([&](double u) { return d(w - u, u) * p.rate(w - u) * std::exp(-(cw - p.cumulative(w - u))); },
                           0.0, w - a, tol);
    return body + d(a, w - a) * std::exp(-(cw - p.cumulative(a)));
}

inline double mean(const Intensity& p, const Fn2& d, double t) {
    return gk([&](double y) { return p.rate(y) * claim_at(p, d, 0.0, y, 1e-13); }, 0.0, t);
}

inline double second_moment(const Intensity& p, const Fn2& d, const Fn2& th, double t) {
    const double singles = gk([&](double y) { return p.rate(y) * claim_at(p, th, 0.0, y, 1e-13); }, 0.0, t);
    const double pairs = gk(
        [&](double y) {
            const double first = p.rate(y) * claim_at(p, d, 0.0, y, 1e-12);
            return first * gk([&](double w) { return p.rate(w) * claim_at(p, d, y, w, 1e-11); }, y, t, 1e-11);
        },
        0.0, t, 1e-10);
    return singles + 2.0 * pairs;
}

// Waiting-time-only conditional moments lifted to D(x, v).
inline Fn2 on_wait(Fn1 f) {
    return [f = std::move(f)](double, double v) { return f(v); };
}

// Conditional moments of a Boudreault claim: large with probability 1 - e^{-beta v}.
inline Fn1 mixture(double beta, double large, double small) {
    return [=](double v) {
        const double w = std::exp(-beta * v);
        return (1.0 - w) * large + w * small;
    };
}

} // namespace oracle

#endif
