#ifndef OSCLAIMS_SPECIAL_FORMS_HPP
#define OSCLAIMS_SPECIAL_FORMS_HPP

#include <cstddef>

namespace osclaims {

// Default Gauss-Legendre nodes per axis for the generic pair-sum quadrature.
inline constexpr std::size_t kPairSumNodes = 64;

// Expected number of claims up to t that arrive in the small-claim regime
// when every claim i is weighted by exp(-beta V_i), for a Poisson process of
// rate lambda:
//   lambda / (beta + lambda)^2 * (beta - beta e^{-(beta + lambda) t} + (beta + lambda) lambda t).
// Lies in [0, lambda t]; equals lambda t when beta = 0.
double expected_small_claims(double t, double lambda, double beta);

// lambda t - expected_small_claims(t, lambda, beta), evaluated without
// cancellation.
double expected_large_claims(double t, double lambda, double beta);

// Discounted pair sum
//   lambda^2 int_0^t e^{-(lambda+theta) y} int_0^{t-y} e^{-(lambda+delta) v}
//            ((lambda (t - y - v) + 2)^2 - 2) dv dy.
// Closed form when theta = delta or one of them is zero, nested Gauss-Legendre
// quadrature otherwise. Symmetric in (theta, delta).
double discounted_pair_sum(double t, double lambda, double theta, double delta,
                           std::size_t nodes = kPairSumNodes);

// The same double integral, always by nested Gauss-Legendre quadrature. Throws
// NumericFailure when a half-resolution rule disagrees beyond 1e-8 relative.
double discounted_pair_sum_quadrature(double t, double lambda, double theta, double delta,
                                      std::size_t nodes = kPairSumNodes);

// Combinations of pair sums that appear in the second moment, in forms free
// of cancellation:
//   large_large = B(0,0) - 2 B(0,beta) + B(beta,beta)
//   large_small = B(0,beta) - B(beta,beta)
// with B(theta, delta) = discounted_pair_sum(t, lambda, theta, delta).
double pair_sum_large_large(double t, double lambda, double beta);
double pair_sum_large_small(double t, double lambda, double beta);

// lim expected_small_claims(t, lambda, beta) / t = lambda^2 / (beta + lambda).
double small_claims_growth(double lambda, double beta);

// discounted_pair_sum / t = constant + slope * t + o(1) as t -> infinity.
struct AffineGrowth {
    double constant;
    double slope;
};
AffineGrowth pair_sum_growth(double lambda, double theta, double delta);

} // namespace osclaims

#endif
