#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "frozen_values.hpp"
#include "osclaims/errors.hpp"
#include "osclaims/special_forms.hpp"

using namespace osclaims;

namespace {

using boost::math::quadrature::gauss_kronrod;

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

// Defining integrals, evaluated by adaptive Gauss-Kronrod.
double small_claims_oracle(double t, double lambda, double beta) {
    auto f = [&](double v) { return std::exp(-(beta + lambda) * v) * lambda * (lambda * (t - v) + 1.0); };
    return gauss_kronrod<double, 31>::integrate(f, 0.0, t, 15, 1e-14);
}

double pair_sum_oracle(double t, double lambda, double th, double de) {
    auto outer = [&](double y) {
        const double s = t - y;
        auto inner = [&](double v) {
            const double q = lambda * (s - v) + 2.0;
            return std::exp(-(lambda + de) * v) * (q * q - 2.0);
        };
        return std::exp(-(lambda + th) * y) * gauss_kronrod<double, 31>::integrate(inner, 0.0, s, 15, 1e-13);
    };
    return lambda * lambda * gauss_kronrod<double, 31>::integrate(outer, 0.0, t, 15, 1e-12);
}

} // namespace

TEST_CASE("small-claim count matches frozen high-precision values") {
    CHECK(rel(expected_small_claims(2.0, 1.0, 1.0), frozen::kSmallClaims_t2_l1_b1) < 1e-14);
    CHECK(rel(expected_small_claims(0.5, 2.0, 3.0), frozen::kSmallClaims_t05_l2_b3) < 1e-14);
    CHECK(expected_small_claims(2.0, 1.0, 1.0) == doctest::Approx(0.25 * (5.0 - std::exp(-4.0))).epsilon(1e-15));
}

TEST_CASE("small-claim count reduces to lambda t without discounting and vanishes at t = 0") {
    for (double lambda : {0.1, 1.0, 7.0}) {
        for (double t : {1e-9, 0.5, 3.0, 100.0}) {
            CHECK(rel(expected_small_claims(t, lambda, 0.0), lambda * t) < 1e-12);
        }
        CHECK(expected_small_claims(0.0, lambda, 2.0) == 0.0);
    }
}

TEST_CASE("small-claim count agrees with its defining integral on a grid") {
    for (double t : {1e-7, 0.01, 0.5, 2.0, 20.0}) {
        for (double lambda : {0.3, 1.0, 4.0}) {
            for (double beta : {0.0, 0.2, 1.0, 9.0}) {
                CAPTURE(t);
                CAPTURE(lambda);
                CAPTURE(beta);
                CHECK(rel(expected_small_claims(t, lambda, beta), small_claims_oracle(t, lambda, beta)) < 1e-12);
                const double large = expected_large_claims(t, lambda, beta);
                CHECK(large >= 0.0);
                CHECK(rel(large + expected_small_claims(t, lambda, beta), lambda * t) < 1e-13);
            }
        }
    }
}

TEST_CASE("large-claim count stays accurate when beta t is tiny") {
    // lambda t - A ~ beta lambda t^2 / 2 for small t.
    const double t = 1e-8;
    const double lambda = 1.0;
    const double beta = 1.0;
    const double expected = beta * lambda * t * t / 2.0 * (1.0 - (2.0 * beta + 3.0 * lambda) * t / 3.0);
    CHECK(rel(expected_large_claims(t, lambda, beta), expected) < 1e-7);
}

TEST_CASE("small-claim count is nondecreasing in t and bounded by lambda t") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.01, 5.0);
    for (int k = 0; k < 50; ++k) {
        const double lambda = u(gen);
        const double beta = u(gen);
        double prev = 0.0;
        for (double t = 0.0; t <= 30.0; t += 0.37) {
            const double a = expected_small_claims(t, lambda, beta);
            CHECK(a >= prev);
            CHECK(a <= lambda * t * (1.0 + 1e-15));
            prev = a;
        }
    }
}

TEST_CASE("small-claim growth rate and its finite-t gap") {
    CHECK(small_claims_growth(1.0, 1.0) == doctest::Approx(0.5));
    for (double lambda : {0.5, 1.0, 2.0}) {
        for (double beta : {0.5, 1.0, 2.0}) {
            const double limit = small_claims_growth(lambda, beta);
            CHECK(limit == doctest::Approx(lambda * lambda / (beta + lambda)));
            // A / t - limit = lambda beta (1 - e^{-(beta + lambda) t}) / ((beta + lambda)^2 t).
            for (double t : {5.0, 200.0, 5000.0}) {
                const double c = beta + lambda;
                const double gap = lambda * beta * -std::expm1(-c * t) / (c * c * t);
                CHECK(expected_small_claims(t, lambda, beta) / t - limit == doctest::Approx(gap).epsilon(1e-8));
            }
        }
    }
}

TEST_CASE("pair sum matches frozen high-precision values") {
    CHECK(rel(discounted_pair_sum(2.0, 1.0, 1.0, 1.0), frozen::kPairSum_t2_l1_1_1) < 1e-12);
    CHECK(rel(discounted_pair_sum(2.0, 1.0, 0.0, 1.0), frozen::kPairSum_t2_l1_0_1) < 1e-12);
    CHECK(rel(discounted_pair_sum(2.0, 1.0, 1.0, 0.0), frozen::kPairSum_t2_l1_0_1) < 1e-12);
    CHECK(rel(discounted_pair_sum(2.0, 1.0, 0.3, 1.7), frozen::kPairSum_t2_l1_03_17) < 1e-10);
    CHECK(rel(discounted_pair_sum(0.5, 2.0, 0.5, 0.0), frozen::kPairSum_t05_l2_05_0) < 1e-12);
}

TEST_CASE("pair sum reduces to (lambda t)^2 without discounting") {
    for (double lambda : {0.2, 1.0, 3.0}) {
        for (double t : {0.1, 1.0, 7.0, 60.0}) {
            CHECK(rel(discounted_pair_sum(t, lambda, 0.0, 0.0), t * t * lambda * lambda) < 1e-12);
        }
    }
    CHECK(discounted_pair_sum(0.0, 1.0, 0.5, 2.0) == 0.0);
}

TEST_CASE("pair sum fast paths agree with the generic quadrature") {
    for (double t : {0.5, 1.0, 2.0, 6.0}) {
        for (double lambda : {0.5, 1.0, 2.0}) {
            for (double beta : {0.25, 1.0, 2.0}) {
                CAPTURE(t);
                CAPTURE(lambda);
                CAPTURE(beta);
                CHECK(rel(discounted_pair_sum(t, lambda, beta, beta),
                          discounted_pair_sum_quadrature(t, lambda, beta, beta)) < 1e-8);
                CHECK(rel(discounted_pair_sum(t, lambda, 0.0, beta),
                          discounted_pair_sum_quadrature(t, lambda, 0.0, beta)) < 1e-8);
                CHECK(rel(discounted_pair_sum(t, lambda, beta, beta), pair_sum_oracle(t, lambda, beta, beta)) < 1e-9);
            }
        }
    }
}

TEST_CASE("pair sum is symmetric in its two discount rates") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int k = 0; k < 50; ++k) {
        const double t = 0.1 + u(gen);
        const double lambda = 0.1 + u(gen);
        const double th = u(gen);
        const double de = u(gen);
        CAPTURE(t);
        CAPTURE(lambda);
        CAPTURE(th);
        CAPTURE(de);
        CHECK(rel(discounted_pair_sum(t, lambda, th, de), discounted_pair_sum(t, lambda, de, th)) < 1e-8);
        CHECK(rel(discounted_pair_sum(t, lambda, th, de), pair_sum_oracle(t, lambda, th, de)) < 1e-8);
    }
}

TEST_CASE("pair-sum combinations equal their cancelling definitions where those are accurate") {
    for (double t : {0.5, 2.0, 10.0}) {
        for (double beta : {0.3, 1.0, 4.0}) {
            const double lambda = 1.3;
            const double b00 = discounted_pair_sum(t, lambda, 0.0, 0.0);
            const double b0b = discounted_pair_sum(t, lambda, 0.0, beta);
            const double bbb = discounted_pair_sum(t, lambda, beta, beta);
            CHECK(pair_sum_large_large(t, lambda, beta) == doctest::Approx(b00 - 2 * b0b + bbb).epsilon(1e-9));
            CHECK(pair_sum_large_small(t, lambda, beta) == doctest::Approx(b0b - bbb).epsilon(1e-9));
        }
    }
    // Both combinations are nonnegative and vanish when beta = 0.
    CHECK(pair_sum_large_large(2.0, 1.0, 0.0) == doctest::Approx(0.0));
    CHECK(pair_sum_large_small(2.0, 1.0, 0.0) == doctest::Approx(0.0));
    CHECK(pair_sum_large_large(1e-4, 1.0, 1.0) > 0.0);
}

TEST_CASE("pair-sum growth coefficients") {
    const auto g = pair_sum_growth(1.0, 1.0, 1.0);
    CHECK(g.constant == doctest::Approx(0.5));
    CHECK(g.slope == doctest::Approx(0.25));
    const auto flat = pair_sum_growth(2.0, 0.0, 0.0);
    CHECK(flat.constant == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(flat.slope == doctest::Approx(4.0));
    // B / t - slope t -> constant.
    for (double th : {0.0, 0.5, 2.0}) {
        for (double de : {0.0, 1.0}) {
            const auto gr = pair_sum_growth(1.0, th, de);
            const double t = 400.0;
            CHECK(std::abs(discounted_pair_sum(t, 1.0, th, de) / t - gr.slope * t - gr.constant) < 1e-2);
        }
    }
}

TEST_CASE("special forms reject invalid arguments") {
    CHECK_THROWS_AS(expected_small_claims(-1.0, 1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(expected_small_claims(1.0, 0.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(discounted_pair_sum(1.0, -1.0, 0.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(discounted_pair_sum(1.0, 1.0, -0.5, 0.0), InvalidArgument);
}
