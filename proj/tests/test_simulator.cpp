#include <doctest.h>

#include <cmath>
#include <vector>

#include "frozen_values.hpp"
#include "osclaims/errors.hpp"
#include "osclaims/moments_closed.hpp"
#include "osclaims/simulator.hpp"
#include "stats.hpp"

using namespace osclaims;

namespace {

constexpr double kAlpha = 0.001;

DependenceModel benchmark(double beta = 1.0) {
    return DependenceModel::boudreault(beta, SeverityLaw::exponential(10.0), SeverityLaw::exponential(1.0));
}

std::vector<std::size_t> count_histogram(const ProcessSpec& p, double t, std::size_t draws, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> hist;
    for (std::size_t k = 0; k < draws; ++k) {
        const std::size_t n = sample_count(p, t, rng);
        if (n >= hist.size()) {
            hist.resize(n + 1, 0);
        }
        ++hist[n];
    }
    return hist;
}

} // namespace

TEST_CASE("rng draws lie in the open unit interval and substreams differ") {
    Rng rng(1);
    for (int k = 0; k < 10000; ++k) {
        const double u = rng.uniform();
        CHECK((u > 0.0 && u < 1.0));
    }
    auto a = Rng::substream(5, 0);
    auto b = Rng::substream(5, 1);
    auto c = Rng::substream(5, 0);
    const auto x = a();
    CHECK(x != b());
    CHECK(x == c());
}

TEST_CASE("Poisson counts have the right mean") {
    const auto p = ProcessSpec::mixed_poisson(StructureDistribution::degenerate(1.0));
    Rng rng(42);
    const std::size_t draws = 1000000;
    double sum = 0.0;
    for (std::size_t k = 0; k < draws; ++k) {
        sum += static_cast<double>(sample_count(p, 1.0, rng));
    }
    CHECK(std::abs(sum / draws - 1.0) < 3.0 * std::sqrt(1.0 / draws));
    CHECK(sample_count(p, 0.0, rng) == 0);
    CHECK(sample_count(p, 1e-300, rng) == 0);
}

TEST_CASE("large Poisson means are sampled without bias") {
    Rng rng(9);
    const double mu = 437.5;
    const std::size_t draws = 200000;
    double sum = 0.0;
    double sq = 0.0;
    for (std::size_t k = 0; k < draws; ++k) {
        const double n = static_cast<double>(sample_poisson(mu, rng));
        sum += n;
        sq += n * n;
    }
    const double mean = sum / draws;
    CHECK(std::abs(mean - mu) < 4.0 * std::sqrt(mu / draws));
    CHECK((sq / draws - mean * mean) == doctest::Approx(mu).epsilon(0.02));
}

TEST_CASE("counts follow count_pmf (chi-square)") {
    const ProcessSpec processes[] = {
        ProcessSpec::mixed_poisson(StructureDistribution::degenerate(2.0)),
        ProcessSpec::mixed_poisson(StructureDistribution::gamma(2.0, 1.0)),
        ProcessSpec::mixed_poisson(StructureDistribution::finite_atoms({{0.5, 0.5}, {2.5, 0.5}})),
        ProcessSpec::non_homogeneous(CumulativeIntensity::power_law(0.8, 1.5)),
    };
    std::uint64_t seed = 100;
    for (const auto& p : processes) {
        CAPTURE(p.describe());
        const std::size_t draws = 1000000;
        const auto hist = count_histogram(p, 1.0, draws, ++seed);
        const auto pmf = count_pmfs(p, 1.0, 60);
        const auto test = stats::chi_square(hist, pmf, draws);
        CAPTURE(test.statistic);
        CHECK(test.dof >= 3);
        CHECK(test.p_value > kAlpha);
    }
}

TEST_CASE("arrival samples") {
    const auto mixed = ProcessSpec::mixed_poisson(StructureDistribution::gamma(2.0, 1.0));
    Rng rng(3);
    CHECK(sample_arrivals(mixed, 2.0, 0, rng).empty());

    SUBCASE("one arrival is uniform on [0, t]") {
        std::vector<double> first;
        for (int k = 0; k < 100000; ++k) {
            first.push_back(sample_arrivals(mixed, 2.0, 1, rng)[0]);
        }
        const double d = stats::ks_statistic(first, [](double x) { return x / 2.0; });
        CHECK(stats::ks_p_value(d, first.size()) > kAlpha);
    }
    SUBCASE("the first of five arrivals has density 5 (1 - y)^4") {
        std::vector<double> first;
        std::vector<double> last;
        for (int k = 0; k < 100000; ++k) {
            const auto a = sample_arrivals(mixed, 1.0, 5, rng);
            CHECK(std::is_sorted(a.begin(), a.end()));
            first.push_back(a.front());
            last.push_back(a.back());
        }
        const double d1 = stats::ks_statistic(first, [](double y) { return 1.0 - std::pow(1.0 - y, 5); });
        const double d5 = stats::ks_statistic(last, [](double y) { return std::pow(y, 5); });
        CHECK(stats::ks_p_value(d1, first.size()) > kAlpha);
        CHECK(stats::ks_p_value(d5, last.size()) > kAlpha);
    }
    SUBCASE("NHPP arrivals follow Lambda(x) / Lambda(t)") {
        const auto law = CumulativeIntensity::seasonal(2.0, 1.5, 0.7, 0.1);
        const auto nhpp = ProcessSpec::non_homogeneous(law);
        const ArrivalSampler sampler(nhpp, 1.5);
        std::vector<double> one;
        std::vector<double> first;
        for (int k = 0; k < 100000; ++k) {
            one.push_back(sampler.sample(1, rng)[0]);
            first.push_back(sampler.sample(3, rng)[0]);
        }
        auto F = [&](double x) { return law(x) / law(1.5); };
        CHECK(stats::ks_p_value(stats::ks_statistic(one, F), one.size()) > kAlpha);
        CHECK(stats::ks_p_value(stats::ks_statistic(first, [&](double x) { return 1.0 - std::pow(1.0 - F(x), 3); }),
                                first.size()) > kAlpha);
        for (double u : {1e-9, 0.25, 0.5, 0.999}) {
            CHECK(F(sampler.quantile(u)) == doctest::Approx(u).epsilon(1e-12));
        }
    }
}

TEST_CASE("the KS helper rejects a wrong law") {
    Rng rng(8);
    std::vector<double> x;
    for (int k = 0; k < 20000; ++k) {
        x.push_back(rng.uniform());
    }
    CHECK(stats::ks_p_value(stats::ks_statistic(x, [](double y) { return y * y; }), x.size()) < 1e-6);
    CHECK(stats::ks_p_value(stats::ks_statistic(x, [](double y) { return y; }), x.size()) > kAlpha);
}

TEST_CASE("sample paths") {
    const auto p = ProcessSpec::homogeneous(3.0);
    Rng rng(17);
    SUBCASE("without dependence every claim is a small claim") {
        const auto ys = SeverityLaw::gamma(2.0, 0.5);
        const auto dep = DependenceModel::boudreault(0.0, SeverityLaw::exponential(100.0), ys);
        std::vector<double> claims;
        while (claims.size() < 50000) {
            const auto path = sample_path(p, dep, 1.0, rng);
            claims.insert(claims.end(), path.claims.begin(), path.claims.end());
        }
        const double d = stats::ks_statistic(claims, [&](double y) { return ys.cdf(y); });
        CHECK(stats::ks_p_value(d, claims.size()) > kAlpha);
    }
    SUBCASE("an empty path has zero aggregate") {
        const auto path = sample_path(p, benchmark(), 0.0, rng);
        CHECK(path.arrivals.empty());
        CHECK(path.aggregate == 0.0);
    }
    SUBCASE("paths are internally consistent") {
        for (int k = 0; k < 200; ++k) {
            const auto path = sample_path(p, benchmark(), 2.0, rng);
            CHECK(path.arrivals.size() == path.claims.size());
            CHECK(std::is_sorted(path.arrivals.begin(), path.arrivals.end()));
            double sum = 0.0;
            for (double c : path.claims) {
                CHECK(c >= 0.0);
                sum += c;
            }
            CHECK(path.aggregate == doctest::Approx(sum));
            for (double a : path.arrivals) {
                CHECK((a >= 0.0 && a <= 2.0));
            }
        }
    }
}

TEST_CASE("strong dependence makes long waits produce large claims") {
    const auto dep = DependenceModel::boudreault(50.0, SeverityLaw::exponential(10.0), SeverityLaw::exponential(1.0));
    Rng rng(23);
    for (double v : {0.5, 0.02}) {
        const std::size_t draws = 400000;
        double sum = 0.0;
        for (std::size_t k = 0; k < draws; ++k) {
            sum += dep.sample_claim(1, 0.0, v, rng);
        }
        const double w = 1.0 - std::exp(-50.0 * v);
        const double mean = w * 10.0 + (1.0 - w) * 1.0;
        const double var = w * 200.0 + (1.0 - w) * 2.0 - mean * mean;
        CHECK(std::abs(sum / draws - mean) < 4.0 * std::sqrt(var / draws));
    }
}

TEST_CASE("Monte Carlo moments of a compound Poisson sum") {
    SimulationPlan plan{ProcessSpec::homogeneous(2.0), DependenceModel::independent(SeverityLaw::point_mass(1.5))};
    plan.horizon = 3.0;
    plan.replicates = 100000;
    const auto est = estimate_moments(plan);
    CHECK(std::abs(est.mean.point - 1.5 * 6.0) < 4.0 * est.mean.standard_error);
    CHECK(std::abs(est.variance.point - 2.25 * 6.0) < 4.0 * est.variance.standard_error);
    CHECK(est.mean.replicates == 100000);
    CHECK(est.mean.seed == plan.master_seed);
    CHECK(est.mean.lower < est.mean.point);
    CHECK(est.mean.upper > est.mean.point);
}

TEST_CASE("Monte Carlo agrees with the NHPP reference moments") {
    SimulationPlan plan{ProcessSpec::non_homogeneous(CumulativeIntensity::power_law(0.8, 1.5)),
                        DependenceModel::boudreault(1.0, SeverityLaw::exponential(5.0), SeverityLaw::exponential(1.0))};
    plan.horizon = 1.0;
    plan.replicates = 400000;
    const auto est = estimate_moments(plan);
    CHECK(std::abs(est.mean.point - frozen::kNhppMean_t1) < 4.0 * est.mean.standard_error);
    CHECK(std::abs(est.second_moment.point - frozen::kNhppSecond_t1) < 4.0 * est.second_moment.standard_error);
}

TEST_CASE("estimates are bit-identical across thread counts") {
    SimulationPlan plan{ProcessSpec::mixed_poisson(StructureDistribution::gamma(2.0, 2.0)), benchmark()};
    plan.horizon = 2.0;
    plan.replicates = 3 * kSimulationBlock + 17;
    plan.threads = 1;
    const auto a = estimate_moments(plan);
    plan.threads = 4;
    const auto b = estimate_moments(plan);
    CHECK(a.mean.point == b.mean.point);
    CHECK(a.second_moment.point == b.second_moment.point);
    CHECK(a.variance.point == b.variance.point);
    CHECK(a.variance.standard_error == b.variance.standard_error);
    plan.master_seed += 1;
    CHECK(estimate_moments(plan).mean.point != a.mean.point);
}

TEST_CASE("replicate paths depend only on the seed and index") {
    SimulationPlan plan{ProcessSpec::homogeneous(2.0), benchmark()};
    plan.horizon = 1.0;
    const auto a = sample_path(plan, 12345);
    const auto b = sample_path(plan, 12345);
    CHECK(a.claims == b.claims);
    CHECK(a.arrivals == b.arrivals);
}

TEST_CASE("one replicate is flagged as degenerate") {
    SimulationPlan plan{ProcessSpec::homogeneous(2.0), benchmark()};
    plan.replicates = 1;
    const auto est = estimate_moments(plan);
    CHECK(est.mean.degenerate);
    CHECK(std::isnan(est.mean.standard_error));
    CHECK(std::isnan(est.variance.point));
    CHECK(std::isfinite(est.mean.point));
}

TEST_CASE("invalid plans are rejected") {
    SimulationPlan plan{ProcessSpec::homogeneous(2.0), benchmark()};
    plan.replicates = 0;
    CHECK_THROWS_AS(estimate_moments(plan), InvalidArgument);
    plan.replicates = 10;
    plan.horizon = -1.0;
    CHECK_THROWS_AS(estimate_moments(plan), InvalidArgument);
}
