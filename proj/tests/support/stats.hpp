// Goodness-of-fit helpers for the simulator tests.
#ifndef OSCLAIMS_TESTS_STATS_HPP
#define OSCLAIMS_TESTS_STATS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace stats {

// One-sample Kolmogorov-Smirnov statistic of `sample` against `cdf`.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t k = 0; k < sample.size(); ++k) {
        const double f = cdf(sample[k]);
        d = std::max({d, (k + 1) / n - f, f - k / n});
    }
    return d;
}

// Asymptotic Kolmogorov tail with the Stephens small-sample correction.
inline double ks_p_value(double d, std::size_t n) {
    const double rn = std::sqrt(static_cast<double>(n));
    const double lambda = (rn + 0.12 + 0.11 / rn) * d;
    if (lambda < 0.2) {
        return 1.0;
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) {
            break;
        }
    }
    return std::clamp(sum, 0.0, 1.0);
}

struct ChiSquare {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
};

// Pearson test of observed counts against probabilities. Cells are merged
// left to right until each expected count is at least `min_expected`; the
// remaining mass beyond the last probability joins the final cell.
inline ChiSquare chi_square(const std::vector<std::size_t>& observed, const std::vector<double>& probs,
                            std::size_t total, double min_expected = 5.0) {
    std::vector<double> obs_cells;
    std::vector<double> exp_cells;
    double o = 0.0;
    double e = 0.0;
    double covered = 0.0;
    std::size_t seen = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        o += k < observed.size() ? static_cast<double>(observed[k]) : 0.0;
        seen += k < observed.size() ? observed[k] : 0;
        e += probs[k] * total;
        covered += probs[k];
        if (e >= min_expected) {
            obs_cells.push_back(o);
            exp_cells.push_back(e);
            o = e = 0.0;
        }
    }
    o += static_cast<double>(total - seen);
    e += std::max(0.0, 1.0 - covered) * total;
    if (!obs_cells.empty() && e < min_expected) {
        obs_cells.back() += o;
        exp_cells.back() += e;
    } else {
        obs_cells.push_back(o);
        exp_cells.push_back(e);
    }
    ChiSquare out;
    for (std::size_t k = 0; k < obs_cells.size(); ++k) {
        out.statistic += (obs_cells[k] - exp_cells[k]) * (obs_cells[k] - exp_cells[k]) / exp_cells[k];
    }
    out.dof = obs_cells.size() - 1;
    if (out.dof > 0) {
        out.p_value = boost::math::cdf(boost::math::complement(
            boost::math::chi_squared_distribution<double>(static_cast<double>(out.dof)), out.statistic));
    }
    return out;
}

} // namespace stats

#endif
