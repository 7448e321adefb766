#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "osclaims/detail/overloaded.hpp"
#include "osclaims/errors.hpp"
#include "osclaims/model.hpp"

namespace osclaims {

using detail::Overloaded;

namespace {

// Grid resolution of the envelope scan for function-backed models.
constexpr std::size_t kEnvelopeGrid = 65;
// Cap on the number of claim indices scanned for index-dependent models.
constexpr std::size_t kEnvelopeIndexCap = 256;

void require_grid(const std::vector<double>& knots, const char* what) {
    if (knots.empty()) {
        throw InvalidArgument(std::string(what) + " grid is empty");
    }
    for (std::size_t k = 0; k < knots.size(); ++k) {
        if (!std::isfinite(knots[k])) {
            throw InvalidArgument(std::string(what) + " grid has a non-finite knot");
        }
        if (k > 0 && !(knots[k] > knots[k - 1])) {
            throw InvalidArgument(std::string(what) + " grid must be strictly increasing");
        }
    }
}

// Locate the cell of x and its interpolation weight, flat outside the grid.
std::pair<std::size_t, double> locate(const std::vector<double>& knots, double x) {
    if (knots.size() == 1 || x <= knots.front()) {
        return {0, 0.0};
    }
    if (x >= knots.back()) {
        return {knots.size() - 2, 1.0};
    }
    const auto it = std::upper_bound(knots.begin(), knots.end(), x);
    const std::size_t c = static_cast<std::size_t>(it - knots.begin()) - 1;
    return {c, (x - knots[c]) / (knots[c + 1] - knots[c])};
}

void require_conditional_moments(const std::vector<double>& means, const std::vector<double>& seconds) {
    if (means.size() != seconds.size()) {
        throw InvalidArgument("conditional mean and second-moment tables differ in size");
    }
    for (std::size_t k = 0; k < means.size(); ++k) {
        if (!(means[k] >= 0.0) || !std::isfinite(means[k]) || !std::isfinite(seconds[k])) {
            throw InvalidArgument("conditional means must be finite and nonnegative");
        }
        if (seconds[k] < means[k] * means[k] * (1.0 - 1e-12)) {
            std::ostringstream msg;
            msg << "conditional second moment " << seconds[k] << " is below the squared mean "
                << means[k] * means[k] << " at knot " << k;
            throw InvalidArgument(msg.str());
        }
    }
}

double severity_moment_pair(double beta, double v, const SeverityLaw& large, const SeverityLaw& small, int k) {
    const double keep_small = std::exp(-beta * v);
    const double small_part = keep_small * small.require_moment(k);
    if (beta == 0.0 || keep_small == 1.0) {
        return small_part;
    }
    return -std::expm1(-beta * v) * large.require_moment(k) + small_part;
}

template <class F>
double scan_max(double t, std::size_t i_max, bool index_invariant, F&& f) {
    const std::size_t i_top = index_invariant ? 1 : std::clamp<std::size_t>(i_max, 1, kEnvelopeIndexCap);
    double best = 0.0;
    for (std::size_t i = 1; i <= i_top; ++i) {
        for (std::size_t a = 0; a < kEnvelopeGrid; ++a) {
            const double x = t * static_cast<double>(a) / (kEnvelopeGrid - 1);
            for (std::size_t b = 0; b < kEnvelopeGrid; ++b) {
                const double v = t * static_cast<double>(b) / (kEnvelopeGrid - 1);
                best = std::max(best, std::abs(f(i, x, v)));
            }
        }
    }
    return best;
}

} // namespace

// ---------------------------------------------------------------------------

PiecewiseLinear::PiecewiseLinear(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
    require_grid(knots_, "piecewise-linear");
    if (values_.size() != knots_.size()) {
        throw InvalidArgument("piecewise-linear table needs one value per knot");
    }
}

double PiecewiseLinear::operator()(double x) const {
    const auto [c, w] = locate(knots_, x);
    if (knots_.size() == 1) {
        return values_[0];
    }
    return (1.0 - w) * values_[c] + w * values_[c + 1];
}

double PiecewiseLinear::slope(double x) const {
    if (knots_.size() == 1 || x < knots_.front() || x > knots_.back()) {
        return 0.0;
    }
    const auto [c, w] = locate(knots_, x);
    (void)w;
    return (values_[c + 1] - values_[c]) / (knots_[c + 1] - knots_[c]);
}

BilinearTable::BilinearTable(std::vector<double> x_knots, std::vector<double> v_knots, std::vector<double> values)
    : x_knots_(std::move(x_knots)), v_knots_(std::move(v_knots)), values_(std::move(values)) {
    require_grid(x_knots_, "bilinear x");
    require_grid(v_knots_, "bilinear v");
    if (values_.size() != x_knots_.size() * v_knots_.size()) {
        throw InvalidArgument("bilinear table needs x_knots * v_knots values");
    }
}

double BilinearTable::operator()(double x, double v) const {
    const std::size_t nv = v_knots_.size();
    const auto [cx, wx] = locate(x_knots_, x);
    const auto [cv, wv] = locate(v_knots_, v);
    const std::size_t cx1 = x_knots_.size() == 1 ? cx : cx + 1;
    const std::size_t cv1 = nv == 1 ? cv : cv + 1;
    const double f00 = values_[cx * nv + cv];
    const double f01 = values_[cx * nv + cv1];
    const double f10 = values_[cx1 * nv + cv];
    const double f11 = values_[cx1 * nv + cv1];
    return (1.0 - wx) * ((1.0 - wv) * f00 + wv * f01) + wx * ((1.0 - wv) * f10 + wv * f11);
}

// ---------------------------------------------------------------------------

DependenceModel DependenceModel::boudreault(double beta, SeverityLaw large, SeverityLaw small) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw InvalidArgument("Boudreault beta must be finite and nonnegative");
    }
    return DependenceModel(Boudreault{beta, std::move(large), std::move(small)});
}

DependenceModel DependenceModel::independent(SeverityLaw severity) {
    return DependenceModel(Independent{std::move(severity)});
}

DependenceModel DependenceModel::v_dependent(IndexedVFunction mean, IndexedVFunction second, ClaimSampler sampler,
                                             bool index_invariant) {
    if (!mean || !second) {
        throw InvalidArgument("v-dependent model needs mean and second-moment functions");
    }
    return DependenceModel(TabulatedV{std::move(mean), std::move(second), std::move(sampler), index_invariant});
}

DependenceModel DependenceModel::tv_dependent(IndexedTVFunction mean, IndexedTVFunction second,
                                              ClaimSampler sampler, bool index_invariant) {
    if (!mean || !second) {
        throw InvalidArgument("tv-dependent model needs mean and second-moment functions");
    }
    return DependenceModel(TabulatedTV{std::move(mean), std::move(second), std::move(sampler), index_invariant});
}

DependenceModel DependenceModel::tabulated_v(std::vector<double> v_grid, std::vector<double> means,
                                             std::vector<double> seconds) {
    require_conditional_moments(means, seconds);
    PiecewiseLinear m(v_grid, std::move(means));
    PiecewiseLinear s(v_grid, std::move(seconds));
    auto model = v_dependent([m](std::size_t, double v) { return m(v); },
                             [s](std::size_t, double v) { return s(v); }, {}, true);
    std::get<TabulatedV>(model.variant_).v_knots = std::move(v_grid);
    return model;
}

DependenceModel DependenceModel::tabulated_tv(std::vector<double> x_grid, std::vector<double> v_grid,
                                              std::vector<double> means, std::vector<double> seconds) {
    require_conditional_moments(means, seconds);
    BilinearTable m(x_grid, v_grid, std::move(means));
    BilinearTable s(std::move(x_grid), std::move(v_grid), std::move(seconds));
    return tv_dependent([m](std::size_t, double x, double v) { return m(x, v); },
                        [s](std::size_t, double x, double v) { return s(x, v); }, {}, true);
}

const std::vector<double>& DependenceModel::v_kinks() const noexcept {
    static const std::vector<double> none;
    const auto* tab = std::get_if<TabulatedV>(&variant_);
    return tab != nullptr ? tab->v_knots : none;
}

bool DependenceModel::is_v_only() const noexcept { return !std::holds_alternative<TabulatedTV>(variant_); }

bool DependenceModel::is_index_invariant() const noexcept {
    return std::visit(Overloaded{
                          [](const Boudreault&) { return true; },
                          [](const Independent&) { return true; },
                          [](const TabulatedV& d) { return d.index_invariant; },
                          [](const TabulatedTV& d) { return d.index_invariant; },
                      },
                      variant_);
}

bool DependenceModel::has_closed_form() const noexcept {
    return std::holds_alternative<Boudreault>(variant_) || std::holds_alternative<Independent>(variant_);
}

double DependenceModel::mean_envelope(double t, std::size_t i_max) const {
    return std::visit(
        Overloaded{
            [](const Boudreault& b) {
                const double s = b.small.require_moment(1);
                return b.beta == 0.0 ? s : std::max(s, b.large.require_moment(1));
            },
            [](const Independent& d) { return d.severity.require_moment(1); },
            [&](const TabulatedV& d) {
                return scan_max(t, i_max, d.index_invariant,
                                [&](std::size_t i, double, double v) { return d.mean(i, v); });
            },
            [&](const TabulatedTV& d) {
                return scan_max(t, i_max, d.index_invariant,
                                [&](std::size_t i, double x, double v) { return d.mean(i, x, v); });
            },
        },
        variant_);
}

double DependenceModel::second_envelope(double t, std::size_t i_max) const {
    return std::visit(
        Overloaded{
            [](const Boudreault& b) {
                const double s = b.small.require_moment(2);
                return b.beta == 0.0 ? s : std::max(s, b.large.require_moment(2));
            },
            [](const Independent& d) { return d.severity.require_moment(2); },
            [&](const TabulatedV& d) {
                return scan_max(t, i_max, d.index_invariant,
                                [&](std::size_t i, double, double v) { return d.second(i, v); });
            },
            [&](const TabulatedTV& d) {
                return scan_max(t, i_max, d.index_invariant,
                                [&](std::size_t i, double x, double v) { return d.second(i, x, v); });
            },
        },
        variant_);
}

double DependenceModel::sample_claim(std::size_t i, double x, double v, Rng& rng) const {
    return std::visit(Overloaded{
                          [&](const Boudreault& b) {
                              const double u_mix = rng.uniform();
                              const double u_size = rng.uniform();
                              const bool large = u_mix < -std::expm1(-b.beta * v);
                              return large ? b.large.quantile(u_size) : b.small.quantile(u_size);
                          },
                          [&](const Independent& d) {
                              rng.uniform();
                              return d.severity.quantile(rng.uniform());
                          },
                          [&](const TabulatedV& d) {
                              if (d.sampler) {
                                  return d.sampler(i, x, v, rng);
                              }
                              rng.uniform();
                              return sample_moment_matched(d.mean(i, v), d.second(i, v), rng.uniform());
                          },
                          [&](const TabulatedTV& d) {
                              if (d.sampler) {
                                  return d.sampler(i, x, v, rng);
                              }
                              rng.uniform();
                              return sample_moment_matched(d.mean(i, x, v), d.second(i, x, v), rng.uniform());
                          },
                      },
                      variant_);
}

std::string DependenceModel::describe() const {
    std::ostringstream out;
    std::visit(Overloaded{
                   [&](const Boudreault& b) {
                       out << "boudreault(beta=" << b.beta << ", large=" << b.large.describe()
                           << ", small=" << b.small.describe() << ")";
                   },
                   [&](const Independent& d) { out << "independent(" << d.severity.describe() << ")"; },
                   [&](const TabulatedV&) { out << "tabulated_v"; },
                   [&](const TabulatedTV&) { out << "tabulated_tv"; },
               },
               variant_);
    return out.str();
}

// ---------------------------------------------------------------------------

double delta(const DependenceModel& dep, std::size_t i, double v, double x) {
    if (!(v >= 0.0)) {
        throw InvalidArgument("waiting time must be nonnegative");
    }
    return std::visit(Overloaded{
                          [&](const DependenceModel::Boudreault& b) {
                              return severity_moment_pair(b.beta, v, b.large, b.small, 1);
                          },
                          [&](const DependenceModel::Independent& d) { return d.severity.require_moment(1); },
                          [&](const DependenceModel::TabulatedV& d) { return d.mean(i, v); },
                          [&](const DependenceModel::TabulatedTV& d) { return d.mean(i, x, v); },
                      },
                      dep.variant());
}

double theta(const DependenceModel& dep, std::size_t i, double v, double x) {
    if (!(v >= 0.0)) {
        throw InvalidArgument("waiting time must be nonnegative");
    }
    return std::visit(Overloaded{
                          [&](const DependenceModel::Boudreault& b) {
                              return severity_moment_pair(b.beta, v, b.large, b.small, 2);
                          },
                          [&](const DependenceModel::Independent& d) { return d.severity.require_moment(2); },
                          [&](const DependenceModel::TabulatedV& d) { return d.second(i, v); },
                          [&](const DependenceModel::TabulatedTV& d) { return d.second(i, x, v); },
                      },
                      dep.variant());
}

DependenceModel::Boudreault closed_form_view(const DependenceModel& dep) {
    if (const auto* b = std::get_if<DependenceModel::Boudreault>(&dep.variant())) {
        return *b;
    }
    if (const auto* d = std::get_if<DependenceModel::Independent>(&dep.variant())) {
        return DependenceModel::Boudreault{0.0, d->severity, d->severity};
    }
    throw InvalidArgument("closed-form moments need Boudreault or independent dependence");
}

double sample_moment_matched(double mean, double second, double u) {
    if (!(mean > 0.0)) {
        return 0.0;
    }
    const double var = second - mean * mean;
    if (!(var > 1e-14 * second)) {
        return mean;
    }
    const double shape = mean * mean / var;
    const double scale = var / mean;
    return scale * boost::math::gamma_p_inv(shape, u);
}

} // namespace osclaims
