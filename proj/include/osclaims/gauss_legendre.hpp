#ifndef OSCLAIMS_GAUSS_LEGENDRE_HPP
#define OSCLAIMS_GAUSS_LEGENDRE_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace osclaims {

// Gauss-Legendre rule mapped to the unit interval [0, 1]; weights sum to 1.
class GaussLegendre {
public:
    explicit GaussLegendre(std::size_t n);

    std::size_t size() const noexcept { return nodes_.size(); }
    std::span<const double> nodes() const noexcept { return nodes_; }
    std::span<const double> weights() const noexcept { return weights_; }
    double node(std::size_t k) const { return nodes_[k]; }
    double weight(std::size_t k) const { return weights_[k]; }

    // Integral of f over [a, b].
    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double h = b - a;
        double sum = 0.0;
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            sum += weights_[k] * f(a + h * nodes_[k]);
        }
        return sum * h;
    }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

// Shared, lazily built rule. Thread-safe; the reference stays valid for the
// lifetime of the program.
const GaussLegendre& gauss_legendre(std::size_t n);

} // namespace osclaims

#endif
