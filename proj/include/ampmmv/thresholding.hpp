// Bernoulli-Gaussian scalar denoisers used inside the per-frame loop.
//
// Under the local prior
//   p(x) = (1 - pi) delta(x) + pi N(x; xi, psi)
// and a pseudo-measurement phi = x + noise(0, c), the posterior is a
// two-component mixture. gamma is the inactive-to-active odds ratio,
// f_threshold / g_threshold are the exact posterior mean and variance, and
// f_prime = g/c is the derivative that feeds the Onsager correction.
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "field.hpp"

namespace ampmmv {

template <typename Scalar>
struct LocalPrior {
    double pi = 0.5;      // activity probability in [0, 1]
    Scalar xi = Scalar(0);  // slab mean
    double psi = 1.0;     // slab variance, > 0

    void validate() const {
        if (!(pi >= 0.0 && pi <= 1.0)) throw std::invalid_argument("pi must lie in [0, 1]");
        if (!(psi > 0.0)) throw std::invalid_argument("psi must be positive");
    }
};

namespace detail {

// log of N(phi; 0, c) / N(phi; xi, psi + c): the data's evidence against
// activity. Evaluated with the field's own density so the real variant
// carries the sqrt normalizer and half-exponent of the real Gaussian.
template <typename Scalar>
double log_likelihood_ratio(const Scalar& phi, double c, const LocalPrior<Scalar>& prior) {
    using FT = field_traits<Scalar>;
    return FT::log_pdf(phi, Scalar(0), c) - FT::log_pdf(phi, prior.xi, prior.psi + c);
}

inline constexpr double kLogGammaClamp = 700.0;

}  // namespace detail

// Odds ratio gamma = ((1 - pi) / pi) * N(phi; 0, c) / N(phi; xi, psi + c).
// Returns +inf for pi = 0 and 0 for pi = 1.
template <typename Scalar>
double log_gamma_odds(const Scalar& phi, double c, const LocalPrior<Scalar>& prior) {
    if (!(c > 0.0)) throw std::invalid_argument("gamma: c must be positive");
    if (prior.pi <= 0.0) return std::numeric_limits<double>::infinity();
    if (prior.pi >= 1.0) return -std::numeric_limits<double>::infinity();
    const double lg = std::log1p(-prior.pi) - std::log(prior.pi) +
                      detail::log_likelihood_ratio(phi, c, prior);
    return std::clamp(lg, -detail::kLogGammaClamp, detail::kLogGammaClamp);
}

template <typename Scalar>
double gamma_odds(const Scalar& phi, double c, const LocalPrior<Scalar>& prior) {
    return std::exp(log_gamma_odds(phi, c, prior));
}

namespace detail {

// Posterior probability of the slab component, 1 / (1 + gamma).
template <typename Scalar>
double slab_probability(const Scalar& phi, double c, const LocalPrior<Scalar>& prior) {
    const double lg = log_gamma_odds(phi, c, prior);
    if (std::isinf(lg)) return lg > 0 ? 0.0 : 1.0;
    if (lg > kLogGammaClamp - 1) return 0.0;
    return 1.0 / (1.0 + std::exp(lg));
}

}  // namespace detail

// Posterior mean E[x | phi]: (1 + gamma)^-1 (psi phi + xi c) / (psi + c).
template <typename Scalar>
Scalar f_threshold(const Scalar& phi, double c, const LocalPrior<Scalar>& prior) {
    const double p1 = detail::slab_probability(phi, c, prior);
    if (p1 == 0.0) return Scalar(0);
    const Scalar slab_mean = (prior.psi * phi + c * prior.xi) / (prior.psi + c);
    return p1 * slab_mean;
}

// Posterior variance var[x | phi]:
//   (1 + gamma)^-1 psi c / (psi + c) + gamma (1 + gamma)^-2 |slab mean|^2.
template <typename Scalar>
double g_threshold(const Scalar& phi, double c, const LocalPrior<Scalar>& prior) {
    using FT = field_traits<Scalar>;
    const double p1 = detail::slab_probability(phi, c, prior);
    if (p1 == 0.0) return 0.0;
    const Scalar slab_mean = (prior.psi * phi + c * prior.xi) / (prior.psi + c);
    const double slab_var = prior.psi * c / (prior.psi + c);
    return p1 * slab_var + p1 * (1.0 - p1) * FT::abs2(slab_mean);
}

// d/dphi of f_threshold, which equals g_threshold / c.
template <typename Scalar>
double f_prime(const Scalar& phi, double c, const LocalPrior<Scalar>& prior) {
    return g_threshold(phi, c, prior) / c;
}

}  // namespace ampmmv
