// Collapse of the frame-to-amplitude message to a single Gaussian.
//
// The exact sum-product message from a frame to its amplitude variable is
// improper (constant in theta on the inactive branch). Re-deriving it under
// s in {eps, 1} gives the proper two-component mixture
//
//   (1 - Omega(pi)) N(theta; phi/eps, c/eps^2) + Omega(pi) N(theta; phi, c),
//
// which is collapsed by a second-order Taylor expansion of its negative
// log-density about phi. The expansion is evaluated through the mixture
// responsibilities in log domain, so both exponential regimes are exact
// limits rather than clamped special cases.
#pragma once

#include <algorithm>
#include <cmath>

#include "field.hpp"
#include "gaussian_msg.hpp"

namespace ampmmv {

// Mixing weight Omega(pi) = eps^2 pi / ((1 - pi) + eps^2 pi).
inline double omega(double pi, double epsilon) {
    if (pi <= 0.0) return 0.0;
    if (pi >= 1.0) return 1.0;
    const double e2 = epsilon * epsilon;
    return e2 * pi / ((1.0 - pi) + e2 * pi);
}

// Field-consistent mixing weight: the eps power matches the Gaussian
// normalization of the scalar field (eps^2 for complex, eps for real), so
// the mixture's component ratio at theta = phi is the same likelihood ratio
// in both fields. The complex case is omega() itself.
template <typename Scalar>
double omega_field(double pi, double epsilon) {
    if (pi <= 0.0) return 0.0;
    if (pi >= 1.0) return 1.0;
    const double e = field_traits<Scalar>::is_complex ? epsilon * epsilon : epsilon;
    return e * pi / ((1.0 - pi) + e * pi);
}

template <typename Scalar>
struct TaylorResult {
    Scalar xi;   // collapsed mean
    double psi;  // collapsed variance
};

// Single-Gaussian approximation (xi, psi) of the mixture above.
//
// With responsibilities r1 (broad component) and r2 = 1 - r1 evaluated at
// theta = phi, the curvature of the negative log-density along each real
// coordinate is
//   f'' = kappa (r1 eps^2 + r2) / c - r1 r2 d^2,
// where kappa is 2 for the complex field and 1 for the real field and
// d = -(kappa eps^2 / c)(1 - 1/eps) phi_r is the broad component's
// log-density slope. Then psi = kappa / f'' and
// xi_r = phi_r - (psi / kappa) f'_r with f'_r = -r1 d.
template <typename Scalar>
TaylorResult<Scalar> taylor_approx(double pi_bwd, const Scalar& phi, double c, double epsilon) {
    using FT = field_traits<Scalar>;
    if (!(c > 0.0)) throw std::invalid_argument("taylor_approx: c must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("taylor_approx: epsilon must be positive");

    constexpr double kappa = FT::is_complex ? 2.0 : 1.0;
    const double e2 = epsilon * epsilon;

    // log responsibility ratio r1 / r2 at theta = phi. The mixing weights'
    // eps powers cancel against the component normalizers, leaving the prior
    // odds times exp(-kappa b / 2) with b = (eps^2/c) |(1 - 1/eps) phi|^2.
    const double shift2 = (e2 / c) * FT::abs2((1.0 - 1.0 / epsilon) * phi);
    double log_r1_ratio;
    if (pi_bwd <= 0.0) {
        log_r1_ratio = std::numeric_limits<double>::infinity();
    } else if (pi_bwd >= 1.0) {
        log_r1_ratio = -std::numeric_limits<double>::infinity();
    } else {
        log_r1_ratio = std::log1p(-pi_bwd) - std::log(pi_bwd) - 0.5 * kappa * shift2;
    }
    double r1;
    if (std::isinf(log_r1_ratio))
        r1 = log_r1_ratio > 0 ? 1.0 : 0.0;
    else
        r1 = 1.0 / (1.0 + std::exp(-log_r1_ratio));
    const double r2 = 1.0 - r1;

    const double d_r = -(kappa * e2 / c) * (1.0 - 1.0 / epsilon) * FT::real(phi);
    const double d_i = -(kappa * e2 / c) * (1.0 - 1.0 / epsilon) * FT::imag(phi);

    const double curvature = kappa * (r1 * e2 + r2) / c - r1 * r2 * d_r * d_r;
    const double psi = kappa / curvature;

    const double xi_r = FT::real(phi) - (psi / kappa) * (-r1 * d_r);
    const double xi_i = FT::imag(phi) - (psi / kappa) * (-r1 * d_i);
    return {FT::make(xi_r, FT::is_complex ? xi_i : 0.0), psi};
}

template <typename Scalar>
GaussianMsg<Scalar> taylor_approx_msg(double pi_bwd, const Scalar& phi, double c,
                                      double epsilon) {
    const auto r = taylor_approx(pi_bwd, phi, c, epsilon);
    return GaussianMsg<Scalar>::from_moments(r.xi, r.psi);
}

}  // namespace ampmmv
