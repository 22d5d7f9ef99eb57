// Independent reference computations for verification.
//
// Everything here deliberately avoids the algebra of the code paths it
// checks: posterior moments come from numerical quadrature of density
// products, smoother outputs from one-shot dense joint-Gaussian
// conditioning, and message collapses from finite differences of the
// mixture log-density.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "kalman.hpp"
#include "model.hpp"
#include "taylor.hpp"
#include "thresholding.hpp"

namespace ampmmv::oracle {

// ---------------------------------------------------------------------------
// Composite Gauss-Legendre quadrature
// ---------------------------------------------------------------------------

struct GaussLegendre {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;

    explicit GaussLegendre(int order = 16) {
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(order, order);
        for (int k = 1; k < order; ++k) {
            const double b = k / std::sqrt(4.0 * k * k - 1.0);
            jac(k - 1, k) = b;
            jac(k, k - 1) = b;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
        nodes.resize(order);
        weights.resize(order);
        for (int i = 0; i < order; ++i) {
            nodes[i] = es.eigenvalues()[i];
            weights[i] = 2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
        }
    }

    // Integral of f over [a, b] split into `panels` equal panels.
    double integrate(const std::function<double(double)>& f, double a, double b,
                     int panels = 48) const {
        const double h = (b - a) / panels;
        double acc = 0.0;
        for (int p = 0; p < panels; ++p) {
            const double lo = a + p * h;
            const double mid = lo + 0.5 * h;
            for (std::size_t i = 0; i < nodes.size(); ++i)
                acc += weights[i] * f(mid + 0.5 * h * nodes[i]);
        }
        return acc * 0.5 * h;
    }
};

// ---------------------------------------------------------------------------
// Spike-and-slab posterior moments by quadrature
// ---------------------------------------------------------------------------

template <typename Scalar>
struct SpikeSlabMoments {
    Scalar mean;
    double var;
    double p_active;  // posterior weight of the slab component
};

namespace detail {

// Moments of one real coordinate of the slab posterior, by quadrature of
// the density product N(x; xi, psi) N(phi; x, c).
struct Moments1d {
    double z, m1, m2;
};

inline Moments1d slab_moments_1d(const GaussLegendre& gl, double phi, double c, double xi,
                                 double psi) {
    const double center = (psi * phi + xi * c) / (psi + c);
    const double width = std::sqrt(psi * c / (psi + c));
    const double a = center - 13.0 * width, b = center + 13.0 * width;
    Moments1d m{};
    m.z = gl.integrate(
        [&](double x) {
            return std::exp(field_traits<double>::log_pdf(x, xi, psi) +
                            field_traits<double>::log_pdf(phi, x, c));
        },
        a, b);
    m.m1 = gl.integrate(
        [&](double x) {
            return x * std::exp(field_traits<double>::log_pdf(x, xi, psi) +
                                field_traits<double>::log_pdf(phi, x, c));
        },
        a, b);
    m.m2 = gl.integrate(
        [&](double x) {
            return x * x * std::exp(field_traits<double>::log_pdf(x, xi, psi) +
                                    field_traits<double>::log_pdf(phi, x, c));
        },
        a, b);
    return m;
}

}  // namespace detail

inline SpikeSlabMoments<double> spike_slab_moments(const GaussLegendre& gl, double phi, double c,
                                                   const LocalPrior<double>& prior) {
    const auto m = detail::slab_moments_1d(gl, phi, c, prior.xi, prior.psi);
    const double w0 = (1.0 - prior.pi) * std::exp(field_traits<double>::log_pdf(phi, 0.0, c));
    const double w1 = prior.pi * m.z;
    const double p1 = w1 / (w0 + w1);
    const double mean = p1 * (m.m1 / m.z);
    const double second = p1 * (m.m2 / m.z);
    return {mean, second - mean * mean, p1};
}

// Complex moments through the independent real/imaginary decomposition: the
// circular slab posterior factorizes into two real coordinates with halved
// variances.
inline SpikeSlabMoments<std::complex<double>> spike_slab_moments(
    const GaussLegendre& gl, std::complex<double> phi, double c,
    const LocalPrior<std::complex<double>>& prior) {
    const auto mr = detail::slab_moments_1d(gl, phi.real(), 0.5 * c, prior.xi.real(),
                                            0.5 * prior.psi);
    const auto mi = detail::slab_moments_1d(gl, phi.imag(), 0.5 * c, prior.xi.imag(),
                                            0.5 * prior.psi);
    const double w0 =
        (1.0 - prior.pi) *
        std::exp(field_traits<std::complex<double>>::log_pdf(phi, {0.0, 0.0}, c));
    const double w1 = prior.pi * mr.z * mi.z;
    const double p1 = w1 / (w0 + w1);
    const std::complex<double> mean{p1 * (mr.m1 / mr.z), p1 * (mi.m1 / mi.z)};
    const double second = p1 * (mr.m2 / mr.z + mi.m2 / mi.z);
    return {mean, second - std::norm(mean), p1};
}

// ---------------------------------------------------------------------------
// Mixture log-density of the repaired frame-to-amplitude message and its
// finite-difference collapse
// ---------------------------------------------------------------------------

// -log of (1 - Omega) pdf(theta; phi/eps, c/eps^2) + Omega pdf(theta; phi, c),
// with the field-consistent mixing weight.
template <typename Scalar>
double mixture_neg_log_density(const Scalar& theta, double pi_bwd, const Scalar& phi, double c,
                               double epsilon) {
    using FT = field_traits<Scalar>;
    const double om = omega_field<Scalar>(pi_bwd, epsilon);
    const double l1 = (om < 1.0 ? std::log1p(-om) : -std::numeric_limits<double>::infinity()) +
                      FT::log_pdf(theta, phi / epsilon, c / (epsilon * epsilon));
    const double l2 = (om > 0.0 ? std::log(om) : -std::numeric_limits<double>::infinity()) +
                      FT::log_pdf(theta, phi, c);
    const double hi = std::max(l1, l2);
    return -(hi + std::log(std::exp(l1 - hi) + std::exp(l2 - hi)));
}

template <typename Scalar>
TaylorResult<Scalar> taylor_by_finite_differences(double pi_bwd, const Scalar& phi, double c,
                                                  double epsilon) {
    using FT = field_traits<Scalar>;
    constexpr double kappa = FT::is_complex ? 2.0 : 1.0;
    const double h = 3e-4 * std::sqrt(c);
    const auto f = [&](double dr, double di) {
        return mixture_neg_log_density(
            FT::make(FT::real(phi) + dr, FT::imag(phi) + di), pi_bwd, phi, c, epsilon);
    };
    const double f0 = f(0.0, 0.0);
    const double d2 = (f(h, 0.0) - 2.0 * f0 + f(-h, 0.0)) / (h * h);
    const double d1r = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
    const double psi = kappa / d2;
    double xi_i = 0.0;
    if constexpr (FT::is_complex) {
        const double d1i = (f(0.0, h) - f(0.0, -h)) / (2.0 * h);
        xi_i = FT::imag(phi) - (psi / kappa) * d1i;
    }
    const double xi_r = FT::real(phi) - (psi / kappa) * d1r;
    return {FT::make(xi_r, xi_i), psi};
}

// ---------------------------------------------------------------------------
// Dense joint-Gaussian conditioning over the active amplitude chain
// ---------------------------------------------------------------------------

template <typename Scalar>
struct DenseChainResult {
    Matrix<Scalar> mean;      // K x T smoothed means
    Matrix<double> var;       // K x T smoothed variances
    Matrix<Scalar> post_cov;  // KT x KT posterior covariance, frame-major blocks
    double log_evidence = 0.0;

    // E[conj(theta_j^(t+1)) theta_j^(t)] from the joint posterior.
    Scalar lag1(int j, int t, int k) const {
        const int u = t * k + j, v = (t + 1) * k + j;
        return post_cov(u, v) + mean(j, t) * field_traits<Scalar>::conj(mean(j, t + 1));
    }
};

// Builds the stationary prior covariance sigma^2 (1-alpha)^|t-t'| I of the
// active chain, stacks the per-frame measurements, and conditions once.
template <typename Scalar>
DenseChainResult<Scalar> dense_chain_condition(const MmvProblem<Scalar>& problem,
                                               const std::vector<int>& active,
                                               const ModelParams& params) {
    using FT = field_traits<Scalar>;
    const int k = static_cast<int>(active.size());
    const int t_total = problem.t;
    const int m = problem.m;
    const int d = k * t_total;
    const int md = m * t_total;
    const double sigma2 = steady_state_variance(params);
    const Scalar zeta = params.zeta_as<Scalar>();

    Matrix<Scalar> prior_cov = Matrix<Scalar>::Zero(d, d);
    for (int t1 = 0; t1 < t_total; ++t1)
        for (int t2 = 0; t2 < t_total; ++t2) {
            const double cov = sigma2 * std::pow(1.0 - params.alpha, std::abs(t1 - t2));
            for (int j = 0; j < k; ++j) prior_cov(t1 * k + j, t2 * k + j) = Scalar(cov);
        }

    Matrix<Scalar> b = Matrix<Scalar>::Zero(md, d);
    Vector<Scalar> ybar(md);
    for (int t = 0; t < t_total; ++t) {
        const auto* a = problem.op(t).dense();
        if (!a) throw std::invalid_argument("dense_chain_condition requires explicit matrices");
        for (int j = 0; j < k; ++j) b.block(t * m, t * k + j, m, 1) = a->col(active[j]);
        ybar.segment(t * m, m) = problem.y[t];
    }

    const Vector<Scalar> prior_mean = Vector<Scalar>::Constant(d, zeta);
    Matrix<Scalar> s = b * prior_cov * b.adjoint();
    s.diagonal().array() += params.sigma_e2;
    Eigen::LDLT<Matrix<Scalar>> ldlt(s);

    const Vector<Scalar> innov = ybar - b * prior_mean;
    const Matrix<Scalar> cross = prior_cov * b.adjoint();  // d x md

    DenseChainResult<Scalar> out;
    const Vector<Scalar> mean_flat = prior_mean + cross * ldlt.solve(innov);
    out.post_cov = prior_cov - cross * ldlt.solve(cross.adjoint());
    out.mean.resize(k, t_total);
    out.var.resize(k, t_total);
    for (int t = 0; t < t_total; ++t)
        for (int j = 0; j < k; ++j) {
            out.mean(j, t) = mean_flat[t * k + j];
            out.var(j, t) = FT::real(out.post_cov(t * k + j, t * k + j));
        }

    double log_det = 0.0;
    for (int i = 0; i < md; ++i) log_det += std::log(FT::real(ldlt.vectorD()[i]));
    const double quad = FT::real(innov.adjoint().dot(ldlt.solve(innov)));
    if constexpr (FT::is_complex)
        out.log_evidence = -md * std::log(M_PI) - log_det - quad;
    else
        out.log_evidence = -0.5 * (md * std::log(2.0 * M_PI) + log_det + quad);
    return out;
}

// ---------------------------------------------------------------------------
// 1-d maximization for checking closed-form M-steps
// ---------------------------------------------------------------------------

inline double maximize_scalar(const std::function<double(double)>& f, double lo, double hi,
                              int iters = 300) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters && (b - a) > 1e-14 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a); fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a); fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace ampmmv::oracle
