// Expectation-maximization updates for the model hyperparameters.
//
// The M-step closed forms are exact coordinate maximizers of the expected
// complete-data log-likelihood assembled from the smoothed posterior
// moments. The alpha and rho updates are never applied on the same
// iteration: the two are coupled through var(theta^(t)|theta^(t-1)) =
// alpha^2 rho and joint updates oscillate.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "model.hpp"
#include "summary.hpp"

namespace ampmmv {

struct EmConfig {
    bool learn_lambda = true;
    bool learn_zeta = true;
    bool learn_alpha_rho = true;
    bool learn_sigma_e2 = true;
};

struct EmState {
    ModelParams params;
    int iter = 0;
    std::vector<ModelParams> history;  // params after each applied step
};

// Sufficient statistics of the amplitude chain posteriors. Sums run over all
// coefficients and transitions t = 2..T.
struct ChainMoments {
    int n = 0, t = 0;
    double sum_e_tt = 0.0;           // sum of E|theta^(t)|^2, t >= 2
    double sum_e_prev = 0.0;         // sum of E|theta^(t-1)|^2, t >= 2
    double sum_re_lag1 = 0.0;        // sum of Re E[theta^(t)* theta^(t-1)]
    std::complex<double> sum_mu_t{0.0, 0.0};     // sum of smoothed means, t >= 2
    std::complex<double> sum_mu_prev{0.0, 0.0};  // sum of smoothed means, t <= T-1
    std::complex<double> sum_mu_1{0.0, 0.0};     // sum of first-frame means
    double sum_e_11 = 0.0;           // sum of E|theta^(1)|^2

    long transitions() const { return static_cast<long>(n) * (t - 1); }
};

template <typename Scalar>
ChainMoments chain_moments(const PosteriorSummary<Scalar>& post) {
    using FT = field_traits<Scalar>;
    ChainMoments cm;
    cm.n = static_cast<int>(post.theta_mean.rows());
    cm.t = static_cast<int>(post.theta_mean.cols());
    for (int i = 0; i < cm.n; ++i) {
        const Scalar mu1 = post.theta_mean(i, 0);
        cm.sum_mu_1 += std::complex<double>(FT::real(mu1), FT::imag(mu1));
        cm.sum_e_11 += post.theta_var(i, 0) + FT::abs2(mu1);
    }
    for (int j = 1; j < cm.t; ++j)
        for (int i = 0; i < cm.n; ++i) {
            const Scalar mt = post.theta_mean(i, j);
            const Scalar mp = post.theta_mean(i, j - 1);
            cm.sum_e_tt += post.theta_var(i, j) + FT::abs2(mt);
            cm.sum_e_prev += post.theta_var(i, j - 1) + FT::abs2(mp);
            cm.sum_re_lag1 += FT::real(post.theta_lag1(i, j - 1));
            cm.sum_mu_t += std::complex<double>(FT::real(mt), FT::imag(mt));
            cm.sum_mu_prev += std::complex<double>(FT::real(mp), FT::imag(mp));
        }
    return cm;
}

namespace detail {

// Centered second moments of u = theta - zeta.
struct CenteredMoments {
    double s0, s1, s2;  // sum E|u_t|^2, sum Re E[u_t* u_{t-1}], sum E|u_{t-1}|^2
};

inline CenteredMoments center(const ChainMoments& cm, std::complex<double> zeta) {
    const double z2 = std::norm(zeta);
    const double nt1 = static_cast<double>(cm.transitions());
    CenteredMoments out;
    out.s0 = cm.sum_e_tt - 2.0 * std::real(std::conj(zeta) * cm.sum_mu_t) + nt1 * z2;
    out.s2 = cm.sum_e_prev - 2.0 * std::real(std::conj(zeta) * cm.sum_mu_prev) + nt1 * z2;
    out.s1 = cm.sum_re_lag1 - std::real(std::conj(zeta) * cm.sum_mu_t) -
             std::real(std::conj(zeta) * cm.sum_mu_prev) + nt1 * z2;
    return out;
}

// Expected transition energy sum E|u_t - (1-alpha) u_{t-1}|^2.
inline double transition_energy(const CenteredMoments& m, double alpha) {
    const double a = 1.0 - alpha;
    return m.s0 - 2.0 * a * m.s1 + a * a * m.s2;
}

// Coordinate objective in alpha (up to field-dependent positive scale):
//   Q(alpha) = -2 N(T-1) log alpha - transition_energy(alpha) / (alpha^2 rho).
inline double q_alpha(double alpha, const CenteredMoments& m, double nt1, double rho) {
    return -2.0 * nt1 * std::log(alpha) - transition_energy(m, alpha) / (alpha * alpha * rho);
}

inline double golden_section_max(double lo, double hi, const std::function<double(double)>& f) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
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

}  // namespace detail

// lambda <- (1/N) sum_n E[s_n | observations], with compensated summation.
template <typename Scalar>
double em_update_lambda(const PosteriorSummary<Scalar>& post) {
    const int n = static_cast<int>(post.s_post.size());
    double sum = 0.0, comp = 0.0;
    for (int i = 0; i < n; ++i) {
        const double y = post.s_post[i] - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    const double lam = sum / static_cast<double>(n);
    return std::clamp(lam, 0.0, 1.0 - 1e-9);
}

// zeta <- (N(T-1)/rho + N/sigma^2)^-1 ( (1/sigma^2) sum_n mu~_n^(1)
//           + sum_{t>=2,n} (mu~^(t) - (1-alpha) mu~^(t-1)) / (alpha rho) ).
template <typename Scalar>
Scalar em_update_zeta(const PosteriorSummary<Scalar>& post, const ModelParams& params) {
    using FT = field_traits<Scalar>;
    const ChainMoments cm = chain_moments(post);
    const double sigma2 = steady_state_variance(params);
    const double nt1 = static_cast<double>(cm.transitions());
    const double denom = nt1 / params.rho + static_cast<double>(cm.n) / sigma2;
    std::complex<double> numer = cm.sum_mu_1 / sigma2;
    if (cm.t > 1)
        numer += (cm.sum_mu_t - (1.0 - params.alpha) * cm.sum_mu_prev) /
                 (params.alpha * params.rho);
    const std::complex<double> z = numer / denom;
    return FT::make(z.real(), FT::is_complex ? z.imag() : 0.0);
}

// alpha <- nonnegative root of N(T-1) rho alpha^2 - (rho b/2) alpha - rho c/2,
// i.e. (b + sqrt(b^2 + 8 N(T-1) c)) / (4 N(T-1)) with
//   b = (2/rho) sum [Re E[theta^(t)* theta^(t-1)] - Re{(mu~^(t)-mu~^(t-1))* zeta}
//                     - v~^(t-1) - |mu~^(t-1)|^2]
//   c = (2/rho) sum E|theta^(t) - theta^(t-1)|^2 >= 0.
// Falls back to a 1-d numeric maximization when noisy moments make the
// discriminant negative. Result projected into [1e-6, 1].
template <typename Scalar>
double em_update_alpha(const PosteriorSummary<Scalar>& post, const ModelParams& params) {
    const ChainMoments cm = chain_moments(post);
    if (cm.t < 2) throw std::invalid_argument("alpha not identifiable from a single frame");
    const auto m = detail::center(cm, params.zeta);
    const double nt1 = static_cast<double>(cm.transitions());
    const double b = (2.0 / params.rho) * (m.s1 - m.s2);
    const double c = (2.0 / params.rho) * (m.s0 - 2.0 * m.s1 + m.s2);
    const double disc = b * b + 8.0 * nt1 * c;
    double alpha;
    if (disc >= 0.0) {
        alpha = (b + std::sqrt(disc)) / (4.0 * nt1);
    } else {
        alpha = detail::golden_section_max(
            1e-6, 1.0, [&](double a) { return detail::q_alpha(a, m, nt1, params.rho); });
    }
    return std::clamp(alpha, 1e-6, 1.0);
}

// rho <- sum E|theta^(t) - (1-alpha) theta^(t-1) - alpha zeta|^2 / (alpha^2 N(T-1)),
// floored at 1e-12. The previous-frame energy carries the squared factor
// (1 - alpha)^2 of the quadratic expansion.
template <typename Scalar>
double em_update_rho(const PosteriorSummary<Scalar>& post, const ModelParams& params) {
    const ChainMoments cm = chain_moments(post);
    if (cm.t < 2) throw std::invalid_argument("rho not identifiable from a single frame");
    if (!(params.alpha > 0.0))
        throw std::invalid_argument("rho not identifiable under perfect correlation");
    const auto m = detail::center(cm, params.zeta);
    const double nt1 = static_cast<double>(cm.transitions());
    const double rho = detail::transition_energy(m, params.alpha) /
                       (params.alpha * params.alpha * nt1);
    return std::max(rho, 1e-12);
}

// sigma_e2 <- (1/TM) ( sum_t ||y^(t) - A^(t) mu^(t)||^2 + sum_t 1^T v^(t) ),
// exact for unit-norm measurement columns.
template <typename Scalar>
double em_update_sigma_e2(const MmvProblem<Scalar>& problem,
                          const PosteriorSummary<Scalar>& post) {
    double acc = 0.0;
    for (int j = 0; j < problem.t; ++j) {
        const Vector<Scalar> resid = problem.y[j] - problem.op(j).apply(post.x_mean.col(j));
        acc += resid.squaredNorm() + post.x_var.col(j).sum();
    }
    const double s = acc / (static_cast<double>(problem.t) * static_cast<double>(problem.m));
    return std::max(s, 1e-12);
}

// One Gauss-Seidel step. alpha is refreshed on even iterations and rho on
// odd ones; lambda, zeta and sigma_e2 every time.
template <typename Scalar>
void em_step(const MmvProblem<Scalar>& problem, const PosteriorSummary<Scalar>& post,
             EmState& state, const EmConfig& cfg = {}) {
    ModelParams& p = state.params;
    if (cfg.learn_lambda) p.set_lambda(em_update_lambda(post));
    if (cfg.learn_zeta) {
        const Scalar z = em_update_zeta<Scalar>(post, p);
        p.zeta = {field_traits<Scalar>::real(z), field_traits<Scalar>::imag(z)};
    }
    if (cfg.learn_sigma_e2) p.sigma_e2 = em_update_sigma_e2(problem, post);
    if (cfg.learn_alpha_rho && problem.t >= 2) {
        if (state.iter % 2 == 0)
            p.alpha = em_update_alpha<Scalar>(post, p);
        else
            p.rho = em_update_rho<Scalar>(post, p);
    }
    ++state.iter;
    state.history.push_back(p);
}

// Agnostic initialization from sample statistics of the measurements:
// sigma_e2 = 1e-3, lambda = M/2N, zeta = 0, stationary variance from the
// average measurement energy, alpha = 0.1 with rho matching that variance.
template <typename Scalar>
ModelParams em_default_init(const MmvProblem<Scalar>& problem) {
    ModelParams p;
    p.sigma_e2 = 1e-3;
    const double lam0 =
        std::clamp(0.5 * static_cast<double>(problem.m) / static_cast<double>(problem.n),
                   1e-3, 1.0 - 1e-3);
    p.set_lambda(lam0);
    p.zeta = {0.0, 0.0};
    double frob2 = 0.0;
    if (const auto* a = problem.op(0).dense())
        frob2 = a->squaredNorm();
    else
        frob2 = static_cast<double>(problem.n);  // unit-norm columns
    double energy = 0.0;
    for (int j = 0; j < problem.t; ++j) energy += problem.y[j].squaredNorm();
    energy /= static_cast<double>(problem.t);
    const double sigma2_0 =
        std::max((energy - problem.m * p.sigma_e2) / (frob2 * lam0), 1e-3);
    p.alpha = 0.1;
    p.rho = rho_for_stationary_variance(sigma2_0, p.alpha);
    return p;
}

}  // namespace ampmmv
