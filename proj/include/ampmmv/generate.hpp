// Synthetic instance generation under the joint-sparse Gauss-Markov model.
#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <tuple>

#include "model.hpp"
#include "rng.hpp"

namespace ampmmv {

template <typename Scalar>
struct GeneratedInstance {
    MmvProblem<Scalar> problem;
    GroundTruth<Scalar> truth;
    ModelParams params_used;  // sigma_e2 resolved from snr_db when requested
};

namespace detail {

// i.i.d. Gaussian matrix with columns rescaled to unit norm exactly.
template <typename Scalar>
Matrix<Scalar> draw_unit_column_matrix(int m, int n, Rng& rng) {
    Matrix<Scalar> a(m, n);
    const double v = 1.0 / static_cast<double>(m);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < m; ++i)
            a(i, j) = normal_draw<Scalar>::sample(rng, Scalar(0), v);
        a.col(j) /= a.col(j).norm();
    }
    return a;
}

}  // namespace detail

// Draws (support, amplitudes, matrices, noise) in a fixed order so that a
// given seed pins the signal independently of beta and of the noise level.
//
//   s_n ~ Bernoulli(lambda_n)             (or a uniform exact-K support)
//   theta_n^(1) ~ N(zeta, sigma^2)
//   theta_n^(t) = (1-alpha)(theta_n^(t-1) - zeta) + alpha w_n^(t) + zeta,
//                 w ~ N(0, rho)
//   x^(t) = s .* theta^(t)
//   A^(1) i.i.d. Gaussian, unit-norm columns; for t >= 2
//   A^(t) = (1-beta) A^(t-1) + beta U^(t), var(U) = (2-beta)/(beta M) so the
//   expected squared column norm stays exactly one
//   y^(t) = A^(t) x^(t) + e^(t), e ~ N(0, sigma_e2 I)
//
// When snr_db is set, sigma_e2 = sum_t ||A^(t)x^(t)||^2 / (T M 10^(snr/10)),
// computed from the realized signal.
template <typename Scalar>
GeneratedInstance<Scalar> generate_instance(const GenConfig& cfg) {
    using FT = field_traits<Scalar>;
    cfg.validate();
    if ((cfg.field == Field::Complex) != FT::is_complex)
        throw std::invalid_argument("generate_instance: scalar type does not match cfg.field");

    const int n = cfg.n, m = cfg.m, t = cfg.t;
    const ModelParams& p = cfg.params;
    const double sigma2 = steady_state_variance(p);
    const Scalar zeta = p.zeta_as<Scalar>();

    Rng rng(derive_seed(cfg.seed, 0x67656Eu));

    GeneratedInstance<Scalar> out;
    GroundTruth<Scalar>& truth = out.truth;

    // Support.
    truth.support.assign(n, 0);
    if (cfg.exact_k) {
        for (int idx : rng.sample_without_replacement(n, *cfg.exact_k)) truth.support[idx] = 1;
    } else {
        for (int i = 0; i < n; ++i) truth.support[i] = rng.bernoulli(p.lambda_at(i)) ? 1 : 0;
    }
    truth.k = 0;
    for (auto s : truth.support) truth.k += s;

    // Amplitude trajectories (defined for every index, active or not).
    truth.thetas.resize(n, t);
    for (int i = 0; i < n; ++i)
        truth.thetas(i, 0) = normal_draw<Scalar>::sample(rng, zeta, sigma2);
    for (int j = 1; j < t; ++j)
        for (int i = 0; i < n; ++i) {
            const Scalar w = normal_draw<Scalar>::sample(rng, Scalar(0), p.rho);
            truth.thetas(i, j) =
                (1.0 - p.alpha) * (truth.thetas(i, j - 1) - zeta) + p.alpha * w + zeta;
        }

    truth.signals.resize(n, t);
    for (int j = 0; j < t; ++j)
        for (int i = 0; i < n; ++i)
            truth.signals(i, j) = truth.support[i] ? truth.thetas(i, j) : Scalar(0);

    // Measurement operators.
    MmvProblem<Scalar>& prob = out.problem;
    prob.n = n;
    prob.m = m;
    prob.t = t;
    prob.ops.resize(t);
    if (cfg.matrix_kind == MatrixKind::ImplicitSrht) {
        auto first = std::make_shared<SrhtOperator<Scalar>>(m, n, derive_seed(cfg.seed, 0xA0u, 0));
        for (int j = 0; j < t; ++j) {
            if (cfg.beta == 0.0 || j == 0)
                prob.ops[j] = first;
            else
                prob.ops[j] = std::make_shared<SrhtOperator<Scalar>>(
                    m, n, derive_seed(cfg.seed, 0xA0u, static_cast<std::uint64_t>(j)));
        }
    } else {
        auto first =
            std::make_shared<DenseOperator<Scalar>>(detail::draw_unit_column_matrix<Scalar>(m, n, rng));
        prob.ops[0] = first;
        for (int j = 1; j < t; ++j) {
            if (cfg.beta == 0.0) {
                prob.ops[j] = prob.ops[0];
                continue;
            }
            const auto* prev = prob.ops[j - 1]->dense();
            Matrix<Scalar> next(m, n);
            const double vu = (2.0 - cfg.beta) / (cfg.beta * static_cast<double>(m));
            for (int c = 0; c < n; ++c)
                for (int r = 0; r < m; ++r)
                    next(r, c) = (1.0 - cfg.beta) * (*prev)(r, c) +
                                 cfg.beta * normal_draw<Scalar>::sample(rng, Scalar(0), vu);
            prob.ops[j] = std::make_shared<DenseOperator<Scalar>>(std::move(next));
        }
    }

    // Noise level, resolved from the realized SNR when requested.
    std::vector<Vector<Scalar>> clean(t);
    double signal_energy = 0.0;
    for (int j = 0; j < t; ++j) {
        clean[j] = prob.ops[j]->apply(truth.signals.col(j));
        signal_energy += clean[j].squaredNorm();
    }
    double sigma_e2 = p.sigma_e2;
    if (cfg.snr_db) {
        if (std::isinf(*cfg.snr_db))
            sigma_e2 = 0.0;
        else
            sigma_e2 = signal_energy /
                       (static_cast<double>(t) * static_cast<double>(m) *
                        std::pow(10.0, *cfg.snr_db / 10.0));
    }

    prob.y.resize(t);
    for (int j = 0; j < t; ++j) {
        prob.y[j] = clean[j];
        if (sigma_e2 > 0.0)
            for (int i = 0; i < m; ++i)
                prob.y[j][i] += normal_draw<Scalar>::sample(rng, Scalar(0), sigma_e2);
    }

    out.params_used = p;
    out.params_used.sigma_e2 = sigma_e2;
    return out;
}

}  // namespace ampmmv
