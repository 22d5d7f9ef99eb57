// Kalman filtering / RTS smoothing of the amplitude chain restricted to an
// active coordinate set, with the prediction-error log-evidence.
//
// Shared by the support-aware smoother and the exhaustive Bayes oracle.
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "field.hpp"
#include "model.hpp"

namespace ampmmv {

template <typename Scalar>
struct KalmanResult {
    std::vector<Vector<Scalar>> smoothed_mean;  // per frame, length K
    std::vector<Vector<double>> smoothed_var;   // per frame, diag of smoothed cov
    std::vector<Vector<double>> filtered_var;   // per frame, diag of filtered cov
    double log_evidence = 0.0;                  // log p(all y | active set)
    bool jitter_applied = false;                // innovation covariance regularized
};

namespace detail {

template <typename Scalar>
double gaussian_log_density(const Vector<Scalar>& v, const Matrix<Scalar>& chol_l) {
    // v is the innovation, chol_l the Cholesky factor of its covariance.
    using FT = field_traits<Scalar>;
    const int m = static_cast<int>(v.size());
    double log_det = 0.0;
    for (int i = 0; i < m; ++i) log_det += std::log(FT::real(chol_l(i, i)));
    log_det *= 2.0;
    const Vector<Scalar> w = chol_l.template triangularView<Eigen::Lower>().solve(v);
    const double quad = w.squaredNorm();
    if constexpr (FT::is_complex)
        return -m * std::log(M_PI) - log_det - quad;
    else
        return -0.5 * (m * std::log(2.0 * M_PI) + log_det + quad);
}

}  // namespace detail

// Forward filter + RTS smoother for
//   theta^(t) = (1-alpha) theta^(t-1) + alpha zeta 1 + alpha w^(t)
//   y^(t)     = A_S^(t) theta^(t) + e^(t)
// where A_S gathers the active columns of each frame's matrix.
//
// `smooth = false` computes the evidence only (no trajectory storage).
template <typename Scalar>
KalmanResult<Scalar> kalman_smooth_active(const MmvProblem<Scalar>& problem,
                                          const std::vector<int>& active,
                                          const ModelParams& params, bool smooth = true) {
    const int k = static_cast<int>(active.size());
    const int m = problem.m;
    const int t_total = problem.t;
    const double sigma2 = steady_state_variance(params);
    const Scalar zeta = params.zeta_as<Scalar>();
    const double a = 1.0 - params.alpha;
    const double q = params.alpha * params.alpha * params.rho;

    KalmanResult<Scalar> out;

    if (k == 0) {
        // Nothing observed: the evidence is the pure-noise likelihood.
        for (int t = 0; t < t_total; ++t)
            for (int i = 0; i < m; ++i)
                out.log_evidence += field_traits<Scalar>::log_pdf(
                    problem.y[t][i], Scalar(0), std::max(params.sigma_e2, 1e-300));
        if (smooth) {
            out.smoothed_mean.assign(t_total, Vector<Scalar>());
            out.smoothed_var.assign(t_total, Vector<double>());
            out.filtered_var.assign(t_total, Vector<double>());
        }
        return out;
    }

    std::vector<Matrix<Scalar>> a_s(t_total);
    for (int t = 0; t < t_total; ++t) {
        const auto* dense = problem.op(t).dense();
        if (!dense)
            throw std::invalid_argument("kalman_smooth_active requires explicit matrices");
        a_s[t].resize(m, k);
        for (int j = 0; j < k; ++j) a_s[t].col(j) = dense->col(active[j]);
    }

    Vector<Scalar> mean = Vector<Scalar>::Constant(k, zeta);
    Matrix<Scalar> cov = sigma2 * Matrix<Scalar>::Identity(k, k);

    std::vector<Vector<Scalar>> mean_pred(t_total), mean_filt(t_total);
    std::vector<Matrix<Scalar>> cov_pred(t_total), cov_filt(t_total);

    for (int t = 0; t < t_total; ++t) {
        if (t > 0) {
            mean = a * mean + Vector<Scalar>::Constant(k, params.alpha * zeta);
            cov = (a * a) * cov + q * Matrix<Scalar>::Identity(k, k);
        }
        mean_pred[t] = mean;
        cov_pred[t] = cov;

        const Matrix<Scalar> ap = a_s[t] * cov;  // M x K
        Matrix<Scalar> s = ap * a_s[t].adjoint();
        s.diagonal().array() += params.sigma_e2;

        Eigen::LLT<Matrix<Scalar>> llt(s);
        if (llt.info() != Eigen::Success) {
            const double jitter = 1e-12 * (1.0 + std::abs(s.real().trace()) / m);
            s.diagonal().array() += jitter;
            llt.compute(s);
            out.jitter_applied = true;
            if (llt.info() != Eigen::Success)
                throw std::runtime_error("kalman_smooth_active: innovation covariance not PD");
        }

        const Vector<Scalar> innov = problem.y[t] - a_s[t] * mean;
        out.log_evidence += detail::gaussian_log_density<Scalar>(innov, Matrix<Scalar>(llt.matrixL()));

        // mean += P A^H S^-1 innov;  P -= P A^H S^-1 A P
        const Matrix<Scalar> gain = llt.solve(ap).adjoint();  // K x M
        mean += gain * innov;
        cov -= gain * ap;
        cov = Scalar(0.5) * (cov + Matrix<Scalar>(cov.adjoint()));  // keep Hermitian

        mean_filt[t] = mean;
        cov_filt[t] = cov;
    }

    if (!smooth) return out;

    // Backward RTS recursion.
    out.filtered_var.resize(t_total);
    for (int t = 0; t < t_total; ++t) out.filtered_var[t] = cov_filt[t].diagonal().real();
    out.smoothed_mean.resize(t_total);
    out.smoothed_var.resize(t_total);
    Vector<Scalar> ms = mean_filt[t_total - 1];
    Matrix<Scalar> ps = cov_filt[t_total - 1];
    out.smoothed_mean[t_total - 1] = ms;
    out.smoothed_var[t_total - 1] = ps.diagonal().real();
    for (int t = t_total - 2; t >= 0; --t) {
        Eigen::LDLT<Matrix<Scalar>> ldlt(cov_pred[t + 1]);
        const Matrix<Scalar> gain = Matrix<Scalar>(ldlt.solve(cov_filt[t])).adjoint() * a;
        ms = mean_filt[t] + gain * (ms - mean_pred[t + 1]);
        ps = cov_filt[t] + gain * (ps - cov_pred[t + 1]) * gain.adjoint();
        ps = Scalar(0.5) * (ps + Matrix<Scalar>(ps.adjoint()));
        out.smoothed_mean[t] = ms;
        out.smoothed_var[t] = ps.diagonal().real();
    }
    return out;
}

}  // namespace ampmmv
