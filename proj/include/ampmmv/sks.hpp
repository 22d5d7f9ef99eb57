// Support-aware Kalman smoother: exact MMSE estimation of the amplitudes and
// signals given the true support and true model parameters. Serves as the
// performance lower bound for every support-agnostic algorithm.
#pragma once

#include <cstdint>
#include <vector>

#include "kalman.hpp"
#include "model.hpp"

namespace ampmmv {

template <typename Scalar>
struct SksInput {
    const MmvProblem<Scalar>* problem = nullptr;
    std::vector<std::uint8_t> support;
    ModelParams params;
};

template <typename Scalar>
struct SksOutput {
    Matrix<Scalar> theta_hat;      // N x T smoothed amplitude means
    Matrix<double> theta_var;      // N x T smoothed variances
    Matrix<Scalar> x_hat;          // N x T, zero off-support exactly
    double log_evidence = 0.0;
    bool jitter_applied = false;
};

// Inactive coordinates are unobservable; they report the stationary prior
// (zeta, sigma^2) and contribute exact zeros to x_hat.
template <typename Scalar>
SksOutput<Scalar> sks_smooth(const SksInput<Scalar>& input) {
    const MmvProblem<Scalar>& prob = *input.problem;
    prob.validate();
    input.params.validate(prob.n);
    if (static_cast<int>(input.support.size()) != prob.n)
        throw std::invalid_argument("sks_smooth: support length mismatch");

    std::vector<int> active;
    for (int i = 0; i < prob.n; ++i)
        if (input.support[i]) active.push_back(i);

    const auto kf = kalman_smooth_active(prob, active, input.params, /*smooth=*/true);

    const double sigma2 = steady_state_variance(input.params);
    const Scalar zeta = input.params.template zeta_as<Scalar>();

    SksOutput<Scalar> out;
    out.log_evidence = kf.log_evidence;
    out.jitter_applied = kf.jitter_applied;
    out.theta_hat = Matrix<Scalar>::Constant(prob.n, prob.t, zeta);
    out.theta_var = Matrix<double>::Constant(prob.n, prob.t, sigma2);
    out.x_hat = Matrix<Scalar>::Zero(prob.n, prob.t);
    for (int t = 0; t < prob.t; ++t)
        for (std::size_t j = 0; j < active.size(); ++j) {
            out.theta_hat(active[j], t) = kf.smoothed_mean[t][static_cast<int>(j)];
            out.theta_var(active[j], t) = kf.smoothed_var[t][static_cast<int>(j)];
            out.x_hat(active[j], t) = kf.smoothed_mean[t][static_cast<int>(j)];
        }
    return out;
}

}  // namespace ampmmv
