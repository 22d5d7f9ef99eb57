// Exhaustive Bayes oracle for small instances: enumerate every support
// pattern, weight by prior times Gaussian evidence, and mix the conditional
// MMSE estimates. Ground truth for validating the message-passing solver.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "kalman.hpp"
#include "model.hpp"

namespace ampmmv {

struct EnumerateOptions {
    int max_n = 18;
    // Supports whose posterior log-weight trails the best by more than this
    // are skipped in the mixing pass; their total mass is below 2^18 e^-46.
    double log_weight_cutoff = 46.0;
};

template <typename Scalar>
struct EnumResult {
    Matrix<Scalar> x_mmse;             // N x T exact posterior means
    Vector<double> support_post;       // p(s_n = 1 | all observations)
    std::vector<double> log_evidence;  // log p(y | support), 2^N entries
    std::vector<double> log_weight;    // normalized log posterior of each support
};

template <typename Scalar>
EnumResult<Scalar> enumerate_mmse(const MmvProblem<Scalar>& problem, const ModelParams& params,
                                  const EnumerateOptions& opt = {}) {
    problem.validate();
    params.validate(problem.n);
    const int n = problem.n;
    if (n > opt.max_n)
        throw std::invalid_argument("enumerate_mmse: N = " + std::to_string(n) +
                                    " exceeds the enumeration cap " + std::to_string(opt.max_n));

    const std::size_t count = std::size_t{1} << n;
    std::vector<double> log_prior(count), log_joint(count);
    EnumResult<Scalar> out;
    out.log_evidence.resize(count);

    // Per-index prior log-odds, with exact-certainty patterns short-circuited.
    std::vector<double> lp_on(n), lp_off(n);
    for (int i = 0; i < n; ++i) {
        const double lam = params.lambda_at(i);
        lp_on[i] = lam > 0.0 ? std::log(lam) : -std::numeric_limits<double>::infinity();
        lp_off[i] = lam < 1.0 ? std::log1p(-lam) : -std::numeric_limits<double>::infinity();
    }

    std::vector<int> active;
    active.reserve(n);
    for (std::size_t mask = 0; mask < count; ++mask) {
        double lp = 0.0;
        active.clear();
        for (int i = 0; i < n; ++i) {
            if (mask & (std::size_t{1} << i)) {
                lp += lp_on[i];
                active.push_back(i);
            } else {
                lp += lp_off[i];
            }
        }
        log_prior[mask] = lp;
        if (std::isinf(lp)) {
            out.log_evidence[mask] = -std::numeric_limits<double>::infinity();
            log_joint[mask] = -std::numeric_limits<double>::infinity();
            continue;
        }
        const auto kf = kalman_smooth_active(problem, active, params, /*smooth=*/false);
        out.log_evidence[mask] = kf.log_evidence;
        log_joint[mask] = lp + kf.log_evidence;
    }

    // Normalize with a reproducible reduction: exponentials summed in
    // ascending order of magnitude.
    const double lmax = *std::max_element(log_joint.begin(), log_joint.end());
    std::vector<double> shifted(log_joint);
    for (double& v : shifted) v -= lmax;
    std::vector<double> terms(shifted);
    std::sort(terms.begin(), terms.end());
    double z = 0.0;
    for (double lt : terms)
        if (!std::isinf(lt)) z += std::exp(lt);
    const double log_z = std::log(z);

    out.log_weight.resize(count);
    for (std::size_t mask = 0; mask < count; ++mask) out.log_weight[mask] = shifted[mask] - log_z;

    out.support_post = Vector<double>::Zero(n);
    for (std::size_t mask = 0; mask < count; ++mask) {
        const double w = std::exp(out.log_weight[mask]);
        if (w == 0.0) continue;
        for (int i = 0; i < n; ++i)
            if (mask & (std::size_t{1} << i)) out.support_post[i] += w;
    }

    // Mix the conditional MMSE estimates of the non-negligible supports.
    out.x_mmse = Matrix<Scalar>::Zero(n, problem.t);
    for (std::size_t mask = 0; mask < count; ++mask) {
        if (out.log_weight[mask] < -opt.log_weight_cutoff) continue;
        const double w = std::exp(out.log_weight[mask]);
        active.clear();
        for (int i = 0; i < n; ++i)
            if (mask & (std::size_t{1} << i)) active.push_back(i);
        if (active.empty()) continue;
        const auto kf = kalman_smooth_active(problem, active, params, /*smooth=*/true);
        for (int t = 0; t < problem.t; ++t)
            for (std::size_t j = 0; j < active.size(); ++j)
                out.x_mmse(active[j], t) += w * kf.smoothed_mean[t][static_cast<int>(j)];
    }
    return out;
}

}  // namespace ampmmv
