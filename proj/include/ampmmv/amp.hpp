// Approximate message passing over a single measurement frame.
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "linear_operator.hpp"
#include "thresholding.hpp"

namespace ampmmv {

struct AmpDiverged : std::runtime_error {
    explicit AmpDiverged(int iteration)
        : std::runtime_error("AMP diverged (non-finite state) at inner iteration " +
                             std::to_string(iteration)),
          iter(iteration) {}
    int iter;
};

template <typename Scalar>
struct AmpState {
    Vector<Scalar> z;       // residual, length M
    Vector<Scalar> mu;      // posterior means, length N
    Vector<double> v;       // posterior variances, length N
    Vector<Scalar> phi;     // pseudo-data, length N
    double c = 0.0;         // scalar message variance
    int iter = 0;           // inner iterations completed
};

struct AmpOptions {
    int max_iters = 25;
    double rel_change_tol = 1e-8;  // exit when ||dmu||^2 <= tol * ||mu||^2
    bool early_exit = true;
    double damping = 1.0;          // weight on the new iterate; 1 = undamped
};

namespace detail {

template <typename Scalar>
bool all_finite(const Vector<Scalar>& v) {
    return v.allFinite();
}

}  // namespace detail

// One frame of AMP with per-coefficient Bernoulli-Gaussian local priors:
//
//   phi = A^H z + mu
//   mu <- F(phi; c),  v <- G(phi; c)
//   c <- sigma_e2 + mean(v) N / M
//   z <- y - A mu + (z / M) sum_n F'(phi; c)
//
// Cold start: z = y, mu = 0, c = 100 sum_n psi_n. Pass `init` to warm-start
// from an earlier visit to the same frame.
template <typename Scalar>
AmpState<Scalar> run_amp(const Vector<Scalar>& y, const LinearOperator<Scalar>& op,
                         const std::vector<LocalPrior<Scalar>>& priors, double sigma_e2,
                         const AmpOptions& opt = {},
                         const std::optional<AmpState<Scalar>>& init = std::nullopt) {
    const int m = op.rows();
    const int n = op.cols();
    if (static_cast<int>(y.size()) != m || static_cast<int>(priors.size()) != n)
        throw std::invalid_argument("run_amp: dimension mismatch");
    if (opt.max_iters < 1) throw std::invalid_argument("run_amp: max_iters must be >= 1");

    AmpState<Scalar> st;
    if (init) {
        st = *init;
    } else {
        st.z = y;
        st.mu = Vector<Scalar>::Zero(n);
        st.v = Vector<double>::Zero(n);
        double psi_sum = 0.0;
        for (const auto& p : priors) psi_sum += p.psi;
        st.c = 100.0 * psi_sum;
    }
    st.phi.resize(n);
    st.iter = 0;

    const double inv_m = 1.0 / static_cast<double>(m);
    for (int i = 0; i < opt.max_iters; ++i) {
        st.phi = op.apply_adjoint(st.z) + st.mu;

        Vector<Scalar> mu_next(n);
        double v_sum = 0.0;
        double fp_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            mu_next[j] = f_threshold(st.phi[j], st.c, priors[j]);
            const double g = g_threshold(st.phi[j], st.c, priors[j]);
            st.v[j] = g;
            v_sum += g;
            fp_sum += g / st.c;
        }
        if (opt.damping < 1.0) mu_next = opt.damping * mu_next + (1.0 - opt.damping) * st.mu;

        const double c_next = std::max(sigma_e2 + inv_m * v_sum, 1e-300);
        const double c_new =
            opt.damping < 1.0 ? opt.damping * c_next + (1.0 - opt.damping) * st.c : c_next;

        const Vector<Scalar> z_next = y - op.apply(mu_next) + st.z * (inv_m * fp_sum);

        const double change = (mu_next - st.mu).squaredNorm();
        const double scale = st.mu.squaredNorm();

        st.mu = std::move(mu_next);
        st.z = z_next;
        st.c = c_new;
        st.iter = i + 1;

        if (!detail::all_finite(st.mu) || !detail::all_finite(st.z) || !std::isfinite(st.c))
            throw AmpDiverged(st.iter);

        if (opt.early_exit && i > 0 && change <= opt.rel_change_tol * scale) break;
    }
    return st;
}

}  // namespace ampmmv
