// Posterior summaries produced by the solver and consumed by EM and metrics.
#pragma once

#include <Eigen/Dense>

#include "linear_operator.hpp"

namespace ampmmv {

template <typename Scalar>
struct PosteriorSummary {
    Matrix<Scalar> x_mean;      // N x T, E[x | all observations]
    Matrix<double> x_var;       // N x T
    Vector<double> s_post;      // N, p(s_n = 1 | all observations)
    Matrix<Scalar> theta_mean;  // N x T, smoothed amplitude means
    Matrix<double> theta_var;   // N x T
    // N x (T-1); column j holds E[conj(theta^(j+1)) theta^(j)] (0-based frames).
    Matrix<Scalar> theta_lag1;
};

}  // namespace ampmmv
