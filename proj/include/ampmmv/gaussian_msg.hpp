// Directional Gaussian messages in precision form.
//
// Carrying (precision, precision-weighted mean) lets an uninformative
// message (infinite variance) be represented exactly as precision 0, which
// the chain boundaries and the alpha = 1 backward pass require.
#pragma once

#include <cmath>
#include <stdexcept>

#include "field.hpp"

namespace ampmmv {

template <typename Scalar>
struct GaussianMsg {
    double prec = 0.0;   // 1 / variance; 0 encodes an uninformative message
    Scalar pwm = Scalar(0);  // mean / variance; 0 whenever prec == 0

    static GaussianMsg uninformative() { return {0.0, Scalar(0)}; }

    static GaussianMsg from_moments(const Scalar& mean, double var) {
        if (!(var > 0.0)) throw std::invalid_argument("GaussianMsg: variance must be positive");
        if (std::isinf(var)) return uninformative();
        return {1.0 / var, mean / var};
    }

    bool informative() const { return prec > 0.0; }
    double variance() const { return 1.0 / prec; }  // +inf when uninformative
    Scalar mean() const { return informative() ? Scalar(pwm / prec) : Scalar(0); }
};

// Product of Gaussian densities: precisions and precision-weighted means add.
template <typename Scalar>
GaussianMsg<Scalar> fuse(const GaussianMsg<Scalar>& a, const GaussianMsg<Scalar>& b) {
    return {a.prec + b.prec, a.pwm + b.pwm};
}

template <typename Scalar>
GaussianMsg<Scalar> fuse(const GaussianMsg<Scalar>& a, const GaussianMsg<Scalar>& b,
                         const GaussianMsg<Scalar>& c) {
    return {a.prec + b.prec + c.prec, a.pwm + b.pwm + c.pwm};
}

// Pushes a belief about theta^(t) through the transition
//   theta^(t+1) = (1 - alpha) theta^(t) + alpha zeta + alpha w, w ~ N(0, rho):
//   mean' = (1 - alpha) mean + alpha zeta, var' = (1 - alpha)^2 var + alpha^2 rho.
// An uninformative input stays uninformative (precision 0) unless alpha = 1,
// in which case the output is the reset distribution (zeta, rho).
template <typename Scalar>
GaussianMsg<Scalar> propagate_forward(const GaussianMsg<Scalar>& belief, double alpha,
                                      const Scalar& zeta, double rho) {
    const double a = 1.0 - alpha;
    if (!belief.informative()) {
        if (alpha >= 1.0) return GaussianMsg<Scalar>::from_moments(zeta, rho);
        return GaussianMsg<Scalar>::uninformative();
    }
    const double var = a * a * belief.variance() + alpha * alpha * rho;
    const Scalar mean = a * belief.mean() + alpha * zeta;
    return GaussianMsg<Scalar>::from_moments(mean, var);
}

// Inverts the same transition to send a belief about theta^(t) backward to
// theta^(t-1): mean' = (mean - alpha zeta) / (1 - alpha),
// var' = (var + alpha^2 rho) / (1 - alpha)^2. At alpha = 1 the dynamics carry
// no information backward and the result is uninformative.
template <typename Scalar>
GaussianMsg<Scalar> propagate_backward(const GaussianMsg<Scalar>& belief, double alpha,
                                       const Scalar& zeta, double rho) {
    const double a = 1.0 - alpha;
    if (a <= 0.0 || !belief.informative()) return GaussianMsg<Scalar>::uninformative();
    const double var = (belief.variance() + alpha * alpha * rho) / (a * a);
    const Scalar mean = (belief.mean() - alpha * zeta) / a;
    return GaussianMsg<Scalar>::from_moments(mean, var);
}

}  // namespace ampmmv
