// Probabilistic model parameters and problem/data containers.
#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"
#include "linear_operator.hpp"

namespace ampmmv {

// Hyperparameter set {lambda, zeta, alpha, rho, sigma_e2}.
//
//   lambda   : per-coefficient activity probabilities, each in [0, 1)
//   zeta     : amplitude process mean (imaginary part zero for real problems)
//   alpha    : temporal innovation rate in [0, 1]; correlation is 1 - alpha
//   rho      : perturbation variance, > 0
//   sigma_e2 : measurement noise variance, >= 0
struct ModelParams {
    std::vector<double> lambda;  // size 1 == broadcast to all indices
    std::complex<double> zeta{0.0, 0.0};
    double alpha = 0.1;
    double rho = 1.0;
    double sigma_e2 = 1e-3;

    double lambda_at(int n) const {
        return lambda.size() == 1 ? lambda[0] : lambda.at(static_cast<std::size_t>(n));
    }

    void set_lambda(double l) { lambda.assign(1, l); }

    void validate(int n_expected = -1) const {
        if (lambda.empty()) throw std::invalid_argument("lambda is empty");
        if (n_expected > 0 && lambda.size() != 1 &&
            lambda.size() != static_cast<std::size_t>(n_expected))
            throw std::invalid_argument("lambda size does not match N");
        for (double l : lambda)
            if (!(l >= 0.0 && l < 1.0))
                throw std::invalid_argument("lambda entries must lie in [0, 1)");
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw std::invalid_argument("alpha must lie in [0, 1]");
        if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
        if (!(sigma_e2 >= 0.0)) throw std::invalid_argument("sigma_e2 must be nonnegative");
    }

    template <typename Scalar> Scalar zeta_as() const {
        return field_traits<Scalar>::make(zeta.real(), zeta.imag());
    }
};

// Stationary variance alpha*rho/(2 - alpha) of the amplitude process.
inline double steady_state_variance(const ModelParams& p) {
    if (!(p.alpha > 0.0))
        throw std::invalid_argument(
            "degenerate perfectly-correlated process: stationary variance undefined at alpha = 0");
    if (!(p.rho > 0.0)) throw std::invalid_argument("rho must be positive");
    return p.alpha * p.rho / (2.0 - p.alpha);
}

// rho solving steady_state_variance == sigma2 for the given alpha.
inline double rho_for_stationary_variance(double sigma2, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    return sigma2 * (2.0 - alpha) / alpha;
}

enum class MatrixKind { DenseIidGaussian, ImplicitSrht };

inline std::string matrix_kind_to_name(MatrixKind k) {
    return k == MatrixKind::DenseIidGaussian ? "dense" : "implicit";
}

inline MatrixKind matrix_kind_from_name(const std::string& s) {
    if (s == "dense") return MatrixKind::DenseIidGaussian;
    if (s == "implicit") return MatrixKind::ImplicitSrht;
    throw std::invalid_argument("unknown matrix kind: " + s);
}

// T measurement frames. A matrix common to all frames is stored once and
// referenced T times.
template <typename Scalar>
struct MmvProblem {
    int n = 0, m = 0, t = 0;
    std::vector<std::shared_ptr<const LinearOperator<Scalar>>> ops;  // size t
    std::vector<Vector<Scalar>> y;                                   // size t, each length m

    const LinearOperator<Scalar>& op(int frame) const { return *ops.at(frame); }

    bool shared_matrix() const {
        for (int i = 1; i < t; ++i)
            if (ops[i] != ops[0]) return false;
        return true;
    }

    void validate() const {
        if (n < 1 || m < 1 || t < 1) throw std::invalid_argument("dims must be positive");
        if (static_cast<int>(ops.size()) != t || static_cast<int>(y.size()) != t)
            throw std::invalid_argument("frame count mismatch");
        for (int i = 0; i < t; ++i) {
            if (ops[i]->rows() != m || ops[i]->cols() != n)
                throw std::invalid_argument("operator shape mismatch at frame " +
                                            std::to_string(i));
            if (static_cast<int>(y[i].size()) != m)
                throw std::invalid_argument("observation length mismatch at frame " +
                                            std::to_string(i));
        }
    }
};

template <typename Scalar>
struct GroundTruth {
    std::vector<std::uint8_t> support;  // length n
    Matrix<Scalar> thetas;              // n x t
    Matrix<Scalar> signals;             // n x t, signals = diag(support) * thetas
    int k = 0;
};

struct GenConfig {
    ModelParams params;
    int n = 0, m = 0, t = 1;
    std::optional<double> snr_db;      // overrides params.sigma_e2 when set
    std::optional<int> exact_k;        // fixed-cardinality support instead of Bernoulli draws
    double beta = 0.0;                 // measurement matrix innovation rate in [0, 1]
    MatrixKind matrix_kind = MatrixKind::DenseIidGaussian;
    Field field = Field::Real;
    std::uint64_t seed = 0;

    void validate() const {
        params.validate(n);
        if (n < 1 || m < 1 || t < 1) throw std::invalid_argument("dims must be positive");
        if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
        if (exact_k && (*exact_k < 0 || *exact_k > n))
            throw std::invalid_argument("exact_k out of range");
        if (matrix_kind == MatrixKind::ImplicitSrht && beta > 0.0 && beta < 1.0)
            throw std::invalid_argument(
                "implicit operators support beta = 0 (shared) or beta = 1 (independent) only");
    }
};

// Density of the marginal spike-and-slab prior
//   p(x_n) = (1 - lambda_n) delta(x_n) + lambda_n N(x_n; zeta, sigma^2).
// The point mass is reported separately; `continuous` is the slab density
// at x. Exposed for test oracles.
template <typename Scalar>
struct SpikeSlabDensity {
    double point_mass_at_zero;
    double continuous;
};

template <typename Scalar>
SpikeSlabDensity<Scalar> spike_slab_prior_density(const Scalar& x, const ModelParams& p, int n) {
    const double lam = p.lambda_at(n);
    const double sigma2 = steady_state_variance(p);
    const double slab =
        lam * std::exp(field_traits<Scalar>::log_pdf(x, p.zeta_as<Scalar>(), sigma2));
    return {1.0 - lam, slab};
}

}  // namespace ampmmv
