#include <gtest/gtest.h>

#include <ampmmv/generate.hpp>
#include <ampmmv/model.hpp>
#include <cmath>

using namespace ampmmv;

namespace {

ModelParams base_params(double lambda = 0.2, double alpha = 0.1) {
    ModelParams p;
    p.set_lambda(lambda);
    p.alpha = alpha;
    p.rho = rho_for_stationary_variance(1.0, alpha);
    p.sigma_e2 = 1e-3;
    return p;
}

}  // namespace

TEST(SteadyStateVariance, ClosedForm) {
    ModelParams p = base_params();
    p.alpha = 1.0;
    p.rho = 2.0;
    EXPECT_DOUBLE_EQ(steady_state_variance(p), 2.0);  // reduces to rho

    p.alpha = 2.0 / 3.0;
    p.rho = 1.0;
    EXPECT_NEAR(steady_state_variance(p), 0.5, 1e-15);
}

TEST(SteadyStateVariance, RoundTripThroughInverse) {
    ModelParams p = base_params();
    p.alpha = 0.10;
    p.rho = rho_for_stationary_variance(1.0, 0.10);
    EXPECT_DOUBLE_EQ(p.rho, 19.0);
    EXPECT_NEAR(steady_state_variance(p), 1.0, 1e-15);
}

TEST(SteadyStateVariance, DegenerateAlphaZero) {
    ModelParams p = base_params();
    p.alpha = 0.0;
    EXPECT_THROW(steady_state_variance(p), std::invalid_argument);
}

TEST(ModelParams, Validation) {
    ModelParams p = base_params();
    EXPECT_NO_THROW(p.validate());

    p.set_lambda(1.0);  // strict lambda < 1
    EXPECT_THROW(p.validate(), std::invalid_argument);

    p = base_params();
    p.rho = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);

    p = base_params();
    p.alpha = 1.5;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(SpikeSlabDensity, Limits) {
    ModelParams p = base_params(0.0);
    const auto d0 = spike_slab_prior_density(0.3, p, 0);
    EXPECT_DOUBLE_EQ(d0.point_mass_at_zero, 1.0);
    EXPECT_DOUBLE_EQ(d0.continuous, 0.0);

    p.set_lambda(1.0 - 1e-12);  // approaching the pure Gaussian
    p.zeta = {0.0, 0.0};
    const auto d1 = spike_slab_prior_density(0.0, p, 0);
    EXPECT_NEAR(d1.continuous, 1.0 / std::sqrt(2.0 * M_PI), 1e-9);
}

TEST(SpikeSlabDensity, ContinuousPartAtZero) {
    ModelParams p = base_params(0.5);
    p.zeta = {0.0, 0.0};
    // stationary variance 1: slab density at zero is 0.5 / sqrt(2 pi)
    const auto d = spike_slab_prior_density(0.0, p, 0);
    EXPECT_NEAR(d.continuous, 0.19947114020071635, 1e-12);
    EXPECT_DOUBLE_EQ(d.point_mass_at_zero, 0.5);
}

TEST(Generate, SignalSupportConsistency) {
    GenConfig cfg;
    cfg.n = 64;
    cfg.m = 32;
    cfg.t = 5;
    cfg.params = base_params(0.25);
    cfg.seed = 11;
    const auto inst = generate_instance<double>(cfg);
    EXPECT_EQ(inst.truth.k,
              static_cast<int>(std::count(inst.truth.support.begin(),
                                          inst.truth.support.end(), 1)));
    for (int t = 0; t < cfg.t; ++t)
        for (int i = 0; i < cfg.n; ++i) {
            if (inst.truth.support[i])
                EXPECT_EQ(inst.truth.signals(i, t), inst.truth.thetas(i, t));
            else
                EXPECT_EQ(inst.truth.signals(i, t), 0.0);
        }
}

TEST(Generate, UnitColumnNormsFirstFrame) {
    GenConfig cfg;
    cfg.n = 200;
    cfg.m = 50;
    cfg.t = 1;
    cfg.params = base_params();
    cfg.seed = 3;
    const auto inst = generate_instance<double>(cfg);
    const auto& a = *inst.problem.op(0).dense();
    for (int j = 0; j < cfg.n; ++j) EXPECT_NEAR(a.col(j).norm(), 1.0, 1e-12);
}

TEST(Generate, BetaZeroSharesTheMatrix) {
    GenConfig cfg;
    cfg.n = 40;
    cfg.m = 20;
    cfg.t = 4;
    cfg.beta = 0.0;
    cfg.params = base_params();
    cfg.seed = 5;
    const auto inst = generate_instance<double>(cfg);
    EXPECT_TRUE(inst.problem.shared_matrix());
    for (int t = 1; t < cfg.t; ++t) EXPECT_EQ(inst.problem.ops[t], inst.problem.ops[0]);
}

TEST(Generate, BetaOneDrawsIndependentMatrices) {
    GenConfig cfg;
    cfg.n = 400;
    cfg.m = 100;
    cfg.t = 2;
    cfg.beta = 1.0;
    cfg.params = base_params();
    cfg.seed = 6;
    const auto inst = generate_instance<double>(cfg);
    const auto& a1 = *inst.problem.op(0).dense();
    const auto& a2 = *inst.problem.op(1).dense();
    // Sample correlation over m*n entry pairs vanishes within 3 standard
    // errors; entries have variance ~ 1/M.
    const double dot = (a1.array() * a2.array()).sum();
    const double denom = a1.norm() * a2.norm();
    const double corr = dot / denom;
    const double se = 1.0 / std::sqrt(static_cast<double>(cfg.n) * cfg.m);
    EXPECT_LT(std::abs(corr), 3.0 * se);
}

TEST(Generate, EvolvedColumnsKeepExpectedUnitNorm) {
    GenConfig cfg;
    cfg.n = 1500;
    cfg.m = 80;
    cfg.t = 4;
    cfg.beta = 0.35;
    cfg.params = base_params();
    cfg.seed = 7;
    const auto inst = generate_instance<double>(cfg);
    for (int t = 1; t < cfg.t; ++t) {
        const auto& a = *inst.problem.op(t).dense();
        double mean_sq = 0.0;
        for (int j = 0; j < cfg.n; ++j) mean_sq += a.col(j).squaredNorm();
        mean_sq /= cfg.n;
        EXPECT_NEAR(mean_sq, 1.0, 0.02);
    }
}

TEST(Generate, StationaryVarianceAndLagOneAutocorrelation) {
    const double alpha = 0.05;
    GenConfig cfg;
    cfg.n = 10000;
    cfg.m = 4;
    cfg.t = 2;
    cfg.params = base_params(0.5, alpha);
    cfg.params.zeta = {0.0, 0.0};
    cfg.seed = 8;
    const auto inst = generate_instance<double>(cfg);

    double var1 = 0.0;
    for (int i = 0; i < cfg.n; ++i) var1 += inst.truth.thetas(i, 0) * inst.truth.thetas(i, 0);
    var1 /= cfg.n;
    EXPECT_NEAR(var1, 1.0, 3.0 * std::sqrt(2.0 / cfg.n));

    double num = 0.0, den = 0.0;
    for (int i = 0; i < cfg.n; ++i) {
        num += inst.truth.thetas(i, 0) * inst.truth.thetas(i, 1);
        den += inst.truth.thetas(i, 0) * inst.truth.thetas(i, 0);
    }
    EXPECT_NEAR(num / den, 1.0 - alpha, 0.01);
}

TEST(Generate, NoiselessLimit) {
    GenConfig cfg;
    cfg.n = 32;
    cfg.m = 16;
    cfg.t = 3;
    cfg.params = base_params();
    cfg.snr_db = std::numeric_limits<double>::infinity();
    cfg.seed = 9;
    const auto inst = generate_instance<double>(cfg);
    EXPECT_EQ(inst.params_used.sigma_e2, 0.0);
    for (int t = 0; t < cfg.t; ++t) {
        const Vector<double> clean = inst.problem.op(t).apply(inst.truth.signals.col(t));
        EXPECT_EQ((inst.problem.y[t] - clean).norm(), 0.0);
    }
}

TEST(Generate, SnrFormulaHoldsByConstruction) {
    GenConfig cfg;
    cfg.n = 64;
    cfg.m = 32;
    cfg.t = 4;
    cfg.params = base_params();
    cfg.snr_db = 25.0;
    cfg.seed = 10;
    const auto inst = generate_instance<double>(cfg);
    double signal_energy = 0.0;
    for (int t = 0; t < cfg.t; ++t)
        signal_energy += inst.problem.op(t).apply(inst.truth.signals.col(t)).squaredNorm();
    const double expected =
        signal_energy / (cfg.t * cfg.m * std::pow(10.0, *cfg.snr_db / 10.0));
    EXPECT_NEAR(inst.params_used.sigma_e2, expected, 1e-18);
}

TEST(Generate, ExactKSupport) {
    GenConfig cfg;
    cfg.n = 30;
    cfg.m = 10;
    cfg.t = 2;
    cfg.exact_k = 7;
    cfg.params = base_params(7.0 / 30.0);
    cfg.seed = 12;
    const auto inst = generate_instance<double>(cfg);
    EXPECT_EQ(inst.truth.k, 7);
}

TEST(Generate, RejectsInvalidParameters) {
    GenConfig cfg;
    cfg.n = 8;
    cfg.m = 4;
    cfg.t = 1;
    cfg.params = base_params();
    cfg.params.set_lambda(1.0);
    EXPECT_THROW(generate_instance<double>(cfg), std::invalid_argument);

    cfg.params = base_params();
    cfg.params.rho = -1.0;
    EXPECT_THROW(generate_instance<double>(cfg), std::invalid_argument);

    cfg.params = base_params();
    cfg.beta = 0.5;
    cfg.matrix_kind = MatrixKind::ImplicitSrht;
    EXPECT_THROW(generate_instance<double>(cfg), std::invalid_argument);
}

TEST(Generate, ComplexFieldInstance) {
    GenConfig cfg;
    cfg.n = 48;
    cfg.m = 24;
    cfg.t = 3;
    cfg.field = Field::Complex;
    cfg.params = base_params(0.2, 0.1);
    cfg.params.zeta = {0.4, -0.3};
    cfg.seed = 13;
    const auto inst = generate_instance<std::complex<double>>(cfg);
    const auto& a = *inst.problem.op(0).dense();
    for (int j = 0; j < cfg.n; ++j) EXPECT_NEAR(a.col(j).norm(), 1.0, 1e-12);
    // mismatch of scalar type and declared field is rejected
    EXPECT_THROW(generate_instance<double>(cfg), std::invalid_argument);
}

TEST(SrhtOperator, AdjointAndColumnNorms) {
    SrhtOperator<double> op(24, 100, 77);
    Rng rng(1);
    Vector<double> x(100), z(24);
    for (int i = 0; i < 100; ++i) x[i] = rng.normal();
    for (int i = 0; i < 24; ++i) z[i] = rng.normal();
    // adjoint identity <Ax, z> = <x, A^H z>
    const double lhs = op.apply(x).dot(z);
    const double rhs = x.dot(op.apply_adjoint(z));
    EXPECT_NEAR(lhs, rhs, 1e-10 * (std::abs(lhs) + 1.0));
    // exactly unit column norms
    Vector<double> e = Vector<double>::Zero(100);
    for (int j : {0, 17, 63, 99}) {
        e.setZero();
        e[j] = 1.0;
        EXPECT_NEAR(op.apply(e).norm(), 1.0, 1e-12);
    }
}
