#include <gtest/gtest.h>

#include <ampmmv/amp.hpp>
#include <ampmmv/enumerate.hpp>
#include <ampmmv/generate.hpp>
#include <ampmmv/metrics.hpp>
#include <cmath>

using namespace ampmmv;

namespace {

std::vector<LocalPrior<double>> uniform_priors(int n, double pi, double xi, double psi) {
    return std::vector<LocalPrior<double>>(n, LocalPrior<double>{pi, xi, psi});
}

}  // namespace

TEST(RunAmp, ZeroDataZeroMeanPriorFixedPoint) {
    GenConfig cfg;
    cfg.n = 32;
    cfg.m = 16;
    cfg.t = 1;
    cfg.params.set_lambda(0.2);
    cfg.params.alpha = 0.1;
    cfg.params.rho = rho_for_stationary_variance(1.0, 0.1);
    cfg.seed = 21;
    const auto inst = generate_instance<double>(cfg);

    const Vector<double> y = Vector<double>::Zero(cfg.m);
    const auto st = run_amp(y, inst.problem.op(0), uniform_priors(cfg.n, 0.2, 0.0, 1.0), 1e-3);
    EXPECT_EQ(st.mu.norm(), 0.0);
    EXPECT_EQ(st.z.norm(), 0.0);
}

TEST(RunAmp, NoiselessIdentityGaussianPrior) {
    const int n = 24;
    Matrix<double> eye = Matrix<double>::Identity(n, n);
    DenseOperator<double> op(eye);
    Rng rng(3);
    Vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.normal();
    AmpOptions opt;
    opt.max_iters = 200;
    const auto st = run_amp<double>(y, op, uniform_priors(n, 1.0, 0.0, 1.0), 1e-12, opt);
    EXPECT_LT((st.mu - y).norm(), 1e-6 * y.norm());
}

TEST(RunAmp, GaussianFixedPointSolvesNormalEquations) {
    const int n = 40, m = 80;
    GenConfig cfg;
    cfg.n = n;
    cfg.m = m;
    cfg.t = 1;
    cfg.params.set_lambda(0.5);
    cfg.params.alpha = 0.1;
    cfg.params.rho = rho_for_stationary_variance(1.0, 0.1);
    cfg.snr_db = 20.0;
    cfg.seed = 22;
    const auto inst = generate_instance<double>(cfg);
    const auto& a = *inst.problem.op(0).dense();
    const double sigma_e2 = inst.params_used.sigma_e2;

    Rng rng(23);
    std::vector<LocalPrior<double>> priors(n);
    for (int i = 0; i < n; ++i)
        priors[i] = {1.0, 0.5 * (rng.uniform() - 0.5), 0.5 + rng.uniform()};

    AmpOptions opt;
    opt.max_iters = 500;
    opt.rel_change_tol = 1e-24;
    const auto st = run_amp(inst.problem.y[0], inst.problem.op(0), priors, sigma_e2, opt);

    Matrix<double> lhs = a.transpose() * a / sigma_e2;
    Vector<double> rhs = a.transpose() * inst.problem.y[0] / sigma_e2;
    for (int i = 0; i < n; ++i) {
        lhs(i, i) += 1.0 / priors[i].psi;
        rhs[i] += priors[i].xi / priors[i].psi;
    }
    EXPECT_LT((lhs * st.mu - rhs).norm(), 1e-4 * rhs.norm());
}

TEST(RunAmp, TracksExactMmseOnSmallInstances) {
    // Single-frame recovery vs the exhaustive posterior mean at N = 16,
    // averaged over 100 seeded trials.
    double amp_nmse = 0.0, mmse_nmse = 0.0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        GenConfig cfg;
        cfg.n = 16;
        cfg.m = 12;
        cfg.t = 1;
        cfg.exact_k = 2;
        cfg.params.set_lambda(2.0 / 16.0);
        cfg.params.alpha = 0.05;
        cfg.params.rho = rho_for_stationary_variance(1.0, 0.05);
        cfg.snr_db = 25.0;
        cfg.seed = derive_seed(9000, trial);
        const auto inst = generate_instance<double>(cfg);

        AmpOptions opt;
        opt.max_iters = 100;
        const auto st = run_amp(inst.problem.y[0], inst.problem.op(0),
                                uniform_priors(16, 2.0 / 16.0, 0.0, 1.0),
                                inst.params_used.sigma_e2, opt);
        const auto en = enumerate_mmse(inst.problem, inst.params_used);

        const double denom = inst.truth.signals.col(0).squaredNorm();
        amp_nmse += (st.mu - inst.truth.signals.col(0)).squaredNorm() / denom;
        mmse_nmse += (en.x_mmse.col(0) - inst.truth.signals.col(0)).squaredNorm() / denom;
    }
    amp_nmse /= trials;
    mmse_nmse /= trials;
    EXPECT_LE(to_db(amp_nmse) - to_db(mmse_nmse), 0.5);
    EXPECT_GE(to_db(amp_nmse) - to_db(mmse_nmse), -0.1);  // cannot beat exact MMSE
}

TEST(RunAmp, OneApplyAndOneAdjointPerIteration) {
    GenConfig cfg;
    cfg.n = 128;
    cfg.m = 64;
    cfg.t = 1;
    cfg.params.set_lambda(0.1);
    cfg.params.alpha = 0.1;
    cfg.params.rho = rho_for_stationary_variance(1.0, 0.1);
    cfg.snr_db = 25.0;
    cfg.matrix_kind = MatrixKind::ImplicitSrht;
    cfg.seed = 24;
    const auto inst = generate_instance<double>(cfg);

    auto counting = std::make_shared<CountingOperator<double>>(inst.problem.ops[0]);
    AmpOptions opt;
    opt.max_iters = 13;
    opt.early_exit = false;
    run_amp<double>(inst.problem.y[0], *counting, uniform_priors(128, 0.1, 0.0, 1.0),
                    inst.params_used.sigma_e2, opt);
    EXPECT_EQ(counting->applies(), 13);
    EXPECT_EQ(counting->adjoints(), 13);
}

TEST(RunAmp, DivergenceRaisesWithIterationIndex) {
    const int n = 8, m = 4;
    Matrix<double> a = Matrix<double>::Random(m, n);
    DenseOperator<double> op(a);
    Vector<double> y = Vector<double>::Ones(m);

    AmpState<double> poisoned;
    poisoned.z = y;
    poisoned.mu = Vector<double>::Zero(n);
    poisoned.mu[0] = std::numeric_limits<double>::quiet_NaN();
    poisoned.v = Vector<double>::Zero(n);
    poisoned.c = 1.0;

    try {
        run_amp<double>(y, op, uniform_priors(n, 0.5, 0.0, 1.0), 1e-3, {}, poisoned);
        FAIL() << "expected AmpDiverged";
    } catch (const AmpDiverged& e) {
        EXPECT_EQ(e.iter, 1);
    }
}

TEST(RunAmp, DimensionMismatchRejected) {
    Matrix<double> a = Matrix<double>::Random(4, 8);
    DenseOperator<double> op(a);
    Vector<double> y = Vector<double>::Ones(4);
    EXPECT_THROW(run_amp<double>(y, op, uniform_priors(7, 0.5, 0.0, 1.0), 1e-3),
                 std::invalid_argument);
}
