#include <gtest/gtest.h>

#include <ampmmv/engine.hpp>
#include <ampmmv/generate.hpp>
#include <ampmmv/metrics.hpp>
#include <ampmmv/sks.hpp>
#include <cmath>

using namespace ampmmv;

namespace {

ModelParams unit_variance_params(double lambda, double alpha = 0.1) {
    ModelParams p;
    p.set_lambda(lambda);
    p.alpha = alpha;
    p.rho = rho_for_stationary_variance(1.0, alpha);
    p.sigma_e2 = 1e-4;
    return p;
}

}  // namespace

TEST(IntoActivity, SingleFrameAndAgnosticReduceToLambda) {
    const double lambda = 0.2;
    const double row1[] = {0.5};
    EXPECT_EQ(into_activity(lambda, row1, 1, 0), lambda);  // empty product

    const double row3[] = {0.5, 0.5, 0.5};
    EXPECT_EQ(into_activity(lambda, row3, 3, 1), lambda);  // agnostic messages cancel
}

TEST(IntoActivity, HandWorkedProduct) {
    // lambda = 0.2, other frames 0.9 and 0.8:
    // 0.2*0.72 / (0.8*0.02 + 0.2*0.72) = 0.9
    const double row[] = {0.9, 0.8, 0.123};
    EXPECT_NEAR(into_activity(0.2, row, 3, 2), 0.9, 1e-12);
}

TEST(IntoActivity, MatchesDirectProductEvaluation) {
    Rng rng(91);
    for (int trial = 0; trial < 50; ++trial) {
        const int t_total = 5;
        double row[t_total];
        for (double& v : row) v = rng.uniform();
        const double lambda = 0.05 + 0.9 * rng.uniform();
        double on = lambda, off = 1.0 - lambda;
        for (int t = 0; t < t_total; ++t) {
            if (t == 2) continue;
            on *= row[t];
            off *= 1.0 - row[t];
        }
        EXPECT_NEAR(into_activity(lambda, row, t_total, 2), on / (on + off), 1e-12);
    }
}

TEST(PosteriorActivity, SpecExamples) {
    const double agnostic[] = {0.5, 0.5};
    EXPECT_EQ(posterior_activity(0.3, agnostic, 2), 0.3);

    const double certain[] = {1.0, 0.4};
    EXPECT_NEAR(posterior_activity(0.3, certain, 2), 1.0, 1e-12);

    const double row[] = {0.9, 0.7};
    // 0.3*0.63 / (0.3*0.63 + 0.7*0.03) = 0.9
    EXPECT_NEAR(posterior_activity(0.3, row, 2), 0.9, 1e-12);
}

TEST(OutActivity, CertaintyAndBalancedCases) {
    LocalPrior<double> certain{1.0, 0.0, 1.0};
    EXPECT_EQ(out_activity(0.3, 1.0, certain), 1.0);

    LocalPrior<double> off{0.0, 0.0, 1.0};
    EXPECT_EQ(out_activity(0.3, 1.0, off), 0.0);

    // Balanced likelihood: real field, xi = 0, psi = c = 1; the two
    // hypothesis densities are equal at phi = sqrt(2 ln 2).
    LocalPrior<double> prior{0.37, 0.0, 1.0};
    const double phi = std::sqrt(2.0 * std::log(2.0));
    EXPECT_NEAR(out_activity(phi, 1.0, prior), 0.5, 1e-12);
}

TEST(OutActivity, EqualsTwoHypothesisPosteriorByPdfEvaluation) {
    Rng rng(92);
    for (int trial = 0; trial < 100; ++trial) {
        LocalPrior<double> p;
        p.pi = 0.05 + 0.9 * rng.uniform();
        p.xi = 2.0 * (rng.uniform() - 0.5);
        p.psi = 0.2 + 2.0 * rng.uniform();
        const double c = 0.2 + 2.0 * rng.uniform();
        const double phi = 4.0 * (rng.uniform() - 0.5);
        const double lon = field_traits<double>::log_pdf(phi, p.xi, p.psi + c);
        const double loff = field_traits<double>::log_pdf(phi, 0.0, c);
        const double want = std::exp(lon) / (std::exp(lon) + std::exp(loff));
        EXPECT_NEAR(out_activity(phi, c, p), want, 1e-12);
    }
}

TEST(Solve, NoiselessIdentityAllActive) {
    const int n = 16, t = 3;
    MmvProblem<double> prob;
    prob.n = n;
    prob.m = n;
    prob.t = t;
    auto eye = std::make_shared<DenseOperator<double>>(Matrix<double>::Identity(n, n));
    Rng rng(93);
    for (int j = 0; j < t; ++j) {
        prob.ops.push_back(eye);
        Vector<double> y(n);
        for (int i = 0; i < n; ++i) y[i] = rng.normal();
        prob.y.push_back(y);
    }
    ModelParams params = unit_variance_params(1.0 - 1e-9, 0.9);
    params.sigma_e2 = 1e-10;

    SolverConfig cfg;
    cfg.max_passes = 10;
    cfg.inner_iters = 100;
    cfg.max_escalations = 0;
    const auto sol = solve(prob, params, cfg);
    for (int j = 0; j < t; ++j)
        EXPECT_LT((sol.summary.x_mean.col(j) - prob.y[j]).norm(), 1e-6 * prob.y[j].norm());
}

TEST(Solve, SingleFrameReducesToPlainAmpBitwise) {
    GenConfig gen;
    gen.n = 48;
    gen.m = 24;
    gen.t = 1;
    gen.params = unit_variance_params(0.2);
    gen.params.zeta = {0.25, 0.0};
    gen.snr_db = 25.0;
    gen.seed = 94;
    const auto inst = generate_instance<double>(gen);

    SolverConfig cfg;
    cfg.max_passes = 1;
    cfg.inner_iters = 25;
    cfg.max_escalations = 0;
    const auto sol = solve(inst.problem, inst.params_used, cfg);

    std::vector<LocalPrior<double>> priors(
        gen.n, LocalPrior<double>{0.2, 0.25, 1.0});
    AmpOptions opt;
    opt.max_iters = 25;
    const auto amp =
        run_amp(inst.problem.y[0], inst.problem.op(0), priors, inst.params_used.sigma_e2, opt);

    for (int i = 0; i < gen.n; ++i) {
        EXPECT_EQ(sol.summary.x_mean(i, 0), amp.mu[i]);
        EXPECT_EQ(sol.summary.x_var(i, 0), amp.v[i]);
    }
}

namespace {

double suite_tnmse(Schedule schedule, double epsilon, int trials, std::uint64_t seed) {
    double acc = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        GenConfig gen;
        gen.n = 128;
        gen.m = 64;
        gen.t = 4;
        gen.params = unit_variance_params(0.15);
        gen.snr_db = 25.0;
        gen.seed = derive_seed(seed, trial);
        const auto inst = generate_instance<double>(gen);
        SolverConfig cfg;
        cfg.schedule = schedule;
        cfg.epsilon = epsilon;
        cfg.max_passes = 20;
        const auto sol = solve(inst.problem, inst.params_used, cfg);
        acc += tnmse(inst.truth.signals, sol.summary.x_mean).value;
    }
    return acc / trials;
}

}  // namespace

TEST(Solve, SerialAndParallelSchedulesAgree) {
    const double serial = suite_tnmse(Schedule::Serial, 1e-7, 20, 95);
    const double parallel = suite_tnmse(Schedule::Parallel, 1e-7, 20, 95);
    EXPECT_LT(std::abs(to_db(serial) - to_db(parallel)), 0.5);
}

TEST(Solve, EpsilonRobustness) {
    const double a = suite_tnmse(Schedule::Serial, 1e-6, 10, 96);
    const double b = suite_tnmse(Schedule::Serial, 1e-8, 10, 96);
    EXPECT_LT(std::abs(to_db(a) - to_db(b)), 0.1);
}

TEST(Solve, ClampedSupportMatchesOracleSmoother) {
    // With the support known and forced, the amplitude posteriors should
    // match the oracle smoother on active coordinates; the Gaussian
    // approximation inside the frame is the only gap.
    GenConfig gen;
    gen.n = 32;
    gen.m = 24;
    gen.t = 3;
    gen.exact_k = 6;
    gen.params = unit_variance_params(6.0 / 32.0, 0.2);
    gen.params.rho = rho_for_stationary_variance(1.0, 0.2);
    gen.snr_db = 20.0;
    gen.seed = 97;
    const auto inst = generate_instance<double>(gen);

    SolverConfig cfg;
    cfg.support_clamp = inst.truth.support;
    cfg.max_passes = 30;
    cfg.inner_iters = 60;
    const auto sol = solve(inst.problem, inst.params_used, cfg);

    SksInput<double> oracle_in{&inst.problem, inst.truth.support, inst.params_used};
    const auto oracle = sks_smooth(oracle_in);

    for (int t = 0; t < gen.t; ++t)
        for (int i = 0; i < gen.n; ++i) {
            if (!inst.truth.support[i]) continue;
            EXPECT_NEAR(sol.summary.theta_mean(i, t), oracle.theta_hat(i, t), 1e-2);
            EXPECT_NEAR(sol.summary.theta_var(i, t), oracle.theta_var(i, t),
                        0.02 * oracle.theta_var(i, t));
        }
}

TEST(Solve, EscalationAlternatesScheduleAndDoublesBudget) {
    // Zero stored noise variance makes any residual exceed the switch
    // threshold, forcing the full escalation ladder.
    GenConfig gen;
    gen.n = 32;
    gen.m = 8;
    gen.t = 2;
    gen.params = unit_variance_params(0.4);
    gen.snr_db = std::numeric_limits<double>::infinity();
    gen.seed = 98;
    const auto inst = generate_instance<double>(gen);

    SolverConfig cfg;
    cfg.max_passes = 2;
    cfg.inner_iters = 5;
    cfg.max_escalations = 3;
    const auto sol = solve(inst.problem, inst.params_used, cfg);
    EXPECT_EQ(sol.diagnostics.escalations, 3);

    // Budgets 2, 4, 8, 16 with alternating schedules.
    int seen_parallel = 0;
    for (const auto& rec : sol.diagnostics.passes)
        if (rec.schedule == Schedule::Parallel) ++seen_parallel;
    EXPECT_GT(seen_parallel, 0);
    EXPECT_LE(sol.diagnostics.total_passes, 2 + 4 + 8 + 16);
    EXPECT_GT(sol.diagnostics.total_passes, 2);
}

TEST(Solve, DiagnosticsCarryResidualPerPass) {
    GenConfig gen;
    gen.n = 64;
    gen.m = 32;
    gen.t = 3;
    gen.params = unit_variance_params(0.15);
    gen.snr_db = 25.0;
    gen.seed = 99;
    const auto inst = generate_instance<double>(gen);
    SolverConfig cfg;
    cfg.max_passes = 8;
    const auto sol = solve(inst.problem, inst.params_used, cfg);
    ASSERT_FALSE(sol.diagnostics.passes.empty());
    for (const auto& rec : sol.diagnostics.passes) {
        EXPECT_TRUE(std::isfinite(rec.residual));
        EXPECT_GE(rec.residual, 0.0);
    }
    EXPECT_EQ(sol.diagnostics.final_residual,
              sol.diagnostics.passes.back().residual);
}

TEST(Solve, RejectsBadConfig) {
    GenConfig gen;
    gen.n = 8;
    gen.m = 4;
    gen.t = 1;
    gen.params = unit_variance_params(0.2);
    gen.seed = 100;
    const auto inst = generate_instance<double>(gen);

    SolverConfig cfg;
    cfg.epsilon = 0.1;  // outside (0, 1e-3]
    EXPECT_THROW(solve(inst.problem, inst.params_used, cfg), std::invalid_argument);

    SolverConfig cfg2;
    cfg2.support_clamp.assign(5, 1);  // wrong length
    EXPECT_THROW(solve(inst.problem, inst.params_used, cfg2), std::invalid_argument);
}
