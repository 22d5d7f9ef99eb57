#include <gtest/gtest.h>

#include <ampmmv/oracles.hpp>
#include <ampmmv/rng.hpp>
#include <ampmmv/thresholding.hpp>
#include <cmath>
#include <complex>

using namespace ampmmv;
using cplx = std::complex<double>;

TEST(GammaOdds, CertaintyLimits) {
    LocalPrior<double> prior{1.0, 0.0, 1.0};
    EXPECT_EQ(gamma_odds(0.7, 1.0, prior), 0.0);  // always active

    prior.pi = 0.0;
    EXPECT_TRUE(std::isinf(gamma_odds(0.7, 1.0, prior)));  // always inactive
}

TEST(GammaOdds, ComplexBalancedCase) {
    // pi = 1/2, xi = 0, psi = 1, c = 1, phi = 0: odds ((psi+c)/c) e^0 = 2.
    LocalPrior<cplx> prior{0.5, {0.0, 0.0}, 1.0};
    EXPECT_NEAR(gamma_odds<cplx>({0.0, 0.0}, 1.0, prior), 2.0, 1e-12);
}

TEST(GammaOdds, MatchesLikelihoodRatioByPdfEvaluation) {
    // gamma = (1-pi)/pi * pdf(phi; 0, c) / pdf(phi; xi, psi + c) in the
    // instance's own field. For the real balanced case this is sqrt(2).
    LocalPrior<double> prior{0.5, 0.0, 1.0};
    const double direct = gamma_odds(0.0, 1.0, prior);
    const double by_pdfs =
        std::exp(field_traits<double>::log_pdf(0.0, 0.0, 1.0) -
                 field_traits<double>::log_pdf(0.0, 0.0, 2.0));
    EXPECT_NEAR(direct, by_pdfs, 1e-12);
    EXPECT_NEAR(direct, std::sqrt(2.0), 1e-12);

    Rng rng(101);
    for (int i = 0; i < 100; ++i) {
        LocalPrior<double> p;
        p.pi = 0.05 + 0.9 * rng.uniform();
        p.xi = 3.0 * (rng.uniform() - 0.5);
        p.psi = 0.2 + 2.0 * rng.uniform();
        const double c = 0.2 + 2.0 * rng.uniform();
        const double phi = 4.0 * (rng.uniform() - 0.5);
        const double expected =
            ((1.0 - p.pi) / p.pi) *
            std::exp(field_traits<double>::log_pdf(phi, 0.0, c) -
                     field_traits<double>::log_pdf(phi, p.xi, p.psi + c));
        EXPECT_NEAR(gamma_odds(phi, c, p), expected, 1e-10 * expected);
    }
}

TEST(GammaOdds, StrictlyDecreasingInPi) {
    const double c = 0.8, phi = 0.9;
    double prev = std::numeric_limits<double>::infinity();
    for (double pi = 0.05; pi < 1.0; pi += 0.05) {
        LocalPrior<double> p{pi, 0.4, 1.3};
        const double g = gamma_odds(phi, c, p);
        EXPECT_LT(g, prev);
        prev = g;
    }
}

TEST(FThreshold, GaussianAndInactiveLimits) {
    LocalPrior<double> active{1.0, 0.0, 1.0};
    EXPECT_NEAR(f_threshold(1.0, 1.0, active), 0.5, 1e-15);  // pure shrinkage

    LocalPrior<double> inactive{0.0, 0.3, 1.0};
    EXPECT_EQ(f_threshold(1.0, 1.0, inactive), 0.0);
    EXPECT_EQ(g_threshold(1.0, 1.0, inactive), 0.0);
    EXPECT_EQ(f_prime(1.0, 1.0, inactive), 0.0);
}

TEST(GThreshold, GaussianLimit) {
    LocalPrior<double> active{1.0, 0.0, 1.0};
    EXPECT_NEAR(g_threshold(0.3, 1.0, active), 0.5, 1e-15);
    EXPECT_NEAR(f_prime(0.3, 1.0, active), 0.5, 1e-15);
}

TEST(Thresholds, MatchQuadraturePosteriorMoments) {
    const oracle::GaussLegendre gl;
    const LocalPrior<double> prior{0.7, 0.3, 2.0};
    const double c = 0.5, phi = 1.2;
    const auto q = oracle::spike_slab_moments(gl, phi, c, prior);
    EXPECT_NEAR(f_threshold(phi, c, prior), q.mean, 1e-11);
    EXPECT_NEAR(g_threshold(phi, c, prior), q.var, 1e-11);

    Rng rng(55);
    for (int i = 0; i < 300; ++i) {
        LocalPrior<double> p;
        p.pi = 0.02 + 0.96 * rng.uniform();
        p.xi = 4.0 * (rng.uniform() - 0.5);
        p.psi = 0.1 + 3.0 * rng.uniform();
        const double cc = 0.1 + 3.0 * rng.uniform();
        const double ph = 6.0 * (rng.uniform() - 0.5);
        const auto qq = oracle::spike_slab_moments(gl, ph, cc, p);
        const double scale = std::abs(qq.mean) + std::sqrt(qq.var);
        EXPECT_NEAR(f_threshold(ph, cc, p), qq.mean, 1e-9 * scale);
        EXPECT_NEAR(g_threshold(ph, cc, p), qq.var, 1e-9 * qq.var);
    }
}

TEST(Thresholds, MatchQuadraturePosteriorMomentsComplex) {
    const oracle::GaussLegendre gl;
    Rng rng(56);
    for (int i = 0; i < 100; ++i) {
        LocalPrior<cplx> p;
        p.pi = 0.05 + 0.9 * rng.uniform();
        p.xi = {3.0 * (rng.uniform() - 0.5), 3.0 * (rng.uniform() - 0.5)};
        p.psi = 0.2 + 2.0 * rng.uniform();
        const double cc = 0.2 + 2.0 * rng.uniform();
        const cplx ph{4.0 * (rng.uniform() - 0.5), 4.0 * (rng.uniform() - 0.5)};
        const auto qq = oracle::spike_slab_moments(gl, ph, cc, p);
        const double scale = std::abs(qq.mean) + std::sqrt(qq.var);
        EXPECT_LT(std::abs(f_threshold(ph, cc, p) - qq.mean), 1e-9 * scale);
        EXPECT_NEAR(g_threshold(ph, cc, p), qq.var, 1e-9 * qq.var);
    }
}

TEST(FPrime, EqualsGOverCIdentically) {
    Rng rng(57);
    for (int i = 0; i < 200; ++i) {
        LocalPrior<double> p;
        p.pi = rng.uniform();
        p.xi = 2.0 * (rng.uniform() - 0.5);
        p.psi = 0.1 + 2.0 * rng.uniform();
        const double c = 0.1 + 2.0 * rng.uniform();
        const double phi = 5.0 * (rng.uniform() - 0.5);
        const double fp = f_prime(phi, c, p);
        const double g = g_threshold(phi, c, p);
        EXPECT_LE(std::abs(fp - g / c), 1e-12 * std::max(std::abs(fp), 1e-30));
        EXPECT_GE(g, 0.0);
    }
}

TEST(FPrime, MatchesCenteredFiniteDifference) {
    const LocalPrior<double> prior{0.6, -0.2, 1.5};
    const double c = 0.8, phi = 0.4, h = 1e-5;
    const double fd =
        (f_threshold(phi + h, c, prior) - f_threshold(phi - h, c, prior)) / (2.0 * h);
    EXPECT_NEAR(f_prime(phi, c, prior), fd, 1e-6);
}

TEST(Thresholds, OverflowGuard) {
    // Extreme pseudo-data: odds saturate without producing non-finite output.
    LocalPrior<double> p{0.5, 0.0, 1.0};
    const double g = gamma_odds(1e6, 1e-6, p);
    EXPECT_TRUE(std::isfinite(std::log(g)) || g == 0.0 || std::isinf(g));
    EXPECT_TRUE(std::isfinite(f_threshold(1e6, 1e-6, p)));
    EXPECT_TRUE(std::isfinite(g_threshold(1e6, 1e-6, p)));
}
