// Compact oracle-equivalence suite behind the `selftest` CLI command.
//
// Each check compares a production code path against one of the independent
// references in oracles.hpp at reduced problem sizes, so a user can verify a
// build in seconds.
#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "amp.hpp"
#include "engine.hpp"
#include "enumerate.hpp"
#include "generate.hpp"
#include "io.hpp"
#include "oracles.hpp"
#include "sks.hpp"

namespace ampmmv {

struct SelfTestResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline void record(std::vector<SelfTestResult>& out, const std::string& name, bool pass,
                   const std::string& detail) {
    out.push_back({name, pass, detail});
}

}  // namespace detail

inline std::vector<SelfTestResult> run_selftest(std::uint64_t seed = 20240101) {
    std::vector<SelfTestResult> results;
    const oracle::GaussLegendre gl;

    // Denoiser moments against quadrature.
    {
        Rng rng(derive_seed(seed, 1));
        double worst = 0.0;
        for (int trial = 0; trial < 200; ++trial) {
            LocalPrior<double> prior;
            prior.pi = 0.02 + 0.96 * rng.uniform();
            prior.xi = 4.0 * (rng.uniform() - 0.5);
            prior.psi = 0.1 + 3.0 * rng.uniform();
            const double c = 0.1 + 3.0 * rng.uniform();
            const double phi = 6.0 * (rng.uniform() - 0.5);
            const auto q = oracle::spike_slab_moments(gl, phi, c, prior);
            const double f = f_threshold(phi, c, prior);
            const double g = g_threshold(phi, c, prior);
            const double scale = std::abs(q.mean) + std::sqrt(std::max(q.var, 1e-30));
            worst = std::max(worst, std::abs(f - q.mean) / scale);
            worst = std::max(worst, std::abs(g - q.var) / std::max(q.var, 1e-30));
        }
        std::ostringstream os;
        os << "max relative error " << worst;
        detail::record(results, "denoiser-vs-quadrature", worst < 1e-9, os.str());
    }

    // Message collapse against finite differences of the mixture density.
    {
        Rng rng(derive_seed(seed, 2));
        double worst = 0.0;
        for (int trial = 0; trial < 200; ++trial) {
            const double pi = 0.05 + 0.90 * rng.uniform();
            const double c = 0.05 + 2.0 * rng.uniform();
            const double phi = 3.0 * std::sqrt(c) * (rng.uniform() - 0.5);
            const auto t = taylor_approx(pi, phi, c, 1e-7);
            const auto fd = oracle::taylor_by_finite_differences(pi, phi, c, 1e-7);
            worst = std::max(worst, std::abs(t.psi - fd.psi) / fd.psi);
            worst = std::max(worst, std::abs(t.xi - fd.xi) /
                                        (std::abs(fd.xi) + std::sqrt(fd.psi)));

            const std::complex<double> phic{phi, 2.0 * std::sqrt(c) * (rng.uniform() - 0.5)};
            const auto tc = taylor_approx(pi, phic, c, 1e-7);
            const auto fdc = oracle::taylor_by_finite_differences(pi, phic, c, 1e-7);
            worst = std::max(worst, std::abs(tc.psi - fdc.psi) / fdc.psi);
            worst = std::max(worst, std::abs(tc.xi - fdc.xi) /
                                        (std::abs(fdc.xi) + std::sqrt(fdc.psi)));
        }
        std::ostringstream os;
        os << "max relative error " << worst;
        detail::record(results, "collapse-vs-finite-differences", worst < 1e-3, os.str());
    }

    // Smoother against dense joint-Gaussian conditioning.
    {
        double worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            GenConfig cfg;
            cfg.n = 8;
            cfg.m = 5;
            cfg.t = 3;
            cfg.exact_k = 3;
            cfg.params.set_lambda(3.0 / 8.0);
            cfg.params.alpha = 0.2;
            cfg.params.rho = rho_for_stationary_variance(1.0, 0.2);
            cfg.params.sigma_e2 = 1e-2;
            cfg.seed = derive_seed(seed, 3, trial);
            const auto inst = generate_instance<double>(cfg);
            SksInput<double> in{&inst.problem, inst.truth.support, inst.params_used};
            const auto sks = sks_smooth(in);
            const auto active = support_from_mask(inst.truth.support);
            const auto dense = oracle::dense_chain_condition(inst.problem, active,
                                                             inst.params_used);
            for (int t = 0; t < cfg.t; ++t)
                for (std::size_t j = 0; j < active.size(); ++j) {
                    const int jj = static_cast<int>(j);
                    worst = std::max(worst,
                                     std::abs(sks.theta_hat(active[j], t) - dense.mean(jj, t)) /
                                         (std::abs(dense.mean(jj, t)) + 1.0));
                    worst = std::max(worst, std::abs(sks.theta_var(active[j], t) -
                                                     dense.var(jj, t)) /
                                                dense.var(jj, t));
                }
        }
        std::ostringstream os;
        os << "max relative error " << worst;
        detail::record(results, "smoother-vs-dense-conditioning", worst < 1e-8, os.str());
    }

    // Exhaustive oracle internal consistency: expected support size two ways.
    {
        GenConfig cfg;
        cfg.n = 8;
        cfg.m = 6;
        cfg.t = 2;
        cfg.params.set_lambda(0.25);
        cfg.params.alpha = 0.15;
        cfg.params.rho = rho_for_stationary_variance(1.0, 0.15);
        cfg.snr_db = 20.0;
        cfg.seed = derive_seed(seed, 4);
        const auto inst = generate_instance<double>(cfg);
        const auto en = enumerate_mmse(inst.problem, inst.params_used);
        double direct = en.support_post.sum();
        double mixed = 0.0;
        for (std::size_t mask = 0; mask < en.log_weight.size(); ++mask)
            mixed += std::exp(en.log_weight[mask]) *
                     static_cast<double>(__builtin_popcountll(mask));
        std::ostringstream os;
        os << "difference " << std::abs(direct - mixed);
        detail::record(results, "enumeration-consistency", std::abs(direct - mixed) < 1e-10,
                       os.str());
    }

    // Structural cost: one apply and one adjoint per inner iteration.
    {
        GenConfig cfg;
        cfg.n = 64;
        cfg.m = 32;
        cfg.t = 1;
        cfg.params.set_lambda(0.15);
        cfg.params.alpha = 0.1;
        cfg.params.rho = rho_for_stationary_variance(1.0, 0.1);
        cfg.snr_db = 25.0;
        cfg.matrix_kind = MatrixKind::ImplicitSrht;
        cfg.seed = derive_seed(seed, 5);
        const auto inst = generate_instance<double>(cfg);
        auto counting = std::make_shared<CountingOperator<double>>(inst.problem.ops[0]);
        std::vector<LocalPrior<double>> priors(
            cfg.n, LocalPrior<double>{0.15, 0.0, 1.0});
        AmpOptions opt;
        opt.max_iters = 17;
        opt.early_exit = false;
        run_amp<double>(inst.problem.y[0], *counting, priors, inst.params_used.sigma_e2, opt);
        const bool pass = counting->applies() == 17 && counting->adjoints() == 17;
        std::ostringstream os;
        os << counting->applies() << " applies, " << counting->adjoints() << " adjoints for 17 iterations";
        detail::record(results, "inner-loop-operator-count", pass, os.str());
    }

    // Instance round-trip through the directory format.
    {
        GenConfig cfg;
        cfg.n = 12;
        cfg.m = 7;
        cfg.t = 3;
        cfg.beta = 0.3;
        cfg.params.set_lambda(0.3);
        cfg.params.alpha = 0.1;
        cfg.params.rho = rho_for_stationary_variance(1.0, 0.1);
        cfg.snr_db = 20.0;
        cfg.seed = derive_seed(seed, 6);
        const auto inst = generate_instance<double>(cfg);
        const std::string dir =
            (std::filesystem::temp_directory_path() / "ampmmv_selftest_instance").string();
        save_instance(dir, inst, cfg);
        const auto loaded = load_instance<double>(dir);
        double worst = 0.0;
        for (int t = 0; t < cfg.t; ++t)
            worst = std::max(worst, (loaded.problem.y[t] - inst.problem.y[t]).norm());
        worst = std::max(worst, (loaded.truth->signals - inst.truth.signals).norm());
        for (int t = 0; t < cfg.t; ++t)
            worst = std::max(worst,
                             (*loaded.problem.op(t).dense() - *inst.problem.op(t).dense()).norm());
        std::filesystem::remove_all(dir);
        std::ostringstream os;
        os << "max round-trip deviation " << worst;
        detail::record(results, "instance-round-trip", worst == 0.0, os.str());
    }

    return results;
}

}  // namespace ampmmv
