// Command-line harness: instance generation, recovery, the oracle smoother,
// experiment sweeps, and the oracle-equivalence self test.
#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <ampmmv/ampmmv.hpp>

namespace {

using ampmmv::json;

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    return json::parse(f);
}

struct GenCli {
    std::string out;
    std::string config;
    int n = 0, m = 0, t = 1;
    double lambda = -1.0;
    double zeta_re = 0.0, zeta_im = 0.0;
    double alpha = -1.0;
    double rho = -1.0;
    double stationary_var = -1.0;
    double sigma_e2 = -1.0;
    double snr_db = std::numeric_limits<double>::quiet_NaN();
    double beta = -1.0;
    int exact_k = -1;
    std::string matrix_kind;
    std::string field;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

ampmmv::GenConfig resolve_gen_config(const GenCli& cli) {
    ampmmv::GenConfig cfg;
    if (!cli.config.empty()) cfg = ampmmv::gen_config_from_json(load_json_file(cli.config));
    if (cli.n > 0) cfg.n = cli.n;
    if (cli.m > 0) cfg.m = cli.m;
    if (cli.t > 0) cfg.t = cli.t;
    if (cli.lambda >= 0.0) cfg.params.set_lambda(cli.lambda);
    if (cli.zeta_re != 0.0 || cli.zeta_im != 0.0) cfg.params.zeta = {cli.zeta_re, cli.zeta_im};
    if (cli.alpha >= 0.0) cfg.params.alpha = cli.alpha;
    if (cli.rho > 0.0) cfg.params.rho = cli.rho;
    if (cli.stationary_var > 0.0)
        cfg.params.rho = ampmmv::rho_for_stationary_variance(cli.stationary_var, cfg.params.alpha);
    if (cli.sigma_e2 >= 0.0) cfg.params.sigma_e2 = cli.sigma_e2;
    if (!std::isnan(cli.snr_db)) cfg.snr_db = cli.snr_db;
    if (cli.beta >= 0.0) cfg.beta = cli.beta;
    if (cli.exact_k >= 0) cfg.exact_k = cli.exact_k;
    if (!cli.matrix_kind.empty()) cfg.matrix_kind = ampmmv::matrix_kind_from_name(cli.matrix_kind);
    if (!cli.field.empty()) cfg.field = ampmmv::field_from_name(cli.field);
    if (cli.seed_set) cfg.seed = cli.seed;
    return cfg;
}

template <typename Scalar>
int do_gen(const ampmmv::GenConfig& cfg, const std::string& out) {
    const auto inst = ampmmv::generate_instance<Scalar>(cfg);
    ampmmv::save_instance(out, inst, cfg);
    std::printf("wrote instance to %s (N=%d M=%d T=%d K=%d field=%s sigma_e2=%.6g)\n",
                out.c_str(), cfg.n, cfg.m, cfg.t, inst.truth.k, ampmmv::field_name<Scalar>(),
                inst.params_used.sigma_e2);
    return 0;
}

template <typename Scalar>
int do_solve(const std::string& in, const std::string& out, const std::string& diag_path,
             ampmmv::SolverConfig solver, bool use_true_params) {
    using namespace ampmmv;
    const auto loaded = load_instance<Scalar>(in);
    const ModelParams start = (solver.em_enabled && !use_true_params)
                                  ? em_default_init(loaded.problem)
                                  : loaded.params;
    const auto t0 = std::chrono::steady_clock::now();
    const auto sol = solve(loaded.problem, start, solver);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::printf("solve: %d passes, %d escalations, residual %.6g, %.3f s\n",
                sol.diagnostics.total_passes, sol.diagnostics.escalations,
                sol.diagnostics.final_residual, secs);
    json extra{{"passes", sol.diagnostics.total_passes},
               {"escalations", sol.diagnostics.escalations},
               {"residual", sol.diagnostics.final_residual},
               {"runtime_s", secs},
               {"final_params", params_to_json(sol.diagnostics.final_params)}};

    if (loaded.truth) {
        const auto tn = tnmse(loaded.truth->signals, sol.summary.x_mean);
        const auto s_true = support_from_mask(loaded.truth->support);
        const auto s_thresh = estimate_support(sol.summary, SupportRule::PosteriorThreshold);
        const auto s_klargest =
            estimate_support(sol.summary, SupportRule::KLargest, loaded.truth->k);
        const double nser_thresh = nser(s_true, s_thresh);
        const double nser_kl = nser(s_true, s_klargest);
        std::printf("tnmse: %.4f dB, nser(posterior-threshold): %.4f, nser(k-largest): %.4f\n",
                    to_db(tn.value), nser_thresh, nser_kl);
        extra["tnmse_db"] = to_db(tn.value);
        extra["nser_posterior_threshold"] = nser_thresh;
        extra["nser_k_largest"] = nser_kl;
    }
    if (!out.empty()) save_posterior(out, sol.summary, extra);
    if (!diag_path.empty()) write_diagnostics_jsonl(diag_path, sol.diagnostics);
    return 0;
}

template <typename Scalar>
int do_sks(const std::string& in, const std::string& out) {
    using namespace ampmmv;
    const auto loaded = load_instance<Scalar>(in);
    if (!loaded.truth)
        throw std::runtime_error("sks requires an instance directory with ground truth");
    SksInput<Scalar> input{&loaded.problem, loaded.truth->support, loaded.params};
    const auto t0 = std::chrono::steady_clock::now();
    const auto sks = sks_smooth(input);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto tn = tnmse(loaded.truth->signals, sks.x_hat);
    std::printf("sks: tnmse %.4f dB, log-evidence %.6g, %.3f s%s\n", to_db(tn.value),
                sks.log_evidence, secs, sks.jitter_applied ? " (jitter applied)" : "");
    if (!out.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(out);
        detail::write_doubles(fs::path(out) / "x_hat.bin",
                              detail::flatten_row_major(sks.x_hat));
        detail::write_doubles(fs::path(out) / "theta_hat.bin",
                              detail::flatten_row_major(sks.theta_hat));
        detail::write_doubles(fs::path(out) / "theta_var.bin",
                              detail::flatten_row_major(sks.theta_var));
        json meta{{"format", "ampmmv-sks"},
                  {"tnmse_db", to_db(tn.value)},
                  {"log_evidence", sks.log_evidence},
                  {"jitter_applied", sks.jitter_applied},
                  {"runtime_s", secs}};
        std::ofstream mf(fs::path(out) / "summary.json");
        mf << meta.dump(2) << "\n";
    }
    return 0;
}

int do_sweep(const std::string& spec_path, const std::string& out, std::uint64_t seed,
             std::optional<int> trials, std::optional<int> threads) {
    using namespace ampmmv;
    SweepSpec spec = sweep_spec_from_json(load_json_file(spec_path));
    spec.seed = seed;
    if (trials) spec.trials = *trials;
    if (threads) spec.threads = *threads;
    if (spec.base.field != Field::Real)
        throw std::runtime_error("sweeps are defined for real-valued instances");
    const auto results = run_sweep<double>(spec);
    write_sweep_csvs(out, results);
    for (std::size_t g = 0; g < spec.grid.size(); ++g)
        for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
            const auto agg = results.aggregate(static_cast<int>(g), static_cast<int>(a));
            std::printf("%-10s %s=%-8g tnmse %8.3f dB  nser %.4f  (%d ok, %d failed%s)\n",
                        algo_name(spec.algorithms[a]), swept_param_name(spec.swept),
                        spec.grid[g], to_db(agg.tnmse_mean), agg.nser_mean, agg.ok, agg.failed,
                        agg.flagged ? ", FLAGGED" : "");
        }
    std::printf("wrote %s/{results,timings,aggregate}.csv and manifest.json\n", out.c_str());
    return 0;
}

int do_selftest() {
    const auto results = ampmmv::run_selftest();
    bool all = true;
    for (const auto& r : results) {
        std::printf("[%s] %-34s %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
        all = all && r.pass;
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AMP-MMV joint-sparse recovery toolkit"};
    app.require_subcommand(1);

    // --- gen ---
    GenCli gen;
    auto* cmd_gen = app.add_subcommand("gen", "generate a synthetic instance directory");
    cmd_gen->add_option("--out", gen.out, "output directory")->required();
    cmd_gen->add_option("--config", gen.config, "JSON generation config (flags override)");
    cmd_gen->add_option("--n", gen.n, "signal dimension");
    cmd_gen->add_option("--m", gen.m, "measurements per frame");
    cmd_gen->add_option("--t", gen.t, "number of frames");
    cmd_gen->add_option("--lambda", gen.lambda, "activity probability");
    cmd_gen->add_option("--zeta-re", gen.zeta_re, "amplitude mean (real part)");
    cmd_gen->add_option("--zeta-im", gen.zeta_im, "amplitude mean (imaginary part)");
    cmd_gen->add_option("--alpha", gen.alpha, "innovation rate in [0,1]");
    cmd_gen->add_option("--rho", gen.rho, "perturbation variance");
    cmd_gen->add_option("--stationary-var", gen.stationary_var,
                        "set rho from a target stationary variance");
    cmd_gen->add_option("--sigma-e2", gen.sigma_e2, "noise variance");
    cmd_gen->add_option("--snr-db", gen.snr_db, "target SNR in dB (overrides sigma-e2)");
    cmd_gen->add_option("--beta", gen.beta, "matrix innovation rate in [0,1]");
    cmd_gen->add_option("--exact-k", gen.exact_k, "draw a support of exactly K indices");
    cmd_gen->add_option("--matrix", gen.matrix_kind, "dense|implicit");
    cmd_gen->add_option("--field", gen.field, "real|complex");
    cmd_gen->add_option("--seed", gen.seed, "RNG seed")->each([&](const std::string&) {
        gen.seed_set = true;
    });

    // --- solve ---
    std::string solve_in, solve_out, solve_diag, solve_config, solve_schedule;
    int solve_passes = -1, solve_inner = -1, solve_escalations = -1;
    double solve_epsilon = -1.0, solve_threshold = -1.0, solve_damping = -1.0;
    bool solve_em = false, solve_no_em = false, solve_true_params = false;
    auto* cmd_solve = app.add_subcommand("solve", "run recovery on an instance directory");
    cmd_solve->add_option("--in", solve_in, "instance directory")->required();
    cmd_solve->add_option("--out", solve_out, "posterior output directory");
    cmd_solve->add_option("--diagnostics", solve_diag, "per-pass JSON-lines file");
    cmd_solve->add_option("--config", solve_config, "JSON solver config (flags override)");
    cmd_solve->add_option("--schedule", solve_schedule, "serial|parallel");
    cmd_solve->add_option("--max-passes", solve_passes, "smoothing pass budget");
    cmd_solve->add_option("--inner-iters", solve_inner, "AMP iterations per frame");
    cmd_solve->add_option("--epsilon", solve_epsilon, "improper-message repair epsilon");
    cmd_solve->add_option("--residual-threshold", solve_threshold,
                          "escalation threshold (multiples of T*M*sigma_e2)");
    cmd_solve->add_option("--max-escalations", solve_escalations, "escalation budget");
    cmd_solve->add_option("--damping", solve_damping, "inner-loop damping weight");
    cmd_solve->add_flag("--em", solve_em, "learn parameters by EM (default)");
    cmd_solve->add_flag("--no-em", solve_no_em, "disable EM");
    cmd_solve->add_flag("--true-params", solve_true_params,
                        "start from the stored instance parameters");

    // --- sks ---
    std::string sks_in, sks_out;
    auto* cmd_sks = app.add_subcommand("sks", "support-aware smoother on an instance directory");
    cmd_sks->add_option("--in", sks_in, "instance directory")->required();
    cmd_sks->add_option("--out", sks_out, "output directory");

    // --- sweep ---
    std::string sweep_spec, sweep_out;
    std::uint64_t sweep_seed = 0;
    int sweep_trials = -1, sweep_threads = -1;
    auto* cmd_sweep = app.add_subcommand("sweep", "run an experiment sweep from a JSON spec");
    cmd_sweep->add_option("--spec", sweep_spec, "sweep spec JSON file")->required();
    cmd_sweep->add_option("--out", sweep_out, "output directory")->required();
    cmd_sweep->add_option("--seed", sweep_seed, "RNG seed")->required();
    cmd_sweep->add_option("--trials", sweep_trials, "override trial count");
    cmd_sweep->add_option("--threads", sweep_threads, "worker threads (0 = auto)");

    // --- selftest ---
    app.add_subcommand("selftest", "run the oracle-equivalence suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_gen->parsed()) {
            const auto cfg = resolve_gen_config(gen);
            return cfg.field == ampmmv::Field::Complex
                       ? do_gen<std::complex<double>>(cfg, gen.out)
                       : do_gen<double>(cfg, gen.out);
        }
        if (cmd_solve->parsed()) {
            ampmmv::SolverConfig solver;
            solver.em_enabled = true;
            if (!solve_config.empty())
                solver = ampmmv::solver_config_from_json(load_json_file(solve_config));
            if (!solve_schedule.empty())
                solver.schedule = solve_schedule == "parallel" ? ampmmv::Schedule::Parallel
                                                               : ampmmv::Schedule::Serial;
            if (solve_passes > 0) solver.max_passes = solve_passes;
            if (solve_inner > 0) solver.inner_iters = solve_inner;
            if (solve_epsilon > 0.0) solver.epsilon = solve_epsilon;
            if (solve_threshold >= 0.0) solver.residual_switch_threshold = solve_threshold;
            if (solve_escalations >= 0) solver.max_escalations = solve_escalations;
            if (solve_damping > 0.0) solver.damping = solve_damping;
            if (solve_em) solver.em_enabled = true;
            if (solve_no_em) solver.em_enabled = false;
            return ampmmv::peek_instance_field(solve_in) == ampmmv::Field::Complex
                       ? do_solve<std::complex<double>>(solve_in, solve_out, solve_diag, solver,
                                                        solve_true_params)
                       : do_solve<double>(solve_in, solve_out, solve_diag, solver,
                                          solve_true_params);
        }
        if (cmd_sks->parsed()) {
            return ampmmv::peek_instance_field(sks_in) == ampmmv::Field::Complex
                       ? do_sks<std::complex<double>>(sks_in, sks_out)
                       : do_sks<double>(sks_in, sks_out);
        }
        if (cmd_sweep->parsed()) {
            return do_sweep(sweep_spec, sweep_out, sweep_seed,
                            sweep_trials > 0 ? std::optional<int>(sweep_trials) : std::nullopt,
                            sweep_threads >= 0 ? std::optional<int>(sweep_threads)
                                               : std::nullopt);
        }
        return do_selftest();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
