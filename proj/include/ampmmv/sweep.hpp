// Experiment sweeps: seeded trial grids, per-trial metrics, CSV emission.
#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <thread>
#include <vector>

#include "enumerate.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "sks.hpp"

namespace ampmmv {

enum class SweptParam { MOverK, T, SnrDb, NOverM, N, Beta };

inline const char* swept_param_name(SweptParam p) {
    switch (p) {
        case SweptParam::MOverK: return "M_over_K";
        case SweptParam::T: return "T";
        case SweptParam::SnrDb: return "snr_db";
        case SweptParam::NOverM: return "N_over_M";
        case SweptParam::N: return "N";
        case SweptParam::Beta: return "beta";
    }
    return "?";
}

inline SweptParam swept_param_from_name(const std::string& s) {
    if (s == "M_over_K") return SweptParam::MOverK;
    if (s == "T") return SweptParam::T;
    if (s == "snr_db") return SweptParam::SnrDb;
    if (s == "N_over_M") return SweptParam::NOverM;
    if (s == "N") return SweptParam::N;
    if (s == "beta") return SweptParam::Beta;
    throw std::invalid_argument("unknown swept parameter: " + s);
}

enum class Algo { AmpMmv, Sks, Enum };

inline const char* algo_name(Algo a) {
    switch (a) {
        case Algo::AmpMmv: return "amp-mmv";
        case Algo::Sks: return "sks";
        case Algo::Enum: return "enum";
    }
    return "?";
}

inline Algo algo_from_name(const std::string& s) {
    if (s == "amp-mmv") return Algo::AmpMmv;
    if (s == "sks") return Algo::Sks;
    if (s == "enum") return Algo::Enum;
    throw std::invalid_argument("unknown algorithm: " + s);
}

struct SweepSpec {
    SweptParam swept = SweptParam::MOverK;
    std::vector<double> grid;
    GenConfig base;
    SolverConfig solver;
    int trials = 50;
    std::vector<Algo> algorithms{Algo::AmpMmv, Algo::Sks};
    SupportRule support_rule = SupportRule::PosteriorThreshold;
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const {
        if (grid.empty()) throw std::invalid_argument("sweep grid is empty");
        if (trials < 1) throw std::invalid_argument("trials must be >= 1");
        if (algorithms.empty()) throw std::invalid_argument("no algorithms requested");
    }

    // Generation config at one grid point. Sweeping N rescales M to keep the
    // base undersampling ratio; sweeping M/K adjusts lambda at fixed M.
    GenConfig at(double value) const {
        GenConfig cfg = base;
        switch (swept) {
            case SweptParam::MOverK:
                cfg.params.set_lambda(static_cast<double>(cfg.m) /
                                      (value * static_cast<double>(cfg.n)));
                break;
            case SweptParam::T:
                cfg.t = static_cast<int>(std::lround(value));
                break;
            case SweptParam::SnrDb:
                cfg.snr_db = value;
                break;
            case SweptParam::NOverM:
                cfg.m = static_cast<int>(std::lround(cfg.n / value));
                break;
            case SweptParam::N: {
                const double ratio = static_cast<double>(base.m) / static_cast<double>(base.n);
                cfg.n = static_cast<int>(std::lround(value));
                cfg.m = static_cast<int>(std::lround(value * ratio));
                break;
            }
            case SweptParam::Beta:
                cfg.beta = value;
                break;
        }
        return cfg;
    }
};

struct TrialResult {
    double tnmse = std::numeric_limits<double>::quiet_NaN();
    double nser = std::numeric_limits<double>::quiet_NaN();
    double runtime_s = 0.0;
    bool ok = false;
    std::string error;
};

struct Aggregate {
    double tnmse_mean = 0.0, tnmse_stderr = 0.0;
    double nser_mean = 0.0, nser_stderr = 0.0;
    int ok = 0, failed = 0;
    bool flagged = false;  // > 20% of trials failed
};

struct SweepResults {
    SweepSpec spec;
    // trials[grid][algorithm][trial]
    std::vector<std::vector<std::vector<TrialResult>>> trials;

    Aggregate aggregate(int grid_idx, int algo_idx) const {
        const auto& tr = trials[grid_idx][algo_idx];
        Aggregate agg;
        double st = 0.0, st2 = 0.0, sn = 0.0, sn2 = 0.0;
        for (const auto& r : tr) {
            if (!r.ok) {
                ++agg.failed;
                continue;
            }
            ++agg.ok;
            st += r.tnmse;
            st2 += r.tnmse * r.tnmse;
            sn += r.nser;
            sn2 += r.nser * r.nser;
        }
        if (agg.ok > 0) {
            agg.tnmse_mean = st / agg.ok;
            agg.nser_mean = sn / agg.ok;
            if (agg.ok > 1) {
                const double vt = std::max(st2 / agg.ok - agg.tnmse_mean * agg.tnmse_mean, 0.0);
                const double vn = std::max(sn2 / agg.ok - agg.nser_mean * agg.nser_mean, 0.0);
                agg.tnmse_stderr = std::sqrt(vt / (agg.ok - 1));
                agg.nser_stderr = std::sqrt(vn / (agg.ok - 1));
            }
        }
        agg.flagged = agg.failed * 5 > (agg.ok + agg.failed);
        return agg;
    }
};

namespace detail {

template <typename Scalar>
TrialResult run_algorithm(Algo algo, const GeneratedInstance<Scalar>& inst,
                          const SweepSpec& spec) {
    TrialResult res;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        Matrix<Scalar> x_hat;
        std::vector<int> support_hat;
        const std::vector<int> support_true = support_from_mask(inst.truth.support);
        switch (algo) {
            case Algo::AmpMmv: {
                const ModelParams start = spec.solver.em_enabled
                                              ? em_default_init(inst.problem)
                                              : inst.params_used;
                const auto sol = solve(inst.problem, start, spec.solver);
                x_hat = sol.summary.x_mean;
                support_hat = spec.support_rule == SupportRule::KLargest
                                  ? estimate_support(sol.summary, SupportRule::KLargest,
                                                     inst.truth.k)
                                  : estimate_support(sol.summary, SupportRule::PosteriorThreshold);
                break;
            }
            case Algo::Sks: {
                SksInput<Scalar> in{&inst.problem, inst.truth.support, inst.params_used};
                const auto sks = sks_smooth(in);
                x_hat = sks.x_hat;
                support_hat = support_true;  // oracle-aided by definition
                break;
            }
            case Algo::Enum: {
                const auto en = enumerate_mmse(inst.problem, inst.params_used);
                x_hat = en.x_mmse;
                if (spec.support_rule == SupportRule::KLargest) {
                    PosteriorSummary<Scalar> tmp;
                    tmp.x_mean = en.x_mmse;
                    tmp.s_post = en.support_post;
                    support_hat = estimate_support(tmp, SupportRule::KLargest, inst.truth.k);
                } else {
                    for (int i = 0; i < inst.problem.n; ++i)
                        if (en.support_post[i] > 0.5) support_hat.push_back(i);
                }
                break;
            }
        }
        res.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.tnmse = tnmse(inst.truth.signals, x_hat).value;
        res.nser = nser(support_true, support_hat);
        res.ok = true;
    } catch (const std::exception& e) {
        res.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.error = e.what();
    }
    return res;
}

}  // namespace detail

// Runs grid x trials x algorithms. Every trial derives its own RNG stream
// from (seed, grid index, trial index), so thread count does not affect any
// result.
template <typename Scalar>
SweepResults run_sweep(const SweepSpec& spec) {
    spec.validate();
    SweepResults out;
    out.spec = spec;
    const int g_count = static_cast<int>(spec.grid.size());
    const int a_count = static_cast<int>(spec.algorithms.size());
    out.trials.assign(g_count, std::vector<std::vector<TrialResult>>(
                                   a_count, std::vector<TrialResult>(spec.trials)));

    const int total_tasks = g_count * spec.trials;
    std::atomic<int> next{0};
    const unsigned hw = std::thread::hardware_concurrency();
    const int n_threads =
        spec.threads > 0 ? spec.threads : static_cast<int>(hw > 0 ? hw : 1);

    auto worker = [&]() {
        for (;;) {
            const int task = next.fetch_add(1);
            if (task >= total_tasks) return;
            const int g = task / spec.trials;
            const int trial = task % spec.trials;
            GenConfig cfg = spec.at(spec.grid[g]);
            cfg.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(g),
                                   static_cast<std::uint64_t>(trial));
            GeneratedInstance<Scalar> inst;
            try {
                inst = generate_instance<Scalar>(cfg);
            } catch (const std::exception& e) {
                for (int a = 0; a < a_count; ++a)
                    out.trials[g][a][trial].error = e.what();
                continue;
            }
            for (int a = 0; a < a_count; ++a)
                out.trials[g][a][trial] =
                    detail::run_algorithm(spec.algorithms[a], inst, spec);
        }
    };

    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return out;
}

namespace detail {

inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline json sweep_spec_to_json(const SweepSpec& spec) {
    json algos = json::array();
    for (Algo a : spec.algorithms) algos.push_back(algo_name(a));
    return json{{"swept_parameter", swept_param_name(spec.swept)},
                {"grid", spec.grid},
                {"trials", spec.trials},
                {"algorithms", algos},
                {"support_rule", support_rule_name(spec.support_rule)},
                {"seed", spec.seed},
                {"threads", spec.threads},
                {"base", gen_config_to_json(spec.base)},
                {"solver", solver_config_to_json(spec.solver)}};
}

inline SweepSpec sweep_spec_from_json(const json& j) {
    SweepSpec spec;
    spec.swept = swept_param_from_name(j.at("swept_parameter").get<std::string>());
    spec.grid = j.at("grid").get<std::vector<double>>();
    spec.trials = j.value("trials", spec.trials);
    if (j.contains("algorithms")) {
        spec.algorithms.clear();
        for (const auto& a : j.at("algorithms"))
            spec.algorithms.push_back(algo_from_name(a.get<std::string>()));
    }
    if (j.contains("support_rule"))
        spec.support_rule = support_rule_from_name(j.at("support_rule").get<std::string>());
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.threads = j.value("threads", 0);
    spec.base = gen_config_from_json(j.at("base"));
    if (j.contains("solver")) spec.solver = solver_config_from_json(j.at("solver"));
    return spec;
}

// results.csv and aggregate.csv carry the metrics and are byte-deterministic
// for a fixed seed; wall-clock timings live in timings.csv.
inline void write_sweep_csvs(const std::string& dir, const SweepResults& res) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto& spec = res.spec;

    std::ofstream rf(fs::path(dir) / "results.csv");
    rf << "grid_value,algorithm,trial,tnmse_db,nser,status\n";
    std::ofstream tf(fs::path(dir) / "timings.csv");
    tf << "grid_value,algorithm,trial,runtime_s\n";
    for (std::size_t g = 0; g < spec.grid.size(); ++g)
        for (std::size_t a = 0; a < spec.algorithms.size(); ++a)
            for (int i = 0; i < spec.trials; ++i) {
                const auto& r = res.trials[g][a][i];
                rf << detail::fmt_double(spec.grid[g]) << ',' << algo_name(spec.algorithms[a])
                   << ',' << i << ',' << detail::fmt_double(r.ok ? to_db(r.tnmse) : NAN) << ','
                   << detail::fmt_double(r.ok ? r.nser : NAN) << ','
                   << (r.ok ? "ok" : "failed") << "\n";
                tf << detail::fmt_double(spec.grid[g]) << ',' << algo_name(spec.algorithms[a])
                   << ',' << i << ',' << detail::fmt_double(r.runtime_s) << "\n";
            }

    std::ofstream af(fs::path(dir) / "aggregate.csv");
    af << "grid_value,algorithm,trials_ok,trials_failed,flagged,tnmse_mean,tnmse_db,"
          "tnmse_stderr,nser_mean,nser_stderr\n";
    for (std::size_t g = 0; g < spec.grid.size(); ++g)
        for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
            const Aggregate agg = res.aggregate(static_cast<int>(g), static_cast<int>(a));
            af << detail::fmt_double(spec.grid[g]) << ',' << algo_name(spec.algorithms[a]) << ','
               << agg.ok << ',' << agg.failed << ',' << (agg.flagged ? 1 : 0) << ','
               << detail::fmt_double(agg.tnmse_mean) << ','
               << detail::fmt_double(agg.ok ? to_db(agg.tnmse_mean) : NAN) << ','
               << detail::fmt_double(agg.tnmse_stderr) << ','
               << detail::fmt_double(agg.nser_mean) << ','
               << detail::fmt_double(agg.nser_stderr) << "\n";
        }

    std::ofstream mf(fs::path(dir) / "manifest.json");
    mf << sweep_spec_to_json(res.spec).dump(2) << "\n";
}

}  // namespace ampmmv
