// Factor-graph message passing over the full frame sequence.
//
// Each smoothing pass runs four phases per frame: activity and amplitude
// beliefs move (into) the frame, AMP runs (within) it, refined beliefs move
// (out), and Gaussian messages travel (across) neighboring frames. The
// serial schedule sweeps frames forward then backward; the parallel
// schedule updates all frames simultaneously between across sweeps.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "amp.hpp"
#include "em.hpp"
#include "gaussian_msg.hpp"
#include "model.hpp"
#include "summary.hpp"
#include "taylor.hpp"
#include "thresholding.hpp"

namespace ampmmv {

enum class Schedule { Serial, Parallel };

inline const char* schedule_name(Schedule s) {
    return s == Schedule::Serial ? "serial" : "parallel";
}

inline Schedule other_schedule(Schedule s) {
    return s == Schedule::Serial ? Schedule::Parallel : Schedule::Serial;
}

struct SolverConfig {
    Schedule schedule = Schedule::Serial;
    int max_passes = 25;
    int inner_iters = 25;
    double epsilon = 1e-7;                    // mass of the improper-message repair
    double residual_switch_threshold = 10.0;  // multiples of T*M*sigma_e2
    int max_escalations = 3;
    bool em_enabled = false;
    EmConfig em;
    double x_change_tol = 1e-8;
    bool warm_start = true;
    bool fixed_iterations = false;  // disable early exits (timing runs)
    double damping = 1.0;
    std::uint64_t seed = 0;
    // Testing hook: when nonempty, the per-frame activity priors are clamped
    // to this binary support.
    std::vector<std::uint8_t> support_clamp;

    void validate() const {
        if (!(epsilon > 0.0 && epsilon <= 1e-3))
            throw std::invalid_argument("epsilon must lie in (0, 1e-3]");
        if (max_passes < 1) throw std::invalid_argument("max_passes must be >= 1");
        if (inner_iters < 1) throw std::invalid_argument("inner_iters must be >= 1");
        if (max_escalations < 0) throw std::invalid_argument("max_escalations must be >= 0");
    }
};

struct SolveError : std::runtime_error {
    SolveError(const std::string& what, int frame_, int pass_)
        : std::runtime_error(what + " (frame " + std::to_string(frame_) + ", pass " +
                             std::to_string(pass_) + ")"),
          frame(frame_), pass(pass_) {}
    int frame;
    int pass;
};

struct PassRecord {
    int pass = 0;
    Schedule schedule = Schedule::Serial;
    double residual = 0.0;   // sum_t ||y^(t) - A^(t) x_hat^(t)||^2
    double x_change = 0.0;   // squared change in x_mean relative to previous pass
    ModelParams params;      // parameters in effect after this pass
};

struct SolveDiagnostics {
    std::vector<PassRecord> passes;  // concatenated over escalation runs
    int escalations = 0;
    int total_passes = 0;
    double final_residual = 0.0;
    Schedule final_schedule = Schedule::Serial;
    ModelParams final_params;
};

// Directional message arrays over the (n, t) grid.
template <typename Scalar>
struct MsgArray {
    Matrix<double> prec;
    Matrix<Scalar> pwm;

    void init(int n, int t) {
        prec = Matrix<double>::Zero(n, t);
        pwm = Matrix<Scalar>::Zero(n, t);
    }
    GaussianMsg<Scalar> get(int n, int t) const { return {prec(n, t), pwm(n, t)}; }
    void set(int n, int t, const GaussianMsg<Scalar>& g) {
        prec(n, t) = g.prec;
        pwm(n, t) = g.pwm;
    }
};

template <typename Scalar>
struct MessageState {
    Matrix<double> pi_fwd;  // activity beliefs leaving each frame
    Matrix<double> pi_bwd;  // activity priors entering each frame
    Matrix<Scalar> xi_into;   // amplitude prior means entering each frame
    Matrix<double> psi_into;  // amplitude prior variances entering each frame
    MsgArray<Scalar> theta_out;   // frame-to-amplitude messages
    MsgArray<Scalar> across_fwd;  // d^(t) -> theta^(t) messages
    MsgArray<Scalar> across_bwd;  // d^(t+1) -> theta^(t) messages
    std::vector<std::optional<AmpState<Scalar>>> amp;  // per-frame AMP state
};

// Activity prior entering frame `skip`: the product of the prior odds with
// the activity beliefs of every other frame, in log domain. Agnostic factors
// of exactly 1/2 cancel between the two hypotheses and are skipped, so an
// all-agnostic (or single-frame) product returns lambda itself.
inline double into_activity(double lambda, const double* pi_fwd_row, int t_total, int skip) {
    if (lambda <= 0.0) return 0.0;
    if (lambda >= 1.0) return 1.0;
    constexpr double kFloor = 1e-300;
    double log_on = 0.0;
    double log_off = 0.0;
    int contributing = 0;
    for (int t = 0; t < t_total; ++t) {
        if (t == skip || pi_fwd_row[t] == 0.5) continue;
        log_on += std::log(std::max(pi_fwd_row[t], kFloor));
        log_off += std::log(std::max(1.0 - pi_fwd_row[t], kFloor));
        ++contributing;
    }
    if (contributing == 0) return lambda;
    log_on += std::log(lambda);
    log_off += std::log1p(-lambda);
    return 1.0 / (1.0 + std::exp(log_off - log_on));
}

// Posterior activity probability combining all T frames (same product
// without a skipped frame).
inline double posterior_activity(double lambda, const double* pi_fwd_row, int t_total) {
    return into_activity(lambda, pi_fwd_row, t_total, -1);
}

// Activity belief leaving a frame. The prior odds cancel against gamma's
// leading factor, leaving the pure two-hypothesis likelihood ratio; exact
// 0/1 priors short-circuit to certainty.
template <typename Scalar>
double out_activity(const Scalar& phi, double c, const LocalPrior<Scalar>& prior) {
    if (prior.pi <= 0.0) return 0.0;
    if (prior.pi >= 1.0) return 1.0;
    const double llr = detail::log_likelihood_ratio(phi, c, prior);
    if (llr > 700.0) return 0.0;
    if (llr < -700.0) return 1.0;
    return 1.0 / (1.0 + std::exp(llr));
}

// Cross-moment E[conj(theta^(t+1)) theta^(t)] of the pairwise Gaussian joint
// at a transition factor. `left` fuses everything reaching theta^(t) except
// the factor itself; `right` fuses everything reaching theta^(t+1) except
// the factor. The joint is the prior chain pushed through the transition and
// conditioned on `right`.
template <typename Scalar>
Scalar pairwise_lag1_moment(const GaussianMsg<Scalar>& left, const GaussianMsg<Scalar>& right,
                            double alpha, const Scalar& zeta, double rho) {
    using FT = field_traits<Scalar>;
    const double a = 1.0 - alpha;
    if (!left.informative()) {
        const Scalar mt = right.informative() ? right.mean() : zeta;
        return FT::conj(mt) * zeta;
    }
    const Scalar mu_u = left.mean();
    const double s_uu = left.variance();
    const Scalar mu_v = a * mu_u + alpha * zeta;
    const double s_vv = a * a * s_uu + alpha * alpha * rho;
    const double s_uv = a * s_uu;
    if (!right.informative()) return Scalar(s_uv) + mu_u * FT::conj(mu_v);
    const double denom = s_vv + right.variance();
    const Scalar innov = right.mean() - mu_v;
    const Scalar mu_u_post = mu_u + (s_uv / denom) * innov;
    const Scalar mu_v_post = mu_v + (s_vv / denom) * innov;
    const double s_uv_post = s_uv * right.variance() / denom;
    return Scalar(s_uv_post) + mu_u_post * FT::conj(mu_v_post);
}

template <typename Scalar>
class MmvEngine {
  public:
    MmvEngine(const MmvProblem<Scalar>& problem, const ModelParams& params,
              const SolverConfig& cfg)
        : prob_(problem), params_(params), cfg_(cfg) {
        prob_.validate();
        cfg_.validate();
        params_.validate(prob_.n);
        if (!cfg_.support_clamp.empty() &&
            static_cast<int>(cfg_.support_clamp.size()) != prob_.n)
            throw std::invalid_argument("support_clamp size mismatch");
        reset();
    }

    void reset() {
        const int n = prob_.n, t = prob_.t;
        st_.pi_fwd = Matrix<double>::Constant(n, t, 0.5);
        st_.pi_bwd = Matrix<double>::Zero(n, t);
        st_.xi_into = Matrix<Scalar>::Zero(n, t);
        st_.psi_into = Matrix<double>::Zero(n, t);
        st_.theta_out.init(n, t);
        st_.across_fwd.init(n, t);
        st_.across_bwd.init(n, t);
        st_.amp.assign(t, std::nullopt);
        reset_prior_boundary();
        x_prev_.resize(0, 0);
        pass_ = 0;
    }

    void set_params(const ModelParams& p) {
        params_ = p;
        params_.validate(prob_.n);
        reset_prior_boundary();
    }
    const ModelParams& params() const { return params_; }
    const MessageState<Scalar>& state() const { return st_; }
    int passes() const { return pass_; }

    // One smoothing pass under the given schedule. Returns the squared
    // change in x_mean relative to the previous pass.
    double run_pass(Schedule schedule) {
        ++pass_;
        if (schedule == Schedule::Serial) {
            for (int t = 0; t < prob_.t; ++t) {
                visit_frame(t);
                if (t + 1 < prob_.t) update_across_fwd(t);
            }
            for (int t = prob_.t - 2; t >= 0; --t) {
                update_across_bwd(t);
                visit_frame(t);
            }
        } else {
            for (int t = 0; t < prob_.t; ++t) into_phase(t);
            for (int t = 0; t < prob_.t; ++t) within_phase(t);
            for (int t = 0; t < prob_.t; ++t) out_phase(t);
            for (int t = 0; t + 1 < prob_.t; ++t) update_across_fwd(t);
            for (int t = prob_.t - 1; t >= 1; --t) update_across_bwd(t - 1);
        }
        check_activity_messages();

        Matrix<Scalar> x = x_mean();
        double change = std::numeric_limits<double>::infinity();
        if (x_prev_.size() != 0) change = (x - x_prev_).squaredNorm();
        x_prev_ = std::move(x);
        return change;
    }

    Matrix<Scalar> x_mean() const {
        Matrix<Scalar> x = Matrix<Scalar>::Zero(prob_.n, prob_.t);
        for (int t = 0; t < prob_.t; ++t)
            if (st_.amp[t]) x.col(t) = st_.amp[t]->mu;
        return x;
    }

    double residual_energy() const {
        double acc = 0.0;
        for (int t = 0; t < prob_.t; ++t) {
            const Vector<Scalar> xhat =
                st_.amp[t] ? st_.amp[t]->mu : Vector<Scalar>::Zero(prob_.n);
            acc += (prob_.y[t] - prob_.op(t).apply(xhat)).squaredNorm();
        }
        return acc;
    }

    PosteriorSummary<Scalar> summarize() const {
        const int n = prob_.n, t = prob_.t;
        PosteriorSummary<Scalar> s;
        s.x_mean.resize(n, t);
        s.x_var.resize(n, t);
        for (int j = 0; j < t; ++j) {
            if (!st_.amp[j]) throw std::logic_error("summarize before any pass");
            s.x_mean.col(j) = st_.amp[j]->mu;
            s.x_var.col(j) = st_.amp[j]->v;
        }

        s.s_post.resize(n);
        std::vector<double> row(t);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < t; ++j) row[j] = st_.pi_fwd(i, j);
            s.s_post[i] = cfg_.support_clamp.empty()
                              ? posterior_activity(params_.lambda_at(i), row.data(), t)
                              : static_cast<double>(cfg_.support_clamp[i]);
        }

        const double sigma2 = steady_state_variance(params_);
        const Scalar zeta = params_.zeta_as<Scalar>();
        s.theta_mean.resize(n, t);
        s.theta_var.resize(n, t);
        for (int j = 0; j < t; ++j)
            for (int i = 0; i < n; ++i) {
                const auto belief = fuse(st_.across_fwd.get(i, j), st_.theta_out.get(i, j),
                                         st_.across_bwd.get(i, j));
                if (belief.informative()) {
                    s.theta_mean(i, j) = belief.mean();
                    s.theta_var(i, j) = belief.variance();
                } else {
                    s.theta_mean(i, j) = zeta;
                    s.theta_var(i, j) = sigma2;
                }
            }

        s.theta_lag1.resize(n, std::max(t - 1, 0));
        for (int j = 0; j + 1 < t; ++j)
            for (int i = 0; i < n; ++i) s.theta_lag1(i, j) = lag1_cross_moment(i, j);
        return s;
    }

  private:
    void reset_prior_boundary() {
        const double sigma2 = steady_state_variance(params_);
        const Scalar zeta = params_.zeta_as<Scalar>();
        const auto prior = GaussianMsg<Scalar>::from_moments(zeta, sigma2);
        if (st_.across_fwd.prec.size() == 0) return;
        for (int i = 0; i < prob_.n; ++i) st_.across_fwd.set(i, 0, prior);
    }

    void visit_frame(int t) {
        into_phase(t);
        within_phase(t);
        out_phase(t);
    }

    void into_phase(int t) {
        const int n = prob_.n;
        const double sigma2 = steady_state_variance(params_);
        const Scalar zeta = params_.zeta_as<Scalar>();
        std::vector<double> row(prob_.t);
        for (int i = 0; i < n; ++i) {
            if (!cfg_.support_clamp.empty()) {
                st_.pi_bwd(i, t) = static_cast<double>(cfg_.support_clamp[i]);
            } else {
                for (int j = 0; j < prob_.t; ++j) row[j] = st_.pi_fwd(i, j);
                st_.pi_bwd(i, t) = into_activity(params_.lambda_at(i), row.data(), prob_.t, t);
            }
            const auto combined = fuse(st_.across_fwd.get(i, t), st_.across_bwd.get(i, t));
            if (combined.informative()) {
                st_.xi_into(i, t) = combined.mean();
                st_.psi_into(i, t) = combined.variance();
            } else {
                st_.xi_into(i, t) = zeta;   // prior-only fallback
                st_.psi_into(i, t) = sigma2;
            }
        }
    }

    void within_phase(int t) {
        const int n = prob_.n;
        std::vector<LocalPrior<Scalar>> priors(n);
        for (int i = 0; i < n; ++i)
            priors[i] = {st_.pi_bwd(i, t), st_.xi_into(i, t), st_.psi_into(i, t)};
        AmpOptions opt;
        opt.max_iters = cfg_.inner_iters;
        opt.early_exit = !cfg_.fixed_iterations;
        opt.damping = cfg_.damping;
        std::optional<AmpState<Scalar>> init;
        if (cfg_.warm_start && st_.amp[t]) init = st_.amp[t];
        try {
            st_.amp[t] = run_amp(prob_.y[t], prob_.op(t), priors, params_.sigma_e2, opt, init);
        } catch (const AmpDiverged& e) {
            throw SolveError(e.what(), t, pass_);
        }
    }

    void out_phase(int t) {
        const int n = prob_.n;
        const auto& amp = *st_.amp[t];
        for (int i = 0; i < n; ++i) {
            const LocalPrior<Scalar> prior{st_.pi_bwd(i, t), st_.xi_into(i, t),
                                           st_.psi_into(i, t)};
            st_.pi_fwd(i, t) = out_activity(amp.phi[i], amp.c, prior);
            st_.theta_out.set(
                i, t, taylor_approx_msg(st_.pi_bwd(i, t), amp.phi[i], amp.c, cfg_.epsilon));
        }
    }

    void update_across_fwd(int t) {
        const Scalar zeta = params_.zeta_as<Scalar>();
        for (int i = 0; i < prob_.n; ++i) {
            const auto belief = fuse(st_.across_fwd.get(i, t), st_.theta_out.get(i, t));
            st_.across_fwd.set(
                i, t + 1, propagate_forward(belief, params_.alpha, zeta, params_.rho));
        }
    }

    void update_across_bwd(int t) {
        const Scalar zeta = params_.zeta_as<Scalar>();
        for (int i = 0; i < prob_.n; ++i) {
            const auto belief =
                fuse(st_.theta_out.get(i, t + 1), st_.across_bwd.get(i, t + 1));
            st_.across_bwd.set(
                i, t, propagate_backward(belief, params_.alpha, zeta, params_.rho));
        }
    }

    Scalar lag1_cross_moment(int i, int j) const {
        const auto left = fuse(st_.across_fwd.get(i, j), st_.theta_out.get(i, j));
        const auto right = fuse(st_.theta_out.get(i, j + 1), st_.across_bwd.get(i, j + 1));
        return pairwise_lag1_moment(left, right, params_.alpha, params_.zeta_as<Scalar>(),
                                    params_.rho);
    }

    void check_activity_messages() const {
        for (int j = 0; j < prob_.t; ++j)
            for (int i = 0; i < prob_.n; ++i) {
                const double p = st_.pi_fwd(i, j);
                if (!(p >= 0.0 && p <= 1.0))
                    throw SolveError("activity message left [0, 1]", j, pass_);
            }
    }

    MmvProblem<Scalar> prob_;
    ModelParams params_;
    SolverConfig cfg_;
    MessageState<Scalar> st_;
    Matrix<Scalar> x_prev_;
    int pass_ = 0;
};

template <typename Scalar>
struct SolveResult {
    PosteriorSummary<Scalar> summary;
    SolveDiagnostics diagnostics;
};

namespace detail {

template <typename Scalar>
struct SingleRun {
    PosteriorSummary<Scalar> summary;
    double residual = 0.0;
    ModelParams final_params;
    int passes = 0;
};

template <typename Scalar>
SingleRun<Scalar> run_schedule(const MmvProblem<Scalar>& problem, const ModelParams& params,
                               const SolverConfig& cfg, Schedule schedule, int max_passes,
                               SolveDiagnostics& diag) {
    MmvEngine<Scalar> engine(problem, params, cfg);
    EmState em_state;
    em_state.params = params;

    SingleRun<Scalar> run;
    for (int pass = 1; pass <= max_passes; ++pass) {
        const double change = engine.run_pass(schedule);
        if (cfg.em_enabled) {
            const auto post = engine.summarize();
            em_step(problem, post, em_state, cfg.em);
            engine.set_params(em_state.params);
        }
        PassRecord rec;
        rec.pass = pass;
        rec.schedule = schedule;
        rec.residual = engine.residual_energy();
        rec.x_change = change;
        rec.params = engine.params();
        diag.passes.push_back(rec);
        run.passes = pass;

        if (!cfg.fixed_iterations && pass > 1) {
            const double scale = engine.x_mean().squaredNorm();
            if (change <= cfg.x_change_tol * scale) break;
        }
    }
    run.summary = engine.summarize();
    run.residual = engine.residual_energy();
    run.final_params = engine.params();
    return run;
}

}  // namespace detail

// Full solve with residual-triggered escalation: if the residual energy of a
// finished run exceeds threshold * T * M * sigma_e2, re-run with the other
// schedule and a doubled pass budget (at most max_escalations times),
// keeping the lowest-residual result.
template <typename Scalar>
SolveResult<Scalar> solve(const MmvProblem<Scalar>& problem, const ModelParams& params,
                          const SolverConfig& cfg) {
    cfg.validate();
    const ModelParams start_params = cfg.em_enabled ? params : params;  // EM refines in place

    SolveResult<Scalar> out;
    Schedule schedule = cfg.schedule;
    int budget = cfg.max_passes;

    std::optional<detail::SingleRun<Scalar>> best;
    Schedule best_schedule = schedule;
    for (int attempt = 0;; ++attempt) {
        auto run = detail::run_schedule(problem, start_params, cfg, schedule, budget,
                                        out.diagnostics);
        const bool improved = !best || run.residual < best->residual;
        if (improved) {
            best = std::move(run);
            best_schedule = schedule;
        }
        const double noise_energy = static_cast<double>(problem.t) *
                                    static_cast<double>(problem.m) *
                                    best->final_params.sigma_e2;
        const bool acceptable =
            best->residual <= cfg.residual_switch_threshold * noise_energy;
        if (acceptable || attempt >= cfg.max_escalations) break;
        schedule = other_schedule(schedule);
        budget *= 2;
        ++out.diagnostics.escalations;
    }

    out.summary = std::move(best->summary);
    out.diagnostics.total_passes = static_cast<int>(out.diagnostics.passes.size());
    out.diagnostics.final_residual = best->residual;
    out.diagnostics.final_schedule = best_schedule;
    out.diagnostics.final_params = best->final_params;
    return out;
}

}  // namespace ampmmv
