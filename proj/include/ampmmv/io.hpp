// Instance directory serialization and diagnostics emission.
//
// Layout: meta.json (dims, field, seed, parameters) next to flat binary
// files of little-endian float64 values, row-major, with complex scalars
// stored as interleaved (re, im) pairs.
//
//   A.bin            shared measurement matrix (M x N), or A_001.bin ... per
//                    frame when the matrix varies over time
//   y.bin            T frames of M measurements, frame-major
//   support.bin      ground truth s (N values of 0.0 / 1.0), optional
//   theta.bin        ground truth amplitudes (N x T), optional
//   x.bin            ground truth signals (N x T), optional
#pragma once

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "engine.hpp"
#include "generate.hpp"
#include "model.hpp"
#include "summary.hpp"

namespace ampmmv {

using json = nlohmann::json;

inline std::uint64_t srht_frame_seed(std::uint64_t instance_seed, int frame) {
    return derive_seed(instance_seed, 0xA0u, static_cast<std::uint64_t>(frame));
}

namespace detail {

inline void write_doubles(const std::filesystem::path& path, const std::vector<double>& vals) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(vals.data()),
            static_cast<std::streamsize>(vals.size() * sizeof(double)));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

inline std::vector<double> read_doubles(const std::filesystem::path& path,
                                        std::size_t expected) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
    std::vector<double> vals(expected);
    f.read(reinterpret_cast<char*>(vals.data()),
           static_cast<std::streamsize>(expected * sizeof(double)));
    if (static_cast<std::size_t>(f.gcount()) != expected * sizeof(double))
        throw std::runtime_error("short read: " + path.string());
    return vals;
}

template <typename Scalar>
std::vector<double> flatten_row_major(const Matrix<Scalar>& m) {
    using FT = field_traits<Scalar>;
    constexpr int stride = FT::is_complex ? 2 : 1;
    std::vector<double> out(static_cast<std::size_t>(m.rows()) * m.cols() * stride);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out[k++] = FT::real(m(i, j));
            if constexpr (FT::is_complex) out[k++] = FT::imag(m(i, j));
        }
    return out;
}

template <typename Scalar>
Matrix<Scalar> unflatten_row_major(const std::vector<double>& vals, int rows, int cols) {
    using FT = field_traits<Scalar>;
    constexpr int stride = FT::is_complex ? 2 : 1;
    if (vals.size() != static_cast<std::size_t>(rows) * cols * stride)
        throw std::runtime_error("binary payload size mismatch");
    Matrix<Scalar> m(rows, cols);
    std::size_t k = 0;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            const double re = vals[k++];
            const double im = FT::is_complex ? vals[k++] : 0.0;
            m(i, j) = FT::make(re, im);
        }
    return m;
}

inline std::string frame_matrix_name(int frame) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "A_%03d.bin", frame + 1);
    return buf;
}

}  // namespace detail

inline json params_to_json(const ModelParams& p) {
    return json{{"lambda", p.lambda},
                {"zeta", {p.zeta.real(), p.zeta.imag()}},
                {"alpha", p.alpha},
                {"rho", p.rho},
                {"sigma_e2", p.sigma_e2}};
}

inline ModelParams params_from_json(const json& j) {
    ModelParams p;
    p.lambda = j.at("lambda").get<std::vector<double>>();
    const auto z = j.at("zeta");
    p.zeta = {z.at(0).get<double>(), z.at(1).get<double>()};
    p.alpha = j.at("alpha").get<double>();
    p.rho = j.at("rho").get<double>();
    p.sigma_e2 = j.at("sigma_e2").get<double>();
    return p;
}

inline json gen_config_to_json(const GenConfig& cfg) {
    json j{{"n", cfg.n},
           {"m", cfg.m},
           {"t", cfg.t},
           {"beta", cfg.beta},
           {"matrix_kind", matrix_kind_to_name(cfg.matrix_kind)},
           {"field", field_to_name(cfg.field)},
           {"seed", cfg.seed},
           {"params", params_to_json(cfg.params)}};
    if (cfg.snr_db) j["snr_db"] = *cfg.snr_db;
    if (cfg.exact_k) j["exact_k"] = *cfg.exact_k;
    return j;
}

inline GenConfig gen_config_from_json(const json& j) {
    GenConfig cfg;
    cfg.n = j.at("n").get<int>();
    cfg.m = j.at("m").get<int>();
    cfg.t = j.value("t", 1);
    cfg.beta = j.value("beta", 0.0);
    if (j.contains("matrix_kind"))
        cfg.matrix_kind = matrix_kind_from_name(j.at("matrix_kind").get<std::string>());
    if (j.contains("field")) cfg.field = field_from_name(j.at("field").get<std::string>());
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("params")) cfg.params = params_from_json(j.at("params"));
    if (j.contains("snr_db") && !j.at("snr_db").is_null())
        cfg.snr_db = j.at("snr_db").get<double>();
    if (j.contains("exact_k") && !j.at("exact_k").is_null())
        cfg.exact_k = j.at("exact_k").get<int>();
    return cfg;
}

inline json solver_config_to_json(const SolverConfig& cfg) {
    return json{{"schedule", schedule_name(cfg.schedule)},
                {"max_passes", cfg.max_passes},
                {"inner_iters", cfg.inner_iters},
                {"epsilon", cfg.epsilon},
                {"residual_switch_threshold", cfg.residual_switch_threshold},
                {"max_escalations", cfg.max_escalations},
                {"em_enabled", cfg.em_enabled},
                {"x_change_tol", cfg.x_change_tol},
                {"warm_start", cfg.warm_start},
                {"fixed_iterations", cfg.fixed_iterations},
                {"damping", cfg.damping},
                {"seed", cfg.seed}};
}

inline SolverConfig solver_config_from_json(const json& j) {
    SolverConfig cfg;
    if (j.contains("schedule"))
        cfg.schedule =
            j.at("schedule").get<std::string>() == "parallel" ? Schedule::Parallel
                                                              : Schedule::Serial;
    cfg.max_passes = j.value("max_passes", cfg.max_passes);
    cfg.inner_iters = j.value("inner_iters", cfg.inner_iters);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    cfg.residual_switch_threshold =
        j.value("residual_switch_threshold", cfg.residual_switch_threshold);
    cfg.max_escalations = j.value("max_escalations", cfg.max_escalations);
    cfg.em_enabled = j.value("em_enabled", cfg.em_enabled);
    cfg.x_change_tol = j.value("x_change_tol", cfg.x_change_tol);
    cfg.warm_start = j.value("warm_start", cfg.warm_start);
    cfg.fixed_iterations = j.value("fixed_iterations", cfg.fixed_iterations);
    cfg.damping = j.value("damping", cfg.damping);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

// Field recorded in an instance directory, read before choosing the scalar type.
inline Field peek_instance_field(const std::string& dir) {
    std::ifstream f(std::filesystem::path(dir) / "meta.json");
    if (!f) throw std::runtime_error("cannot open " + dir + "/meta.json");
    json meta = json::parse(f);
    return field_from_name(meta.at("field").get<std::string>());
}

template <typename Scalar>
void save_instance(const std::string& dir, const GeneratedInstance<Scalar>& inst,
                   const GenConfig& cfg) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root);

    const MmvProblem<Scalar>& prob = inst.problem;
    const bool shared = prob.shared_matrix();

    json meta{{"format", "ampmmv-instance"},
              {"version", 1},
              {"field", field_name<Scalar>()},
              {"n", prob.n},
              {"m", prob.m},
              {"t", prob.t},
              {"seed", cfg.seed},
              {"beta", cfg.beta},
              {"matrix_kind", matrix_kind_to_name(cfg.matrix_kind)},
              {"shared_matrix", shared},
              {"has_truth", !inst.truth.support.empty()},
              {"params", params_to_json(inst.params_used)}};
    if (cfg.snr_db) meta["snr_db"] = *cfg.snr_db;

    if (cfg.matrix_kind == MatrixKind::DenseIidGaussian) {
        if (shared) {
            detail::write_doubles(root / "A.bin",
                                  detail::flatten_row_major(*prob.op(0).dense()));
        } else {
            for (int t = 0; t < prob.t; ++t)
                detail::write_doubles(root / detail::frame_matrix_name(t),
                                      detail::flatten_row_major(*prob.op(t).dense()));
        }
    }

    Matrix<Scalar> ymat(prob.m, prob.t);
    for (int t = 0; t < prob.t; ++t) ymat.col(t) = prob.y[t];
    detail::write_doubles(root / "y.bin", detail::flatten_row_major(Matrix<Scalar>(ymat.transpose())));

    if (!inst.truth.support.empty()) {
        std::vector<double> s(inst.truth.support.begin(), inst.truth.support.end());
        detail::write_doubles(root / "support.bin", s);
        detail::write_doubles(root / "theta.bin", detail::flatten_row_major(inst.truth.thetas));
        detail::write_doubles(root / "x.bin", detail::flatten_row_major(inst.truth.signals));
    }

    std::ofstream mf(root / "meta.json");
    mf << meta.dump(2) << "\n";
}

template <typename Scalar>
struct LoadedInstance {
    MmvProblem<Scalar> problem;
    std::optional<GroundTruth<Scalar>> truth;
    ModelParams params;
    GenConfig meta_cfg;  // reconstructed generation settings
};

template <typename Scalar>
LoadedInstance<Scalar> load_instance(const std::string& dir) {
    namespace fs = std::filesystem;
    using FT = field_traits<Scalar>;
    const fs::path root(dir);
    std::ifstream mf(root / "meta.json");
    if (!mf) throw std::runtime_error("cannot open " + dir + "/meta.json");
    const json meta = json::parse(mf);

    if (field_from_name(meta.at("field").get<std::string>()) != FT::tag)
        throw std::runtime_error("instance field does not match requested scalar type");

    LoadedInstance<Scalar> out;
    const int n = meta.at("n").get<int>();
    const int m = meta.at("m").get<int>();
    const int t = meta.at("t").get<int>();
    out.params = params_from_json(meta.at("params"));
    out.meta_cfg.params = out.params;
    out.meta_cfg.n = n;
    out.meta_cfg.m = m;
    out.meta_cfg.t = t;
    out.meta_cfg.seed = meta.at("seed").get<std::uint64_t>();
    out.meta_cfg.beta = meta.at("beta").get<double>();
    out.meta_cfg.matrix_kind = matrix_kind_from_name(meta.at("matrix_kind").get<std::string>());
    out.meta_cfg.field = FT::tag;
    if (meta.contains("snr_db")) out.meta_cfg.snr_db = meta.at("snr_db").get<double>();

    MmvProblem<Scalar>& prob = out.problem;
    prob.n = n;
    prob.m = m;
    prob.t = t;
    prob.ops.resize(t);

    constexpr int stride = FT::is_complex ? 2 : 1;
    const bool shared = meta.at("shared_matrix").get<bool>();
    if (out.meta_cfg.matrix_kind == MatrixKind::ImplicitSrht) {
        auto first = std::make_shared<SrhtOperator<Scalar>>(
            m, n, srht_frame_seed(out.meta_cfg.seed, 0));
        for (int j = 0; j < t; ++j)
            prob.ops[j] = shared ? first
                                 : std::make_shared<SrhtOperator<Scalar>>(
                                       m, n, srht_frame_seed(out.meta_cfg.seed, j));
    } else if (shared) {
        auto a = detail::unflatten_row_major<Scalar>(
            detail::read_doubles(root / "A.bin", static_cast<std::size_t>(m) * n * stride), m, n);
        auto op = std::make_shared<DenseOperator<Scalar>>(std::move(a));
        for (int j = 0; j < t; ++j) prob.ops[j] = op;
    } else {
        for (int j = 0; j < t; ++j) {
            auto a = detail::unflatten_row_major<Scalar>(
                detail::read_doubles(root / detail::frame_matrix_name(j),
                                     static_cast<std::size_t>(m) * n * stride),
                m, n);
            prob.ops[j] = std::make_shared<DenseOperator<Scalar>>(std::move(a));
        }
    }

    const auto ymat = detail::unflatten_row_major<Scalar>(
        detail::read_doubles(root / "y.bin", static_cast<std::size_t>(t) * m * stride), t, m);
    prob.y.resize(t);
    for (int j = 0; j < t; ++j) prob.y[j] = ymat.row(j).transpose();

    if (meta.at("has_truth").get<bool>()) {
        GroundTruth<Scalar> truth;
        const auto s = detail::read_doubles(root / "support.bin", static_cast<std::size_t>(n));
        truth.support.resize(n);
        truth.k = 0;
        for (int i = 0; i < n; ++i) {
            truth.support[i] = s[i] != 0.0 ? 1 : 0;
            truth.k += truth.support[i];
        }
        truth.thetas = detail::unflatten_row_major<Scalar>(
            detail::read_doubles(root / "theta.bin", static_cast<std::size_t>(n) * t * stride), n,
            t);
        truth.signals = detail::unflatten_row_major<Scalar>(
            detail::read_doubles(root / "x.bin", static_cast<std::size_t>(n) * t * stride), n, t);
        out.truth = std::move(truth);
    }
    return out;
}

// Posterior summary written as binaries plus a small manifest.
template <typename Scalar>
void save_posterior(const std::string& dir, const PosteriorSummary<Scalar>& post,
                    const json& extra = json::object()) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root);
    detail::write_doubles(root / "x_mean.bin", detail::flatten_row_major(post.x_mean));
    detail::write_doubles(root / "x_var.bin", detail::flatten_row_major(post.x_var));
    detail::write_doubles(root / "theta_mean.bin", detail::flatten_row_major(post.theta_mean));
    detail::write_doubles(root / "theta_var.bin", detail::flatten_row_major(post.theta_var));
    if (post.theta_lag1.size() > 0)
        detail::write_doubles(root / "theta_lag1.bin", detail::flatten_row_major(post.theta_lag1));
    std::vector<double> sp(post.s_post.data(), post.s_post.data() + post.s_post.size());
    detail::write_doubles(root / "s_post.bin", sp);
    json meta = extra;
    meta["format"] = "ampmmv-posterior";
    meta["field"] = field_name<Scalar>();
    meta["n"] = static_cast<int>(post.x_mean.rows());
    meta["t"] = static_cast<int>(post.x_mean.cols());
    std::ofstream mf(root / "summary.json");
    mf << meta.dump(2) << "\n";
}

inline json pass_record_to_json(const PassRecord& rec) {
    return json{{"pass", rec.pass},
                {"schedule", schedule_name(rec.schedule)},
                {"residual", rec.residual},
                {"x_change", rec.x_change},
                {"params", params_to_json(rec.params)}};
}

// One JSON object per line: every pass record, then a final summary record.
inline void write_diagnostics_jsonl(const std::string& path, const SolveDiagnostics& diag) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& rec : diag.passes) f << pass_record_to_json(rec).dump() << "\n";
    f << json{{"event", "final"},
              {"total_passes", diag.total_passes},
              {"escalations", diag.escalations},
              {"final_residual", diag.final_residual},
              {"final_schedule", schedule_name(diag.final_schedule)},
              {"final_params", params_to_json(diag.final_params)}}
             .dump()
      << "\n";
}

}  // namespace ampmmv
