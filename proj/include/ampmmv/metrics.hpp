// Recovery metrics and support estimation rules.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "linear_operator.hpp"
#include "summary.hpp"

namespace ampmmv {

struct TnmseResult {
    double value = 0.0;
    int skipped_frames = 0;  // frames with an all-zero true signal
};

inline double to_db(double x) { return 10.0 * std::log10(x); }

// Time-averaged normalized MSE:
//   (1/T) sum_t ||x^(t) - xhat^(t)||^2 / ||x^(t)||^2,
// with all-zero true frames excluded (and counted).
template <typename Scalar>
TnmseResult tnmse(const Matrix<Scalar>& x_true, const Matrix<Scalar>& x_hat) {
    if (x_true.rows() != x_hat.rows() || x_true.cols() != x_hat.cols())
        throw std::invalid_argument("tnmse: shape mismatch");
    const int t = static_cast<int>(x_true.cols());
    double acc = 0.0;
    int used = 0, skipped = 0;
    for (int j = 0; j < t; ++j) {
        const double denom = x_true.col(j).squaredNorm();
        if (denom == 0.0) {
            ++skipped;
            continue;
        }
        acc += (x_true.col(j) - x_hat.col(j)).squaredNorm() / denom;
        ++used;
    }
    if (used == 0) throw std::invalid_argument("tnmse undefined: every true frame is zero");
    return {acc / static_cast<double>(used), skipped};
}

// Support symmetric-difference count normalized by the true cardinality.
inline double nser(const std::vector<int>& s_true, const std::vector<int>& s_hat) {
    if (s_true.empty()) throw std::invalid_argument("nser undefined: true support is empty");
    const std::set<int> a(s_true.begin(), s_true.end());
    const std::set<int> b(s_hat.begin(), s_hat.end());
    int diff = 0;
    for (int i : a)
        if (!b.count(i)) ++diff;
    for (int i : b)
        if (!a.count(i)) ++diff;
    return static_cast<double>(diff) / static_cast<double>(a.size());
}

inline std::vector<int> support_from_mask(const std::vector<std::uint8_t>& mask) {
    std::vector<int> s;
    for (int i = 0; i < static_cast<int>(mask.size()); ++i)
        if (mask[i]) s.push_back(i);
    return s;
}

enum class SupportRule { KLargest, PosteriorThreshold };

inline const char* support_rule_name(SupportRule r) {
    return r == SupportRule::KLargest ? "k-largest" : "posterior-threshold";
}

inline SupportRule support_rule_from_name(const std::string& s) {
    if (s == "k-largest") return SupportRule::KLargest;
    if (s == "posterior-threshold") return SupportRule::PosteriorThreshold;
    throw std::invalid_argument("unknown support rule: " + s);
}

// K-largest: indices of the K largest trajectory energies sum_t |x_n^(t)|^2,
// ties broken toward the lower index. Posterior-threshold: indices with
// p(s_n | observations) > 1/2.
template <typename Scalar>
std::vector<int> estimate_support(const PosteriorSummary<Scalar>& post, SupportRule rule,
                                  int k = -1) {
    const int n = static_cast<int>(post.x_mean.rows());
    std::vector<int> out;
    if (rule == SupportRule::PosteriorThreshold) {
        for (int i = 0; i < n; ++i)
            if (post.s_post[i] > 0.5) out.push_back(i);
        return out;
    }
    if (k < 0) throw std::invalid_argument("k-largest rule requires K");
    if (k > n) throw std::invalid_argument("K exceeds N");
    std::vector<double> energy(n, 0.0);
    for (int j = 0; j < post.x_mean.cols(); ++j)
        for (int i = 0; i < n; ++i)
            energy[i] += field_traits<Scalar>::abs2(post.x_mean(i, j));
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return energy[a] > energy[b]; });
    out.assign(idx.begin(), idx.begin() + k);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace ampmmv
