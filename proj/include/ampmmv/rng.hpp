// Deterministic random number generation with derived per-stream seeds.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace ampmmv {

// SplitMix64 finalizer; used to decorrelate derived seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Independent stream seed for (root, a, b, ...). Trials and grid points get
// their own streams so parallel and serial sweep execution agree exactly.
inline std::uint64_t derive_seed(std::uint64_t root) { return mix64(root); }

template <typename... Rest>
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t head, Rest... rest) {
    return derive_seed(mix64(root ^ mix64(head + 0x632BE59BD9B4E019ULL)), rest...);
}

// mt19937_64 with Box-Muller normals. The standard distributions are
// implementation-defined, so draws go through this class only.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double var) { return mean + std::sqrt(var) * normal(); }

    // Circular complex normal with E|x - mean|^2 = var.
    std::complex<double> complex_normal(std::complex<double> mean, double var) {
        const double s = std::sqrt(0.5 * var);
        return mean + std::complex<double>(s * normal(), s * normal());
    }

    // k distinct indices from {0, ..., n-1}, sorted.
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(uniform() * (n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        std::sort(idx.begin(), idx.end());
        return idx;
    }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Field-generic draw of a (possibly complex) normal with total variance var.
template <typename Scalar> struct normal_draw;
template <> struct normal_draw<double> {
    static double sample(Rng& rng, double mean, double var) { return rng.normal(mean, var); }
};
template <> struct normal_draw<std::complex<double>> {
    static std::complex<double> sample(Rng& rng, std::complex<double> mean, double var) {
        return rng.complex_normal(mean, var);
    }
};

}  // namespace ampmmv
