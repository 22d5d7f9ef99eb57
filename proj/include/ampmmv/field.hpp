// Scalar-field traits for real and circular complex Gaussian models.
#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <type_traits>

namespace ampmmv {

enum class Field { Real, Complex };

template <typename Scalar> struct field_traits;

// Real field: N(x; m, v) with density (2*pi*v)^(-1/2) exp(-(x-m)^2 / 2v).
template <> struct field_traits<double> {
    using scalar_t = double;
    using real_t = double;
    static constexpr bool is_complex = false;
    static constexpr Field tag = Field::Real;

    static double conj(double x) { return x; }
    static double real(double x) { return x; }
    static double imag(double) { return 0.0; }
    static double abs2(double x) { return x * x; }
    static double make(double re, double im) {
        if (im != 0.0) throw std::invalid_argument("real-field scalar with nonzero imaginary part");
        return re;
    }

    // log N(x; mean, var)
    static double log_pdf(double x, double mean, double var) {
        const double d = x - mean;
        return -0.5 * std::log(2.0 * M_PI * var) - d * d / (2.0 * var);
    }
};

// Complex field: circular CN(x; m, v) with density (pi*v)^(-1) exp(-|x-m|^2 / v).
template <> struct field_traits<std::complex<double>> {
    using scalar_t = std::complex<double>;
    using real_t = double;
    static constexpr bool is_complex = true;
    static constexpr Field tag = Field::Complex;

    static std::complex<double> conj(const std::complex<double>& x) { return std::conj(x); }
    static double real(const std::complex<double>& x) { return x.real(); }
    static double imag(const std::complex<double>& x) { return x.imag(); }
    static double abs2(const std::complex<double>& x) { return std::norm(x); }
    static std::complex<double> make(double re, double im) { return {re, im}; }

    static double log_pdf(const std::complex<double>& x, const std::complex<double>& mean,
                          double var) {
        return -std::log(M_PI * var) - std::norm(x - mean) / var;
    }
};

template <typename Scalar>
inline const char* field_name() {
    return field_traits<Scalar>::is_complex ? "complex" : "real";
}

inline Field field_from_name(const std::string& s) {
    if (s == "real") return Field::Real;
    if (s == "complex") return Field::Complex;
    throw std::invalid_argument("unknown field: " + s);
}

inline const char* field_to_name(Field f) { return f == Field::Real ? "real" : "complex"; }

}  // namespace ampmmv
