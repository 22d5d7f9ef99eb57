// Measurement operators: dense matrices and matrix-free transforms.
//
// The recovery loop touches A only through apply / apply_adjoint, so a
// measurement process implemented as a pair of subroutines (e.g. a fast
// transform) plugs in without ever materializing the matrix.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "field.hpp"
#include "rng.hpp"

namespace ampmmv {

template <typename Scalar> using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar> using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
class LinearOperator {
  public:
    virtual ~LinearOperator() = default;
    virtual int rows() const = 0;  // M
    virtual int cols() const = 0;  // N
    virtual Vector<Scalar> apply(const Vector<Scalar>& x) const = 0;          // A x
    virtual Vector<Scalar> apply_adjoint(const Vector<Scalar>& z) const = 0;  // A^H z
    // Dense view when one exists; nullptr for matrix-free operators.
    virtual const Matrix<Scalar>* dense() const { return nullptr; }
};

template <typename Scalar>
class DenseOperator final : public LinearOperator<Scalar> {
  public:
    explicit DenseOperator(Matrix<Scalar> a) : a_(std::move(a)) {}
    int rows() const override { return static_cast<int>(a_.rows()); }
    int cols() const override { return static_cast<int>(a_.cols()); }
    Vector<Scalar> apply(const Vector<Scalar>& x) const override { return a_ * x; }
    Vector<Scalar> apply_adjoint(const Vector<Scalar>& z) const override {
        return a_.adjoint() * z;
    }
    const Matrix<Scalar>* dense() const override { return &a_; }
    Matrix<Scalar>& matrix() { return a_; }

  private:
    Matrix<Scalar> a_;
};

// Subsampled randomized Hadamard transform: A = sqrt(P/M) * S * H * D * E,
// where E zero-pads N coordinates to P = 2^ceil(log2 N), D applies random
// sign flips, H is the orthonormal Walsh-Hadamard transform and S keeps M
// rows. Every column has unit norm exactly, |A_mn|^2 = 1/M, and one
// apply/adjoint costs O(P log P).
template <typename Scalar>
class SrhtOperator final : public LinearOperator<Scalar> {
  public:
    SrhtOperator(int m, int n, std::uint64_t seed) : m_(m), n_(n) {
        p_ = 1;
        while (p_ < n) p_ <<= 1;
        if (m > p_) throw std::invalid_argument("SrhtOperator: M exceeds padded dimension");
        Rng rng(derive_seed(seed, 0x5248u));
        signs_.resize(n_);
        for (int i = 0; i < n_; ++i) signs_[i] = rng.bernoulli(0.5) ? 1.0 : -1.0;
        rows_ = rng.sample_without_replacement(p_, m_);
        scale_ = std::sqrt(static_cast<double>(p_) / static_cast<double>(m_)) /
                 std::sqrt(static_cast<double>(p_));
    }

    int rows() const override { return m_; }
    int cols() const override { return n_; }

    Vector<Scalar> apply(const Vector<Scalar>& x) const override {
        Vector<Scalar> buf = Vector<Scalar>::Zero(p_);
        for (int i = 0; i < n_; ++i) buf[i] = signs_[i] * x[i];
        fwht(buf);
        Vector<Scalar> y(m_);
        for (int i = 0; i < m_; ++i) y[i] = scale_ * buf[rows_[i]];
        return y;
    }

    Vector<Scalar> apply_adjoint(const Vector<Scalar>& z) const override {
        Vector<Scalar> buf = Vector<Scalar>::Zero(p_);
        for (int i = 0; i < m_; ++i) buf[rows_[i]] = scale_ * z[i];
        fwht(buf);  // H is real symmetric, so H^H = H
        Vector<Scalar> x(n_);
        for (int i = 0; i < n_; ++i) x[i] = signs_[i] * buf[i];
        return x;
    }

  private:
    static void fwht(Vector<Scalar>& v) {
        const int p = static_cast<int>(v.size());
        for (int len = 1; len < p; len <<= 1) {
            for (int i = 0; i < p; i += len << 1) {
                for (int j = i; j < i + len; ++j) {
                    const Scalar a = v[j];
                    const Scalar b = v[j + len];
                    v[j] = a + b;
                    v[j + len] = a - b;
                }
            }
        }
    }

    int m_, n_, p_;
    double scale_;
    std::vector<double> signs_;
    std::vector<int> rows_;
};

// Wrapper counting operator applications; used by the structural
// cost checks in the self-test suite.
template <typename Scalar>
class CountingOperator final : public LinearOperator<Scalar> {
  public:
    explicit CountingOperator(std::shared_ptr<const LinearOperator<Scalar>> inner)
        : inner_(std::move(inner)) {}

    int rows() const override { return inner_->rows(); }
    int cols() const override { return inner_->cols(); }
    Vector<Scalar> apply(const Vector<Scalar>& x) const override {
        ++applies_;
        return inner_->apply(x);
    }
    Vector<Scalar> apply_adjoint(const Vector<Scalar>& z) const override {
        ++adjoints_;
        return inner_->apply_adjoint(z);
    }

    long applies() const { return applies_; }
    long adjoints() const { return adjoints_; }
    void reset() { applies_ = adjoints_ = 0; }

  private:
    std::shared_ptr<const LinearOperator<Scalar>> inner_;
    mutable long applies_ = 0;
    mutable long adjoints_ = 0;
};

}  // namespace ampmmv
