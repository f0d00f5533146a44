// Small dense complex matrices. Everything in persim lives in spaces of a
// few dozen dimensions at most, so a flat std::vector backing is plenty.

#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "persim/errors.hpp"

namespace persim {

using cplx = std::complex<double>;

class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<cplx> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionMismatch("matrix data size does not match shape");
        }
    }

    // Row-major nested initializer, e.g. Matrix{{1, 0}, {0, 1}}.
    Matrix(std::initializer_list<std::initializer_list<cplx>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) {
                throw DimensionMismatch("ragged matrix initializer");
            }
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const std::vector<cplx>& data() const { return data_; }

    Matrix adjoint() const {
        Matrix m(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) m(c, r) = std::conj((*this)(r, c));
        return m;
    }

    Matrix operator*(const Matrix& rhs) const {
        if (cols_ != rhs.rows_) {
            throw DimensionMismatch("matrix product shape mismatch");
        }
        Matrix m(rows_, rhs.cols_);
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t k = 0; k < cols_; ++k) {
                const cplx a = (*this)(r, k);
                if (a == cplx{}) continue;
                for (std::size_t c = 0; c < rhs.cols_; ++c) m(r, c) += a * rhs(k, c);
            }
        }
        return m;
    }

    Matrix operator+(const Matrix& rhs) const {
        if (rows_ != rhs.rows_ || cols_ != rhs.cols_) {
            throw DimensionMismatch("matrix sum shape mismatch");
        }
        Matrix m = *this;
        for (std::size_t i = 0; i < data_.size(); ++i) m.data_[i] += rhs.data_[i];
        return m;
    }

    Matrix operator-(const Matrix& rhs) const {
        if (rows_ != rhs.rows_ || cols_ != rhs.cols_) {
            throw DimensionMismatch("matrix difference shape mismatch");
        }
        Matrix m = *this;
        for (std::size_t i = 0; i < data_.size(); ++i) m.data_[i] -= rhs.data_[i];
        return m;
    }

    Matrix operator*(cplx s) const {
        Matrix m = *this;
        for (auto& v : m.data_) v *= s;
        return m;
    }

    Matrix kron(const Matrix& rhs) const {
        Matrix m(rows_ * rhs.rows_, cols_ * rhs.cols_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) {
                const cplx a = (*this)(r, c);
                if (a == cplx{}) continue;
                for (std::size_t rr = 0; rr < rhs.rows_; ++rr)
                    for (std::size_t cc = 0; cc < rhs.cols_; ++cc)
                        m(r * rhs.rows_ + rr, c * rhs.cols_ + cc) = a * rhs(rr, cc);
            }
        return m;
    }

    double max_abs_diff(const Matrix& rhs) const {
        if (rows_ != rhs.rows_ || cols_ != rhs.cols_) {
            throw DimensionMismatch("matrix comparison shape mismatch");
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < data_.size(); ++i) {
            worst = std::max(worst, std::abs(data_[i] - rhs.data_[i]));
        }
        return worst;
    }

    bool is_identity(double tol) const {
        if (rows_ != cols_) return false;
        return max_abs_diff(identity(rows_)) <= tol;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

// Rank-1 projector |v><v| / <v|v>.
inline Matrix outer_projector(const std::vector<cplx>& v) {
    double norm2 = 0.0;
    for (const cplx& a : v) norm2 += std::norm(a);
    if (norm2 <= 0.0) throw ZeroNorm("projector direction has zero norm");
    Matrix m(v.size(), v.size());
    for (std::size_t r = 0; r < v.size(); ++r)
        for (std::size_t c = 0; c < v.size(); ++c) m(r, c) = v[r] * std::conj(v[c]) / norm2;
    return m;
}

} // namespace persim
