#pragma once

#include <cstddef>
#include <vector>

#include "curv/errors.hpp"

namespace curv {

// Byte-accounting for buffers allocated through DenseMatrix/DenseVector.
// Used by tests to assert that matrix-free code paths never allocate a
// P x P intermediate. Counters are global and thread-safe.
namespace alloc_stats {
void reset();
std::size_t largest_block_bytes();
std::size_t total_bytes();
void record(std::size_t bytes);  // internal
}  // namespace alloc_stats

class DenseVector {
public:
    DenseVector() = default;
    explicit DenseVector(std::size_t len, double fill = 0.0);
    explicit DenseVector(std::vector<double> values);
    DenseVector(std::initializer_list<double> values);

    std::size_t len() const { return data_.size(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& values() const { return data_; }

private:
    std::vector<double> data_;
};

// Row-major dense matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Basic vector/matrix algebra.
double dot(const DenseVector& a, const DenseVector& b);
double norm2(const DenseVector& a);
void axpy(double alpha, const DenseVector& x, DenseVector& y);  // y += alpha*x
void scale(DenseVector& x, double alpha);

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);
DenseVector matvec(const DenseMatrix& a, const DenseVector& x);
DenseVector matvec_transposed(const DenseMatrix& a, const DenseVector& x);  // a^T x

double max_abs(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

struct SymEig {
    DenseVector values;   // descending
    DenseMatrix vectors;  // columns are eigenvectors, same order
};

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Input must be square and symmetric within 1e-10 relative to max|a|.
SymEig sym_eig(const DenseMatrix& a);

// Eigendecomposition of the symmetric tridiagonal matrix with diagonal
// `alpha` and off-diagonal `beta` (beta.len == alpha.len - 1), by the
// implicit QL iteration with shifts. Same ordering contract as sym_eig.
SymEig tridiag_eig(const DenseVector& alpha, const DenseVector& beta);

struct Svd {
    DenseVector singular_values;  // descending, one per column of the input
    DenseMatrix right_vectors;    // n x n orthogonal, columns match singular_values
};

// Singular values and right singular vectors of an m x n matrix via
// one-sided Jacobi orthogonalization of the columns.
Svd svd(const DenseMatrix& a);

// In-place variant keeping the orthogonalized columns instead of the
// rotations: on return the columns of `a` are mutually orthogonal, sorted
// by descending norm, and the returned vector holds those norms (the
// singular values). Column j divided by its norm is the j-th left
// singular vector.
DenseVector orthogonalize_columns(DenseMatrix& a);

}  // namespace curv
