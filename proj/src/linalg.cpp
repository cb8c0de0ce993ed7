#include "curv/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace curv {

namespace alloc_stats {

namespace {
std::atomic<std::size_t> g_total{0};
std::atomic<std::size_t> g_largest{0};
}  // namespace

void reset() {
    g_total.store(0, std::memory_order_relaxed);
    g_largest.store(0, std::memory_order_relaxed);
}

std::size_t largest_block_bytes() { return g_largest.load(std::memory_order_relaxed); }
std::size_t total_bytes() { return g_total.load(std::memory_order_relaxed); }

void record(std::size_t bytes) {
    if (bytes == 0) return;
    g_total.fetch_add(bytes, std::memory_order_relaxed);
    std::size_t cur = g_largest.load(std::memory_order_relaxed);
    while (bytes > cur &&
           !g_largest.compare_exchange_weak(cur, bytes, std::memory_order_relaxed)) {
    }
}

}  // namespace alloc_stats

DenseVector::DenseVector(std::size_t len, double fill) : data_(len, fill) {
    alloc_stats::record(len * sizeof(double));
}

DenseVector::DenseVector(std::vector<double> values) : data_(std::move(values)) {
    alloc_stats::record(data_.size() * sizeof(double));
}

DenseVector::DenseVector(std::initializer_list<double> values) : data_(values) {
    alloc_stats::record(data_.size() * sizeof(double));
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    alloc_stats::record(rows * cols * sizeof(double));
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols)
        throw ShapeError("DenseMatrix: value count " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    alloc_stats::record(data_.size() * sizeof(double));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

double dot(const DenseVector& a, const DenseVector& b) {
    if (a.len() != b.len()) throw ShapeError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.len(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const DenseVector& a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, const DenseVector& x, DenseVector& y) {
    if (x.len() != y.len()) throw ShapeError("axpy: length mismatch");
    for (std::size_t i = 0; i < x.len(); ++i) y[i] += alpha * x[i];
}

void scale(DenseVector& x, double alpha) {
    for (std::size_t i = 0; i < x.len(); ++i) x[i] *= alpha;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()));
    DenseMatrix c(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

DenseVector matvec(const DenseMatrix& a, const DenseVector& x) {
    if (a.cols() != x.len()) throw ShapeError("matvec: dimension mismatch");
    DenseVector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += arow[j] * x[j];
        y[i] = s;
    }
    return y;
}

DenseVector matvec_transposed(const DenseMatrix& a, const DenseVector& x) {
    if (a.rows() != x.len()) throw ShapeError("matvec_transposed: dimension mismatch");
    DenseVector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        const double xi = x[i];
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += arow[j] * xi;
    }
    return y;
}

double max_abs(const DenseMatrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) m = std::max(m, std::abs(a.data()[i]));
    return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows() * a.cols(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

namespace {

// Stable sort of eigen/singular pairs into descending value order.
// Ties keep the order the sweep produced.
void sort_pairs_descending(DenseVector& values, DenseMatrix& vectors) {
    const std::size_t n = values.len();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return values[i] > values[j]; });
    DenseVector sorted_vals(n);
    DenseMatrix sorted_vecs(vectors.rows(), n);
    for (std::size_t k = 0; k < n; ++k) {
        sorted_vals[k] = values[order[k]];
        for (std::size_t r = 0; r < vectors.rows(); ++r) sorted_vecs(r, k) = vectors(r, order[k]);
    }
    values = std::move(sorted_vals);
    vectors = std::move(sorted_vecs);
}

double off_diag_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

double frobenius_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) s += a.data()[i] * a.data()[i];
    return std::sqrt(s);
}

}  // namespace

SymEig sym_eig(const DenseMatrix& a_in) {
    if (a_in.rows() != a_in.cols()) throw ContractError("sym_eig: matrix is not square");
    const std::size_t n = a_in.rows();
    const double amax = max_abs(a_in);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(a_in(i, j) - a_in(j, i)) > 1e-10 * amax)
                throw ContractError("sym_eig: matrix is not symmetric");

    DenseMatrix a = a_in;
    DenseMatrix v = DenseMatrix::identity(n);
    const double fnorm = frobenius_norm(a);
    const double tol = 1e-15 * std::max(fnorm, 1e-300);

    bool converged = (n <= 1) || off_diag_norm(a) <= tol;
    for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double g = 100.0 * std::abs(apq);
                // Skip rotations that can no longer change the diagonal.
                if (sweep > 4 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
                    std::abs(a(q, q)) + g == std::abs(a(q, q))) {
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    continue;
                }
                const double h = a(q, q) - a(p, p);
                double t;
                if (std::abs(h) + g == std::abs(h)) {
                    t = apq / h;
                } else {
                    const double theta = 0.5 * h / apq;
                    t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // A <- J^T A J applied as a column then a row rotation.
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a(p, i);
                    const double aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p);
                    const double viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
        converged = off_diag_norm(a) <= tol;
    }
    if (!converged)
        throw ConvergenceError("sym_eig: Jacobi sweeps did not converge", {off_diag_norm(a)});

    DenseVector values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
    sort_pairs_descending(values, v);
    return {std::move(values), std::move(v)};
}

namespace {

// Implicit QL iteration with shifts on a symmetric tridiagonal matrix.
// d holds the diagonal, e the subdiagonal in e[0..n-2] (e[n-1] scratch).
// On return d holds eigenvalues and the columns of z the eigenvectors.
void tridiag_ql(std::vector<double>& d, std::vector<double>& e, DenseMatrix& z) {
    const int n = static_cast<int>(d.size());
    if (n == 0) return;
    e[n - 1] = 0.0;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (iter++ == 64)
                    throw ConvergenceError("tridiag_eig: QL iteration did not converge", {});
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0;
                double c = 1.0;
                double p = 0.0;
                int i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for (int k = 0; k < n; ++k) {
                        f = z(k, i + 1);
                        z(k, i + 1) = s * z(k, i) + c * f;
                        z(k, i) = c * z(k, i) - s * f;
                    }
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

}  // namespace

SymEig tridiag_eig(const DenseVector& alpha, const DenseVector& beta) {
    const std::size_t n = alpha.len();
    if (n == 0) throw ShapeError("tridiag_eig: empty diagonal");
    if (beta.len() + 1 != n)
        throw ShapeError("tridiag_eig: beta length " + std::to_string(beta.len()) +
                         " does not match alpha length " + std::to_string(n));
    std::vector<double> d(alpha.data(), alpha.data() + n);
    std::vector<double> e(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) e[i] = beta[i];
    DenseMatrix z = DenseMatrix::identity(n);
    tridiag_ql(d, e, z);
    DenseVector values(std::move(d));
    sort_pairs_descending(values, z);
    return {std::move(values), std::move(z)};
}

namespace {

// One-sided Jacobi: rotate column pairs of b until all are mutually
// orthogonal. If v is non-null the rotations are accumulated into it,
// yielding the right singular vectors of the original matrix.
void one_sided_jacobi(DenseMatrix& b, DenseMatrix* v) {
    const std::size_t m = b.rows();
    const std::size_t n = b.cols();
    const double eps = 1e-15;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    app += b(i, p) * b(i, p);
                    aqq += b(i, q) * b(i, q);
                    apq += b(i, p) * b(i, q);
                }
                if (apq == 0.0 || std::abs(apq) <= eps * std::sqrt(app * aqq)) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                double t = 1.0 / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                if (zeta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double bip = b(i, p);
                    const double biq = b(i, q);
                    b(i, p) = c * bip - s * biq;
                    b(i, q) = s * bip + c * biq;
                }
                if (v != nullptr) {
                    for (std::size_t i = 0; i < v->rows(); ++i) {
                        const double vip = (*v)(i, p);
                        const double viq = (*v)(i, q);
                        (*v)(i, p) = c * vip - s * viq;
                        (*v)(i, q) = s * vip + c * viq;
                    }
                }
            }
        }
        if (!rotated) break;
    }
}

DenseVector column_norms(const DenseMatrix& b) {
    DenseVector sigma(b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < b.rows(); ++i) s += b(i, j) * b(i, j);
        sigma[j] = std::sqrt(s);
    }
    return sigma;
}

}  // namespace

Svd svd(const DenseMatrix& a) {
    DenseMatrix b = a;
    DenseMatrix v = DenseMatrix::identity(a.cols());
    one_sided_jacobi(b, &v);
    DenseVector sigma = column_norms(b);
    sort_pairs_descending(sigma, v);
    return {std::move(sigma), std::move(v)};
}

DenseVector orthogonalize_columns(DenseMatrix& a) {
    one_sided_jacobi(a, nullptr);
    DenseVector sigma = column_norms(a);
    sort_pairs_descending(sigma, a);
    return sigma;
}

}  // namespace curv
