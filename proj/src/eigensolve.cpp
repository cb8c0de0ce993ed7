#include "curv/eigensolve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "curv/rng.hpp"

namespace curv {

void validate_eigen_pairs(const EigenPairs& pairs, double ortho_tol) {
    const std::size_t p = pairs.q.rows();
    const std::size_t k = pairs.q.cols();
    if (pairs.lambda.len() != k)
        throw ShapeError("EigenPairs: lambda length does not match column count");
    if (k > p) throw ShapeError("EigenPairs: more columns than rows");
    for (std::size_t i = 0; i + 1 < k; ++i)
        if (pairs.lambda[i] < pairs.lambda[i + 1])
            throw ContractError("EigenPairs: eigenvalues not sorted descending");
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < k; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < p; ++r) s += pairs.q(r, i) * pairs.q(r, j);
            const double expected = i == j ? 1.0 : 0.0;
            if (std::abs(s - expected) > ortho_tol)
                throw ContractError("EigenPairs: columns are not orthonormal");
        }
}

namespace {

DenseVector random_unit_vector(Rng& rng, std::size_t p) {
    DenseVector v(p);
    for (std::size_t i = 0; i < p; ++i) v[i] = rng.next_normal();
    const double nrm = norm2(v);
    scale(v, 1.0 / nrm);
    return v;
}

void orthogonalize_against(const std::vector<DenseVector>& basis, DenseVector& w) {
    for (const DenseVector& q : basis) axpy(-dot(q, w), q, w);
}

}  // namespace

LanczosResult lanczos_topk(const LinearOp& op, std::size_t p, const LanczosConfig& cfg) {
    if (p < 2) throw ContractError("lanczos_topk: operator dimension must be >= 2");
    if (cfg.k < 1 || cfg.k >= p)
        throw ContractError("lanczos_topk: need 1 <= k < p, got k = " + std::to_string(cfg.k) +
                            ", p = " + std::to_string(p));
    if (cfg.max_iterations < cfg.k)
        throw ContractError("lanczos_topk: max_iterations must be >= k");
    if (!(cfg.residual_tol > 0.0)) throw ContractError("lanczos_topk: residual_tol must be > 0");

    Rng rng(cfg.seed);
    std::vector<DenseVector> basis;
    basis.push_back(random_unit_vector(rng, p));
    std::vector<double> alphas;
    std::vector<double> betas;  // betas[j] couples basis[j] and basis[j+1]
    std::vector<double> best_residuals;
    double opnorm_est = 0.0;

    const std::size_t max_steps = std::min(cfg.max_iterations, p);
    for (std::size_t j = 0; j < max_steps; ++j) {
        DenseVector w = op(basis[j]);
        if (w.len() != p) throw ShapeError("lanczos_topk: operator changed dimension");
        const double alpha = dot(basis[j], w);
        alphas.push_back(alpha);
        axpy(-alpha, basis[j], w);
        if (j > 0) axpy(-betas[j - 1], basis[j - 1], w);
        // Full reorthogonalization; a second pass mops up cancellation.
        orthogonalize_against(basis, w);
        orthogonalize_against(basis, w);
        const double beta = norm2(w);
        opnorm_est = std::max(opnorm_est, std::abs(alpha) + beta +
                                              (j > 0 ? betas[j - 1] : 0.0));

        const std::size_t m = j + 1;
        if (m >= cfg.k) {
            const SymEig ritz =
                tridiag_eig(DenseVector(std::vector<double>(alphas)),
                            DenseVector(std::vector<double>(betas)));
            std::vector<double> est(cfg.k);
            bool all_small = true;
            double est_max = 0.0;
            for (std::size_t i = 0; i < cfg.k; ++i) {
                est[i] = std::abs(beta * ritz.vectors(m - 1, i));
                est_max = std::max(est_max, est[i]);
                if (est[i] > cfg.residual_tol * std::max(1.0, std::abs(ritz.values[i])))
                    all_small = false;
            }
            if (best_residuals.empty() ||
                est_max < *std::max_element(best_residuals.begin(), best_residuals.end()))
                best_residuals = est;
            if (all_small || m == p) {
                // Assemble Ritz vectors and confirm with true residuals.
                EigenPairs pairs;
                pairs.q = DenseMatrix(p, cfg.k);
                pairs.lambda = DenseVector(cfg.k);
                for (std::size_t i = 0; i < cfg.k; ++i) {
                    pairs.lambda[i] = ritz.values[i];
                    for (std::size_t r = 0; r < p; ++r) {
                        double s = 0.0;
                        for (std::size_t c = 0; c < m; ++c) s += basis[c][r] * ritz.vectors(c, i);
                        pairs.q(r, i) = s;
                    }
                    // Normalize away the rounding drift of the basis product.
                    double nrm = 0.0;
                    for (std::size_t r = 0; r < p; ++r) nrm += pairs.q(r, i) * pairs.q(r, i);
                    nrm = std::sqrt(nrm);
                    for (std::size_t r = 0; r < p; ++r) pairs.q(r, i) /= nrm;
                }
                DenseVector residuals(cfg.k);
                bool confirmed = true;
                for (std::size_t i = 0; i < cfg.k; ++i) {
                    DenseVector qi(p);
                    for (std::size_t r = 0; r < p; ++r) qi[r] = pairs.q(r, i);
                    DenseVector aq = op(qi);
                    axpy(-pairs.lambda[i], qi, aq);
                    residuals[i] = norm2(aq);
                    if (residuals[i] > cfg.residual_tol * std::max(1.0, std::abs(pairs.lambda[i])))
                        confirmed = false;
                }
                if (confirmed)
                    return LanczosResult{std::move(pairs), std::move(residuals), m};
                if (m == p)
                    throw ConvergenceError(
                        "lanczos_topk: full Krylov space reached without meeting tolerance",
                        best_residuals);
            }
        }

        if (m == max_steps) break;
        if (beta <= 1e-13 * std::max(opnorm_est, 1.0)) {
            // Invariant subspace; continue in a fresh random direction.
            DenseVector fresh = random_unit_vector(rng, p);
            orthogonalize_against(basis, fresh);
            double nrm = norm2(fresh);
            while (nrm <= 0.5) {
                fresh = random_unit_vector(rng, p);
                orthogonalize_against(basis, fresh);
                nrm = norm2(fresh);
            }
            scale(fresh, 1.0 / nrm);
            betas.push_back(0.0);
            basis.push_back(std::move(fresh));
        } else {
            scale(w, 1.0 / beta);
            betas.push_back(beta);
            basis.push_back(std::move(w));
        }
    }
    throw ConvergenceError("lanczos_topk: not converged within " +
                               std::to_string(max_steps) + " iterations",
                           best_residuals);
}

IncrementalOpgEigs::IncrementalOpgEigs(std::size_t p, std::size_t k) : p_(p), k_(k) {
    if (k < 1 || k > p)
        throw ContractError("IncrementalOpgEigs: need 1 <= k <= p, got k = " +
                            std::to_string(k) + ", p = " + std::to_string(p));
}

void IncrementalOpgEigs::push_block(const DenseMatrix& block) {
    if (block.rows() < 1) throw ContractError("IncrementalOpgEigs: empty block");
    if (block.cols() != p_)
        throw ShapeError("IncrementalOpgEigs: block has " + std::to_string(block.cols()) +
                         " columns, expected " + std::to_string(p_));
    buffer_.push_back(block);
    buffered_rows_ += block.rows();
    rows_seen_ += block.rows();
    if (buffered_rows_ >= k_) update_from_buffer();
}

void IncrementalOpgEigs::update_from_buffer() {
    // Compressed matrix M = [diag(sigma) V^T; buffered rows]; we work on
    // M^T so the one-sided Jacobi sweep rotates only k + b small columns.
    const std::size_t state_cols = has_state_ ? sigma_.len() : 0;
    const std::size_t total_cols = state_cols + buffered_rows_;
    DenseMatrix mt(p_, total_cols);
    for (std::size_t c = 0; c < state_cols; ++c)
        for (std::size_t r = 0; r < p_; ++r) mt(r, c) = basis_(r, c) * sigma_[c];
    std::size_t at = state_cols;
    for (const DenseMatrix& block : buffer_) {
        for (std::size_t n = 0; n < block.rows(); ++n, ++at)
            for (std::size_t r = 0; r < p_; ++r) mt(r, at) = block(n, r);
    }
    buffer_.clear();
    buffered_rows_ = 0;

    DenseVector sig = orthogonalize_columns(mt);
    const std::size_t keep = std::min(k_, total_cols);
    DenseMatrix basis(p_, keep);
    DenseVector sigma(keep);
    const double rank_tol = 1e-12 * std::max(sig[0], 1e-300);
    for (std::size_t c = 0; c < keep; ++c) {
        sigma[c] = sig[c];
        if (sig[c] > rank_tol) {
            for (std::size_t r = 0; r < p_; ++r) basis(r, c) = mt(r, c) / sig[c];
        } else {
            // Rank-deficient tail: complete with a canonical direction
            // orthogonal to the columns accepted so far.
            for (std::size_t cand = 0; cand < p_; ++cand) {
                DenseVector v(p_, 0.0);
                v[cand] = 1.0;
                for (std::size_t prev = 0; prev < c; ++prev) {
                    double d = 0.0;
                    for (std::size_t r = 0; r < p_; ++r) d += basis(r, prev) * v[r];
                    for (std::size_t r = 0; r < p_; ++r) v[r] -= d * basis(r, prev);
                }
                const double nrm = norm2(v);
                if (nrm > 0.5) {
                    for (std::size_t r = 0; r < p_; ++r) basis(r, c) = v[r] / nrm;
                    break;
                }
            }
            sigma[c] = 0.0;
        }
    }
    basis_ = std::move(basis);
    sigma_ = std::move(sigma);
    has_state_ = true;
    ++updates_;
}

EigenPairs IncrementalOpgEigs::finalize(std::size_t n_total) {
    if (rows_seen_ != n_total)
        throw ContractError("IncrementalOpgEigs: saw " + std::to_string(rows_seen_) +
                            " rows, n_total says " + std::to_string(n_total));
    if (buffered_rows_ > 0)
        throw ContractError("IncrementalOpgEigs: " + std::to_string(buffered_rows_) +
                            " leftover rows are fewer than k = " + std::to_string(k_) +
                            " in the final update window");
    if (!has_state_)
        throw ContractError("IncrementalOpgEigs: no update performed; need at least k rows");
    EigenPairs pairs;
    pairs.q = basis_;
    pairs.lambda = DenseVector(sigma_.len());
    const double inv_n = 1.0 / static_cast<double>(n_total);
    for (std::size_t i = 0; i < sigma_.len(); ++i)
        pairs.lambda[i] = sigma_[i] * sigma_[i] * inv_n;
    return pairs;
}

EigenPairs opg_eigs_incremental(const std::vector<DenseMatrix>& j_blocks, std::size_t n_total,
                                std::size_t k) {
    if (j_blocks.empty()) throw ContractError("opg_eigs_incremental: no blocks");
    IncrementalOpgEigs acc(j_blocks.front().cols(), k);
    for (const DenseMatrix& block : j_blocks) acc.push_block(block);
    return acc.finalize(n_total);
}

namespace {

void check_memory_cap(std::size_t p, std::size_t cap, const char* who) {
    if (p > cap)
        throw ContractError(std::string(who) + ": P = " + std::to_string(p) +
                            " exceeds the dense memory cap " + std::to_string(cap) +
                            "; use the implicit quadform/apply forms instead");
}

// Qt x, the K projections of x onto the eigenbasis.
DenseVector project(const EigenPairs& pairs, const DenseVector& x) {
    if (x.len() != pairs.q.rows())
        throw ShapeError("eigen operator: vector length " + std::to_string(x.len()) +
                         " does not match P = " + std::to_string(pairs.q.rows()));
    return matvec_transposed(pairs.q, x);
}

void check_lambda_tilde(double lambda_tilde) {
    if (!(lambda_tilde > 0.0))
        throw ContractError("full-rank approximation requires lambda_tilde > 0, got " +
                            std::to_string(lambda_tilde));
}

}  // namespace

DenseMatrix low_rank_materialize(const EigenPairs& pairs, std::size_t memory_cap) {
    const std::size_t p = pairs.q.rows();
    const std::size_t k = pairs.q.cols();
    check_memory_cap(p, memory_cap, "low_rank_materialize");
    DenseMatrix h(p, p, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        const double lam = pairs.lambda[c];
        for (std::size_t i = 0; i < p; ++i) {
            const double qic = pairs.q(i, c);
            if (qic == 0.0) continue;
            double* row = h.row(i);
            for (std::size_t j = 0; j < p; ++j) row[j] += lam * (qic * pairs.q(j, c));
        }
    }
    return h;
}

double low_rank_quadform(const EigenPairs& pairs, const DenseVector& x) {
    const DenseVector t = project(pairs, x);
    double s = 0.0;
    for (std::size_t i = 0; i < t.len(); ++i) s += pairs.lambda[i] * t[i] * t[i];
    return s;
}

DenseVector low_rank_apply(const EigenPairs& pairs, const DenseVector& x) {
    DenseVector t = project(pairs, x);
    for (std::size_t i = 0; i < t.len(); ++i) t[i] *= pairs.lambda[i];
    return matvec(pairs.q, t);
}

DenseMatrix full_rank_materialize(const EigenPairs& pairs, double lambda_tilde,
                                  std::size_t memory_cap) {
    check_lambda_tilde(lambda_tilde);
    const std::size_t p = pairs.q.rows();
    check_memory_cap(p, memory_cap, "full_rank_materialize");
    DenseMatrix h = low_rank_materialize(pairs, memory_cap);
    // + lambda_tilde (I - Q Q^T)
    for (std::size_t c = 0; c < pairs.q.cols(); ++c) {
        for (std::size_t i = 0; i < p; ++i) {
            const double qic = pairs.q(i, c);
            if (qic == 0.0) continue;
            double* row = h.row(i);
            for (std::size_t j = 0; j < p; ++j) row[j] -= lambda_tilde * (qic * pairs.q(j, c));
        }
    }
    for (std::size_t i = 0; i < p; ++i) h(i, i) += lambda_tilde;
    return h;
}

double full_rank_quadform(const EigenPairs& pairs, double lambda_tilde, const DenseVector& x) {
    check_lambda_tilde(lambda_tilde);
    const DenseVector t = project(pairs, x);
    double s = 0.0;
    double tt = 0.0;
    for (std::size_t i = 0; i < t.len(); ++i) {
        s += pairs.lambda[i] * t[i] * t[i];
        tt += t[i] * t[i];
    }
    return s + lambda_tilde * dot(x, x) - lambda_tilde * tt;
}

DenseVector full_rank_apply(const EigenPairs& pairs, double lambda_tilde, const DenseVector& x) {
    check_lambda_tilde(lambda_tilde);
    const DenseVector t = project(pairs, x);
    DenseVector scaled = t;
    for (std::size_t i = 0; i < scaled.len(); ++i) scaled[i] *= pairs.lambda[i];
    DenseVector y = matvec(pairs.q, scaled);        // Q Lambda Q^T x
    const DenseVector qqx = matvec(pairs.q, t);     // Q Q^T x
    for (std::size_t i = 0; i < y.len(); ++i) y[i] += lambda_tilde * (x[i] - qqx[i]);
    return y;
}

double default_lambda_tilde(const EigenPairs& pairs) {
    if (pairs.lambda.len() == 0) throw ContractError("default_lambda_tilde: no eigenvalues");
    const double lk = pairs.lambda[pairs.lambda.len() - 1];
    if (!(lk > 0.0))
        throw ContractError("default_lambda_tilde: smallest retained eigenvalue " +
                            std::to_string(lk) +
                            " is not positive; pass an explicit lambda_tilde");
    return lk;
}

}  // namespace curv
