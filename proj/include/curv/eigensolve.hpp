#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "curv/linalg.hpp"

namespace curv {

// Top-K eigenpairs of a symmetric operator: columns of q are orthonormal
// eigenvectors, lambda is sorted descending.
struct EigenPairs {
    DenseMatrix q;       // P x K
    DenseVector lambda;  // K
};

// Checks column orthonormality (within ortho_tol) and descending order.
void validate_eigen_pairs(const EigenPairs& pairs, double ortho_tol = 1e-8);

struct LanczosConfig {
    std::size_t k = 1;
    std::size_t max_iterations = 0;  // iteration cap S; must be >= k
    double residual_tol = 1e-6;
    std::uint64_t seed = 0;  // start vector seed
};

struct LanczosResult {
    EigenPairs pairs;
    DenseVector residuals;  // ||op(q_i) - lambda_i q_i|| per returned pair
    std::size_t iterations = 0;
};

using LinearOp = std::function<DenseVector(const DenseVector&)>;

// K algebraically-largest eigenpairs of a symmetric linear operator on
// R^p by the Lanczos iteration with full reorthogonalization of the
// Krylov basis (avoids ghost eigenvalues at O(S^2 P) extra cost).
// Convergence is monitored through the tridiagonal factorization residual
// estimate beta_S * |last Ritz component| and confirmed against the true
// residuals before returning. Throws ConvergenceError (carrying the best
// residuals achieved) if the tolerance is not reached within
// max_iterations steps.
LanczosResult lanczos_topk(const LinearOp& op, std::size_t p, const LanczosConfig& cfg);

// Streaming eigendecomposition of G = (1/N) J^T J from row blocks of J.
// Maintains a rank-k factorization: incoming rows are buffered until at
// least k are available, the compressed matrix [diag(sigma) V^T; rows] is
// re-factorized, and the result truncated back to rank k. Eigenvalues are
// the squared singular values divided by the total row count.
class IncrementalOpgEigs {
public:
    IncrementalOpgEigs(std::size_t p, std::size_t k);

    void push_block(const DenseMatrix& block);  // b x P, b >= 1

    // Scales and returns the eigenpairs. n_total must equal the number of
    // rows pushed; leftover buffered rows short of a k-row update window
    // are an error, mirroring the divisibility stance elsewhere.
    EigenPairs finalize(std::size_t n_total);

    std::size_t rows_seen() const { return rows_seen_; }
    std::size_t updates() const { return updates_; }

private:
    void update_from_buffer();

    std::size_t p_;
    std::size_t k_;
    std::size_t updates_ = 0;
    std::size_t rows_seen_ = 0;
    std::size_t buffered_rows_ = 0;
    std::vector<DenseMatrix> buffer_;
    DenseMatrix basis_;   // P x k once initialized
    DenseVector sigma_;   // singular values of the rows seen, descending
    bool has_state_ = false;
};

EigenPairs opg_eigs_incremental(const std::vector<DenseMatrix>& j_blocks, std::size_t n_total,
                                std::size_t k);

// Low-rank approximation Q diag(lambda) Q^T and its implicit forms.
DenseMatrix low_rank_materialize(const EigenPairs& pairs, std::size_t memory_cap = 4096);
double low_rank_quadform(const EigenPairs& pairs, const DenseVector& x);
DenseVector low_rank_apply(const EigenPairs& pairs, const DenseVector& x);

// Full-rank extension: the P-K trailing eigenvalues are extrapolated to
// lambda_tilde > 0, giving Q diag(lambda) Q^T + lambda_tilde (I - Q Q^T).
DenseMatrix full_rank_materialize(const EigenPairs& pairs, double lambda_tilde,
                                  std::size_t memory_cap = 4096);
double full_rank_quadform(const EigenPairs& pairs, double lambda_tilde, const DenseVector& x);
DenseVector full_rank_apply(const EigenPairs& pairs, double lambda_tilde, const DenseVector& x);

// The conventional default lambda_tilde = lambda_K; errors when that is
// not positive, since the extrapolation assumes a positive tail.
double default_lambda_tilde(const EigenPairs& pairs);

}  // namespace curv
