#pragma once

#include <cstddef>

#include "curv/autodiff.hpp"
#include "curv/linalg.hpp"
#include "curv/model.hpp"

namespace curv {

struct CurvatureConfig {
    std::size_t batch_size_h = 1;
    std::size_t batch_size_g = 1;
    std::size_t parallelism = 1;  // worker lanes for Hessian columns
    // P x P assembly is refused above this parameter count; use the
    // matrix-free eigensolvers instead.
    std::size_t memory_cap = 4096;
};

struct HessianResult {
    DenseMatrix h;           // P x P, exactly symmetric (symmetrized)
    double asymmetry = 0.0;  // max|H - H^T| before symmetrization
};

// Full Hessian of the dataset-averaged cost: the mean over mini-batch
// Hessians, each built column-by-column from Hessian-vector products on
// the standard basis. Columns are sharded over `parallelism` threads;
// the accumulation order is fixed, so results are bit-reproducible.
// The dataset size must be divisible by batch_size_h; a remainder is an
// error rather than silently dropped.
HessianResult assemble_hessian(const ModelSpec& spec, const ParamVector& params,
                               const Batch& dataset, const CurvatureConfig& config);

// N x P matrix whose row n is the gradient of C_n in canonical flat order.
DenseMatrix assemble_jacobian(const ModelSpec& spec, const ParamVector& params,
                              const Batch& batch);

// Outer-product-of-gradients matrix: the mean over mini-batches of
// (1/|batch|) J_b^T J_b, equal to (1/N) J^T J for equal batches.
// Symmetric positive semi-definite by construction.
DenseMatrix assemble_opg(const ModelSpec& spec, const ParamVector& params,
                         const Batch& dataset, const CurvatureConfig& config);

}  // namespace curv
