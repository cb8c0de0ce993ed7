#pragma once

#include <cstddef>
#include <vector>

#include "curv/linalg.hpp"
#include "curv/model.hpp"

namespace curv {

// Sum of per-example cost gradients over a batch. Backprop on the summed
// cost yields this directly; the gradient of the averaged cost is
// grad_total / n.
struct GradResult {
    DenseVector grad_total;
    std::size_t n = 0;
};

// Batched forward/backward state for one batch at fixed parameters.
// Index k runs over the L-1 affine layer steps.
//   a[k]        activations entering step k (a[0] is the input block,
//               a.back() the model output: probabilities or raw values)
//   z[k]        pre-activations of step k
//   delta[k]    d(sum_n C_n)/dZ_k, one row per example
//   upstream[k] delta[k+1] * W[k+1], cached for k < L-2 (delta[k] is
//               upstream[k] masked by the activation derivative)
// Everything is immutable once built, so one cache can serve many
// Hessian-vector products concurrently.
struct ForwardBackward {
    std::vector<DenseMatrix> a;
    std::vector<DenseMatrix> z;
    std::vector<DenseMatrix> delta;
    std::vector<DenseMatrix> upstream;

    std::size_t batch_size() const { return a.front().rows(); }
};

ForwardBackward forward_backward(const ModelSpec& spec, const LayerParams& lp,
                                 const Batch& batch);

// Gradient of the summed cost from a prepared cache, in canonical flat order.
DenseVector grad_from_cache(const ModelSpec& spec, const ForwardBackward& fb);

// N x P matrix whose row n is the gradient of C_n, canonical flat order.
DenseMatrix per_example_grad_rows(const ModelSpec& spec, const ForwardBackward& fb);

// Exact gradient of a single example's cost C_n with respect to the flat
// parameter vector.
DenseVector per_example_grad(const ModelSpec& spec, const ParamVector& params,
                             const DenseVector& x, const DenseVector& y);

// Sum of per-example gradients over the batch, computed in one batched
// backprop pass rather than n single-example passes.
GradResult grad_batch(const ModelSpec& spec, const ParamVector& params, const Batch& batch);

// Hessian-vector product of the batch-averaged cost, H_batch * v, with v
// held constant. Implemented as a forward directional (R-) pass threaded
// through the reverse pass, so the working set stays O(P) and no P x P
// object is ever formed.
DenseVector hvp(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
                const DenseVector& v);

// Same, reusing a prepared cache for the batch.
DenseVector hvp_from_cache(const ModelSpec& spec, const LayerParams& lp,
                           const ForwardBackward& fb, const DenseVector& v);

// v -> Hv over a fixed dataset, accumulated over equal mini-batches and
// divided by the number of batches. The dataset size must be divisible by
// batch_size. apply() is const and safe to call from multiple threads.
class HvpOperator {
public:
    HvpOperator(const ModelSpec& spec, const ParamVector& params, const Batch& data,
                std::size_t batch_size);

    std::size_t dim() const { return p_; }
    std::size_t num_batches() const { return caches_.size(); }
    DenseVector apply(const DenseVector& v) const;

private:
    ModelSpec spec_;
    LayerParams lp_;
    std::size_t p_ = 0;
    std::vector<ForwardBackward> caches_;
};

// Copy rows [start, start+count) of a dataset into a Batch.
Batch slice_batch(const Batch& data, std::size_t start, std::size_t count);

}  // namespace curv
