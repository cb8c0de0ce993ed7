#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "curv/linalg.hpp"

namespace curv {

enum class Activation { identity, sigmoid, tanh, relu };

// relu contributes zero curvature: its second derivative is zero almost
// everywhere and we take derivative 0 at the kink. Hessian checks in the
// test suite therefore use the smooth activations.
double activation_value(Activation a, double z);
double activation_deriv(Activation a, double z);
double activation_second_deriv(Activation a, double z);

enum class OutputMode { softmax_cross_entropy, raw_mean_output };

Activation activation_from_string(const std::string& s);
std::string activation_to_string(Activation a);
OutputMode output_mode_from_string(const std::string& s);
std::string output_mode_to_string(OutputMode m);

// Dense feed-forward architecture: layer_widths[0] is the input width,
// layer_widths.back() the output width, everything in between a hidden
// layer using hidden_activation. The output layer applies softmax in
// softmax_cross_entropy mode and the identity in raw_mean_output mode.
// raw_mean_output is a diagnostic mode (scalar output, cost = mean output)
// and requires an output width of 1.
struct ModelSpec {
    std::vector<std::size_t> layer_widths;
    Activation hidden_activation = Activation::tanh;
    OutputMode output_mode = OutputMode::softmax_cross_entropy;

    std::size_t num_layers() const { return layer_widths.size(); }
    std::size_t input_width() const { return layer_widths.front(); }
    std::size_t output_width() const { return layer_widths.back(); }
    void validate() const;
};

// Flat parameter vector. The canonical order interleaves per layer step:
// rows of W (T_out x T_in, row-major), then the bias (T_out), for each
// consecutive layer pair from the input side up.
struct ParamVector {
    DenseVector data;

    std::size_t p() const { return data.len(); }
};

struct LayerParams {
    std::vector<DenseMatrix> weights;  // weights[k]: widths[k+1] x widths[k]
    std::vector<DenseVector> biases;   // biases[k]: widths[k+1]
};

// Input rows and one-hot target rows. In raw_mean_output mode y is ignored.
struct Batch {
    DenseMatrix x;  // N x T1
    DenseMatrix y;  // N x TL

    std::size_t size() const { return x.rows(); }
};

std::size_t param_count(const ModelSpec& spec);

ParamVector flatten_params(const std::vector<DenseMatrix>& weights,
                           const std::vector<DenseVector>& biases);
LayerParams unflatten_params(const ModelSpec& spec, const ParamVector& params);

// Byte offset bookkeeping for the canonical flat order: index of the first
// element of weight block k and bias block k.
std::size_t weight_block_offset(const ModelSpec& spec, std::size_t k);
std::size_t bias_block_offset(const ModelSpec& spec, std::size_t k);

DenseVector softmax(const DenseVector& z);

// Model output for a single input vector.
DenseVector forward(const ModelSpec& spec, const ParamVector& params, const DenseVector& x);

// Averaged cost over the batch: softmax cross-entropy (fused log-softmax
// form) or the mean raw output in diagnostic mode.
double cost(const ModelSpec& spec, const ParamVector& params, const Batch& batch);

// Throws ContractError unless every row of y has exactly one 1.0 and the
// rest 0.0.
void validate_one_hot(const DenseMatrix& y);

}  // namespace curv
