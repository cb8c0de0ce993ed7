#include "curv/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace curv {

double activation_value(Activation a, double z) {
    switch (a) {
        case Activation::identity: return z;
        case Activation::sigmoid:
            return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        case Activation::tanh: return std::tanh(z);
        case Activation::relu: return z > 0.0 ? z : 0.0;
    }
    return z;
}

double activation_deriv(Activation a, double z) {
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::sigmoid: {
            const double s = activation_value(Activation::sigmoid, z);
            return s * (1.0 - s);
        }
        case Activation::tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

double activation_second_deriv(Activation a, double z) {
    switch (a) {
        case Activation::identity: return 0.0;
        case Activation::sigmoid: {
            const double s = activation_value(Activation::sigmoid, z);
            return s * (1.0 - s) * (1.0 - 2.0 * s);
        }
        case Activation::tanh: {
            const double t = std::tanh(z);
            return -2.0 * t * (1.0 - t * t);
        }
        case Activation::relu: return 0.0;
    }
    return 0.0;
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    throw ContractError("unknown activation: " + s);
}

std::string activation_to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
    }
    return "identity";
}

OutputMode output_mode_from_string(const std::string& s) {
    if (s == "softmax_cross_entropy") return OutputMode::softmax_cross_entropy;
    if (s == "raw_mean_output") return OutputMode::raw_mean_output;
    throw ContractError("unknown output mode: " + s);
}

std::string output_mode_to_string(OutputMode m) {
    return m == OutputMode::softmax_cross_entropy ? "softmax_cross_entropy" : "raw_mean_output";
}

void ModelSpec::validate() const {
    if (layer_widths.size() < 2)
        throw ContractError("model needs at least an input and an output layer");
    for (std::size_t w : layer_widths)
        if (w < 1) throw ContractError("layer widths must be >= 1");
    if (output_mode == OutputMode::raw_mean_output && output_width() != 1)
        throw ContractError("raw_mean_output requires an output width of 1");
}

std::size_t param_count(const ModelSpec& spec) {
    spec.validate();
    std::size_t p = 0;
    for (std::size_t k = 0; k + 1 < spec.layer_widths.size(); ++k)
        p += spec.layer_widths[k] * spec.layer_widths[k + 1] + spec.layer_widths[k + 1];
    return p;
}

ParamVector flatten_params(const std::vector<DenseMatrix>& weights,
                           const std::vector<DenseVector>& biases) {
    if (weights.size() != biases.size() || weights.empty())
        throw ShapeError("flatten_params: need one bias per weight matrix");
    std::size_t total = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k].rows() != biases[k].len())
            throw ShapeError("flatten_params: bias length does not match weight rows");
        if (k + 1 < weights.size() && weights[k + 1].cols() != weights[k].rows())
            throw ShapeError("flatten_params: consecutive layer shapes do not chain");
        total += weights[k].rows() * weights[k].cols() + biases[k].len();
    }
    DenseVector flat(total);
    std::size_t at = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const std::size_t wn = weights[k].rows() * weights[k].cols();
        std::copy(weights[k].data(), weights[k].data() + wn, flat.data() + at);
        at += wn;
        std::copy(biases[k].data(), biases[k].data() + biases[k].len(), flat.data() + at);
        at += biases[k].len();
    }
    return ParamVector{std::move(flat)};
}

LayerParams unflatten_params(const ModelSpec& spec, const ParamVector& params) {
    const std::size_t p = param_count(spec);
    if (params.p() != p)
        throw ShapeError("unflatten_params: parameter vector has length " +
                         std::to_string(params.p()) + ", model needs " + std::to_string(p));
    LayerParams out;
    std::size_t at = 0;
    for (std::size_t k = 0; k + 1 < spec.layer_widths.size(); ++k) {
        const std::size_t tin = spec.layer_widths[k];
        const std::size_t tout = spec.layer_widths[k + 1];
        DenseMatrix w(tout, tin,
                      std::vector<double>(params.data.data() + at, params.data.data() + at + tout * tin));
        at += tout * tin;
        DenseVector b(std::vector<double>(params.data.data() + at, params.data.data() + at + tout));
        at += tout;
        out.weights.push_back(std::move(w));
        out.biases.push_back(std::move(b));
    }
    return out;
}

std::size_t weight_block_offset(const ModelSpec& spec, std::size_t k) {
    std::size_t at = 0;
    for (std::size_t i = 0; i < k; ++i)
        at += spec.layer_widths[i] * spec.layer_widths[i + 1] + spec.layer_widths[i + 1];
    return at;
}

std::size_t bias_block_offset(const ModelSpec& spec, std::size_t k) {
    return weight_block_offset(spec, k) + spec.layer_widths[k] * spec.layer_widths[k + 1];
}

DenseVector softmax(const DenseVector& z) {
    DenseVector out(z.len());
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < z.len(); ++i) zmax = std::max(zmax, z[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < z.len(); ++i) {
        out[i] = std::exp(z[i] - zmax);
        sum += out[i];
    }
    for (std::size_t i = 0; i < z.len(); ++i) out[i] /= sum;
    return out;
}

namespace {

double logsumexp(const double* z, std::size_t n) {
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) zmax = std::max(zmax, z[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::exp(z[i] - zmax);
    return zmax + std::log(sum);
}

}  // namespace

DenseVector forward(const ModelSpec& spec, const ParamVector& params, const DenseVector& x) {
    if (x.len() != spec.input_width())
        throw ShapeError("forward: input has length " + std::to_string(x.len()) +
                         ", model expects " + std::to_string(spec.input_width()));
    const LayerParams lp = unflatten_params(spec, params);
    DenseVector a = x;
    for (std::size_t k = 0; k < lp.weights.size(); ++k) {
        DenseVector z = matvec(lp.weights[k], a);
        for (std::size_t i = 0; i < z.len(); ++i) z[i] += lp.biases[k][i];
        const bool is_output = (k + 1 == lp.weights.size());
        if (!is_output) {
            for (std::size_t i = 0; i < z.len(); ++i)
                z[i] = activation_value(spec.hidden_activation, z[i]);
            a = std::move(z);
        } else if (spec.output_mode == OutputMode::softmax_cross_entropy) {
            a = softmax(z);
        } else {
            a = std::move(z);
        }
    }
    return a;
}

void validate_one_hot(const DenseMatrix& y) {
    for (std::size_t n = 0; n < y.rows(); ++n) {
        std::size_t ones = 0;
        for (std::size_t m = 0; m < y.cols(); ++m) {
            const double v = y(n, m);
            if (v == 1.0)
                ++ones;
            else if (v != 0.0)
                throw ContractError("target row " + std::to_string(n) + " is not one-hot");
        }
        if (ones != 1)
            throw ContractError("target row " + std::to_string(n) + " is not one-hot");
    }
}

double cost(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
    spec.validate();
    const std::size_t n = batch.size();
    if (n < 1) throw ContractError("cost: empty batch");
    if (batch.x.cols() != spec.input_width())
        throw ShapeError("cost: batch input width does not match model");

    if (spec.output_mode == OutputMode::raw_mean_output) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            DenseVector xi(std::vector<double>(batch.x.row(i), batch.x.row(i) + batch.x.cols()));
            total += forward(spec, params, xi)[0];
        }
        return total / static_cast<double>(n);
    }

    if (batch.y.cols() != spec.output_width())
        throw ShapeError("cost: batch target width does not match model");
    validate_one_hot(batch.y);

    // Fused log-softmax: C_n = logsumexp(z) - z . y, evaluated on logits.
    const LayerParams lp = unflatten_params(spec, params);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        DenseVector a(std::vector<double>(batch.x.row(i), batch.x.row(i) + batch.x.cols()));
        for (std::size_t k = 0; k < lp.weights.size(); ++k) {
            DenseVector z = matvec(lp.weights[k], a);
            for (std::size_t j = 0; j < z.len(); ++j) z[j] += lp.biases[k][j];
            if (k + 1 < lp.weights.size()) {
                for (std::size_t j = 0; j < z.len(); ++j)
                    z[j] = activation_value(spec.hidden_activation, z[j]);
            }
            a = std::move(z);
        }
        double zy = 0.0;
        for (std::size_t m = 0; m < a.len(); ++m) zy += a[m] * batch.y(i, m);
        total += logsumexp(a.data(), a.len()) - zy;
    }
    return total / static_cast<double>(n);
}

}  // namespace curv
