#include "curv/autodiff.hpp"

#include <cmath>
#include <string>

namespace curv {

namespace {

// Z = A * W^T + 1 * b^T
DenseMatrix affine(const DenseMatrix& a, const DenseMatrix& w, const DenseVector& b) {
    if (a.cols() != w.cols()) throw ShapeError("affine: activation/weight width mismatch");
    DenseMatrix z(a.rows(), w.rows());
    for (std::size_t n = 0; n < a.rows(); ++n) {
        const double* arow = a.row(n);
        double* zrow = z.row(n);
        for (std::size_t o = 0; o < w.rows(); ++o) {
            const double* wrow = w.row(o);
            double s = b[o];
            for (std::size_t i = 0; i < w.cols(); ++i) s += arow[i] * wrow[i];
            zrow[o] = s;
        }
    }
    return z;
}

DenseMatrix apply_activation(const ModelSpec& spec, const DenseMatrix& z) {
    DenseMatrix a(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.rows() * z.cols(); ++i)
        a.data()[i] = activation_value(spec.hidden_activation, z.data()[i]);
    return a;
}

DenseMatrix softmax_rows(const DenseMatrix& z) {
    DenseMatrix p(z.rows(), z.cols());
    for (std::size_t n = 0; n < z.rows(); ++n) {
        const double* zrow = z.row(n);
        double* prow = p.row(n);
        double zmax = zrow[0];
        for (std::size_t m = 1; m < z.cols(); ++m) zmax = std::max(zmax, zrow[m]);
        double sum = 0.0;
        for (std::size_t m = 0; m < z.cols(); ++m) {
            prow[m] = std::exp(zrow[m] - zmax);
            sum += prow[m];
        }
        for (std::size_t m = 0; m < z.cols(); ++m) prow[m] /= sum;
    }
    return p;
}

}  // namespace

ForwardBackward forward_backward(const ModelSpec& spec, const LayerParams& lp,
                                 const Batch& batch) {
    spec.validate();
    if (batch.size() < 1) throw ContractError("forward_backward: empty batch");
    if (batch.x.cols() != spec.input_width())
        throw ShapeError("forward_backward: input width " + std::to_string(batch.x.cols()) +
                         " does not match model input " + std::to_string(spec.input_width()));
    const bool softmax_mode = spec.output_mode == OutputMode::softmax_cross_entropy;
    if (softmax_mode) {
        if (batch.y.rows() != batch.x.rows() || batch.y.cols() != spec.output_width())
            throw ShapeError("forward_backward: target shape does not match model output");
        validate_one_hot(batch.y);
    }

    const std::size_t nsteps = spec.num_layers() - 1;
    ForwardBackward fb;
    fb.a.reserve(nsteps + 1);
    fb.z.reserve(nsteps);
    fb.a.push_back(batch.x);
    for (std::size_t k = 0; k < nsteps; ++k) {
        fb.z.push_back(affine(fb.a[k], lp.weights[k], lp.biases[k]));
        if (k + 1 < nsteps) {
            fb.a.push_back(apply_activation(spec, fb.z[k]));
        } else if (softmax_mode) {
            fb.a.push_back(softmax_rows(fb.z[k]));
        } else {
            fb.a.push_back(fb.z[k]);
        }
    }

    fb.delta.resize(nsteps);
    fb.upstream.resize(nsteps > 0 ? nsteps - 1 : 0);
    if (softmax_mode) {
        DenseMatrix d(batch.size(), spec.output_width());
        const DenseMatrix& probs = fb.a[nsteps];
        for (std::size_t i = 0; i < d.rows() * d.cols(); ++i)
            d.data()[i] = probs.data()[i] - batch.y.data()[i];
        fb.delta[nsteps - 1] = std::move(d);
    } else {
        fb.delta[nsteps - 1] = DenseMatrix(batch.size(), 1, 1.0);
    }
    for (std::size_t k = nsteps - 1; k-- > 0;) {
        fb.upstream[k] = matmul(fb.delta[k + 1], lp.weights[k + 1]);
        DenseMatrix d(fb.upstream[k].rows(), fb.upstream[k].cols());
        for (std::size_t i = 0; i < d.rows() * d.cols(); ++i)
            d.data()[i] =
                fb.upstream[k].data()[i] * activation_deriv(spec.hidden_activation, fb.z[k].data()[i]);
        fb.delta[k] = std::move(d);
    }
    return fb;
}

DenseVector grad_from_cache(const ModelSpec& spec, const ForwardBackward& fb) {
    const std::size_t nsteps = spec.num_layers() - 1;
    DenseVector flat(param_count(spec));
    std::size_t at = 0;
    for (std::size_t k = 0; k < nsteps; ++k) {
        const DenseMatrix& d = fb.delta[k];
        const DenseMatrix& a = fb.a[k];
        for (std::size_t o = 0; o < d.cols(); ++o)
            for (std::size_t i = 0; i < a.cols(); ++i) {
                double s = 0.0;
                for (std::size_t n = 0; n < d.rows(); ++n) s += d(n, o) * a(n, i);
                flat[at++] = s;
            }
        for (std::size_t o = 0; o < d.cols(); ++o) {
            double s = 0.0;
            for (std::size_t n = 0; n < d.rows(); ++n) s += d(n, o);
            flat[at++] = s;
        }
    }
    return flat;
}

DenseMatrix per_example_grad_rows(const ModelSpec& spec, const ForwardBackward& fb) {
    const std::size_t nsteps = spec.num_layers() - 1;
    const std::size_t n = fb.batch_size();
    DenseMatrix rows(n, param_count(spec));
    for (std::size_t ex = 0; ex < n; ++ex) {
        double* out = rows.row(ex);
        std::size_t at = 0;
        for (std::size_t k = 0; k < nsteps; ++k) {
            const DenseMatrix& d = fb.delta[k];
            const DenseMatrix& a = fb.a[k];
            for (std::size_t o = 0; o < d.cols(); ++o)
                for (std::size_t i = 0; i < a.cols(); ++i) out[at++] = d(ex, o) * a(ex, i);
            for (std::size_t o = 0; o < d.cols(); ++o) out[at++] = d(ex, o);
        }
    }
    return rows;
}

DenseVector per_example_grad(const ModelSpec& spec, const ParamVector& params,
                             const DenseVector& x, const DenseVector& y) {
    DenseMatrix xm(1, x.len(), std::vector<double>(x.data(), x.data() + x.len()));
    DenseMatrix ym(1, y.len(), std::vector<double>(y.data(), y.data() + y.len()));
    return grad_batch(spec, params, Batch{std::move(xm), std::move(ym)}).grad_total;
}

GradResult grad_batch(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
    const LayerParams lp = unflatten_params(spec, params);
    ForwardBackward fb = forward_backward(spec, lp, batch);
    return GradResult{grad_from_cache(spec, fb), batch.size()};
}

DenseVector hvp_from_cache(const ModelSpec& spec, const LayerParams& lp,
                           const ForwardBackward& fb, const DenseVector& v) {
    const std::size_t p = param_count(spec);
    if (v.len() != p)
        throw ShapeError("hvp: direction has length " + std::to_string(v.len()) +
                         ", model has " + std::to_string(p) + " parameters");
    const std::size_t nsteps = spec.num_layers() - 1;
    const std::size_t n = fb.batch_size();
    const LayerParams rv = unflatten_params(spec, ParamVector{v});

    // R-forward: directional derivatives of pre-activations and activations.
    std::vector<DenseMatrix> rz(nsteps);
    std::vector<DenseMatrix> ra(nsteps + 1);
    ra[0] = DenseMatrix(n, spec.input_width(), 0.0);
    for (std::size_t k = 0; k < nsteps; ++k) {
        DenseMatrix r = affine(fb.a[k], rv.weights[k], rv.biases[k]);
        if (k > 0) {
            // ra[k] * W_k^T contributes only once the input itself moves.
            DenseMatrix carry = affine(ra[k], lp.weights[k], DenseVector(lp.biases[k].len(), 0.0));
            for (std::size_t i = 0; i < r.rows() * r.cols(); ++i) r.data()[i] += carry.data()[i];
        }
        rz[k] = std::move(r);
        if (k + 1 < nsteps) {
            DenseMatrix next(n, fb.z[k].cols());
            for (std::size_t i = 0; i < next.rows() * next.cols(); ++i)
                next.data()[i] =
                    activation_deriv(spec.hidden_activation, fb.z[k].data()[i]) * rz[k].data()[i];
            ra[k + 1] = std::move(next);
        }
    }

    // R-backward: directional derivatives of the deltas.
    std::vector<DenseMatrix> rdelta(nsteps);
    if (spec.output_mode == OutputMode::softmax_cross_entropy) {
        const DenseMatrix& probs = fb.a[nsteps];
        const DenseMatrix& rzl = rz[nsteps - 1];
        DenseMatrix rd(n, probs.cols());
        for (std::size_t ex = 0; ex < n; ++ex) {
            double pdot = 0.0;
            for (std::size_t m = 0; m < probs.cols(); ++m) pdot += probs(ex, m) * rzl(ex, m);
            for (std::size_t m = 0; m < probs.cols(); ++m)
                rd(ex, m) = probs(ex, m) * (rzl(ex, m) - pdot);
        }
        rdelta[nsteps - 1] = std::move(rd);
    } else {
        rdelta[nsteps - 1] = DenseMatrix(n, 1, 0.0);
    }
    for (std::size_t k = nsteps - 1; k-- > 0;) {
        DenseMatrix m = matmul(rdelta[k + 1], lp.weights[k + 1]);
        const DenseMatrix m2 = matmul(fb.delta[k + 1], rv.weights[k + 1]);
        DenseMatrix rd(m.rows(), m.cols());
        for (std::size_t i = 0; i < m.rows() * m.cols(); ++i) {
            const double zi = fb.z[k].data()[i];
            const double first = activation_deriv(spec.hidden_activation, zi);
            const double second = activation_second_deriv(spec.hidden_activation, zi);
            rd.data()[i] = (m.data()[i] + m2.data()[i]) * first +
                           fb.upstream[k].data()[i] * second * rz[k].data()[i];
        }
        rdelta[k] = std::move(rd);
    }

    // R of the flat gradient of the summed cost, then divide by the batch
    // size so the result is H of the averaged cost times v.
    DenseVector hv(p);
    std::size_t at = 0;
    for (std::size_t k = 0; k < nsteps; ++k) {
        const DenseMatrix& d = fb.delta[k];
        const DenseMatrix& rd = rdelta[k];
        const DenseMatrix& a = fb.a[k];
        const DenseMatrix& rak = ra[k];
        for (std::size_t o = 0; o < d.cols(); ++o)
            for (std::size_t i = 0; i < a.cols(); ++i) {
                double s = 0.0;
                for (std::size_t ex = 0; ex < n; ++ex)
                    s += rd(ex, o) * a(ex, i) + d(ex, o) * rak(ex, i);
                hv[at++] = s;
            }
        for (std::size_t o = 0; o < d.cols(); ++o) {
            double s = 0.0;
            for (std::size_t ex = 0; ex < n; ++ex) s += rd(ex, o);
            hv[at++] = s;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < p; ++i) hv[i] *= inv_n;
    return hv;
}

DenseVector hvp(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
                const DenseVector& v) {
    const LayerParams lp = unflatten_params(spec, params);
    const ForwardBackward fb = forward_backward(spec, lp, batch);
    return hvp_from_cache(spec, lp, fb, v);
}

Batch slice_batch(const Batch& data, std::size_t start, std::size_t count) {
    DenseMatrix x(count, data.x.cols());
    for (std::size_t i = 0; i < count; ++i)
        std::copy(data.x.row(start + i), data.x.row(start + i) + data.x.cols(), x.row(i));
    DenseMatrix y;
    if (data.y.rows() == data.x.rows() && data.y.cols() > 0) {
        y = DenseMatrix(count, data.y.cols());
        for (std::size_t i = 0; i < count; ++i)
            std::copy(data.y.row(start + i), data.y.row(start + i) + data.y.cols(), y.row(i));
    }
    return Batch{std::move(x), std::move(y)};
}

HvpOperator::HvpOperator(const ModelSpec& spec, const ParamVector& params, const Batch& data,
                         std::size_t batch_size)
    : spec_(spec), lp_(unflatten_params(spec, params)), p_(param_count(spec)) {
    if (batch_size < 1) throw ContractError("HvpOperator: batch size must be >= 1");
    const std::size_t n = data.size();
    if (n == 0) throw ContractError("HvpOperator: empty dataset");
    if (n % batch_size != 0)
        throw ContractError("HvpOperator: dataset size " + std::to_string(n) +
                            " is not divisible by batch size " + std::to_string(batch_size) +
                            "; refusing to drop the remainder");
    const std::size_t nbatches = n / batch_size;
    caches_.reserve(nbatches);
    for (std::size_t b = 0; b < nbatches; ++b)
        caches_.push_back(forward_backward(spec_, lp_, slice_batch(data, b * batch_size, batch_size)));
}

DenseVector HvpOperator::apply(const DenseVector& v) const {
    DenseVector acc(p_, 0.0);
    for (const ForwardBackward& fb : caches_) {
        const DenseVector hv = hvp_from_cache(spec_, lp_, fb, v);
        for (std::size_t i = 0; i < p_; ++i) acc[i] += hv[i];
    }
    const double inv_b = 1.0 / static_cast<double>(caches_.size());
    for (std::size_t i = 0; i < p_; ++i) acc[i] *= inv_b;
    return acc;
}

}  // namespace curv
