#pragma once

// Test-only reference implementations and generators. These stay
// deliberately naive (triple loops, finite differences, unfused formulas)
// and independent of the library code paths they are used to check.

#include <cmath>
#include <vector>

#include "curv/autodiff.hpp"
#include "curv/linalg.hpp"
#include "curv/model.hpp"
#include "curv/rng.hpp"

namespace oracle {

inline curv::DenseMatrix matmul_ref(const curv::DenseMatrix& a, const curv::DenseMatrix& b) {
    curv::DenseMatrix c(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

// Softmax cross-entropy computed the naive way: probabilities first, then
// -sum y log yhat. The library's fused log-softmax form must agree.
inline double cost_unfused(const curv::ModelSpec& spec, const curv::ParamVector& params,
                           const curv::Batch& batch) {
    double total = 0.0;
    for (std::size_t n = 0; n < batch.size(); ++n) {
        curv::DenseVector x(std::vector<double>(batch.x.row(n), batch.x.row(n) + batch.x.cols()));
        const curv::DenseVector yhat = curv::forward(spec, params, x);
        double c = 0.0;
        for (std::size_t m = 0; m < yhat.len(); ++m)
            if (batch.y(n, m) != 0.0) c -= batch.y(n, m) * std::log(yhat[m]);
        total += c;
    }
    return total / static_cast<double>(batch.size());
}

// Central finite difference of the averaged cost with respect to one
// parameter.
inline double fd_grad_entry(const curv::ModelSpec& spec, const curv::ParamVector& params,
                            const curv::Batch& batch, std::size_t i, double h) {
    curv::ParamVector plus = params;
    curv::ParamVector minus = params;
    plus.data[i] += h;
    minus.data[i] -= h;
    return (curv::cost(spec, plus, batch) - curv::cost(spec, minus, batch)) / (2.0 * h);
}

inline curv::DenseVector fd_grad(const curv::ModelSpec& spec, const curv::ParamVector& params,
                                 const curv::Batch& batch, double h = 1e-5) {
    curv::DenseVector g(params.p());
    for (std::size_t i = 0; i < params.p(); ++i) g[i] = fd_grad_entry(spec, params, batch, i, h);
    return g;
}

// Full central finite-difference Hessian of the averaged cost, built from
// cost evaluations only (4-point formula), O(P^2) evaluations.
inline curv::DenseMatrix fd_hessian(const curv::ModelSpec& spec, const curv::ParamVector& params,
                                    const curv::Batch& batch, double h = 1e-4) {
    const std::size_t p = params.p();
    curv::DenseMatrix hess(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            curv::ParamVector w = params;
            auto eval = [&](double di, double dj) {
                // Cumulative so the i == j diagonal case perturbs once by di+dj.
                w.data[i] += di;
                w.data[j] += dj;
                const double c = curv::cost(spec, w, batch);
                w.data[i] = params.data[i];
                w.data[j] = params.data[j];
                return c;
            };
            double v;
            if (i == j) {
                v = (eval(h, 0.0) - 2.0 * eval(0.0, 0.0) + eval(-h, 0.0)) / (h * h);
            } else {
                v = (eval(h, h) - eval(h, -h) - eval(-h, h) + eval(-h, -h)) / (4.0 * h * h);
            }
            hess(i, j) = v;
            hess(j, i) = v;
        }
    }
    return hess;
}

// Directional finite difference of the averaged-cost gradient:
// (grad(w + h v) - grad(w - h v)) / (2h).
inline curv::DenseVector fd_hvp(const curv::ModelSpec& spec, const curv::ParamVector& params,
                                const curv::Batch& batch, const curv::DenseVector& v) {
    double wn = 0.0, vn = 0.0;
    for (std::size_t i = 0; i < params.p(); ++i) wn += params.data[i] * params.data[i];
    for (std::size_t i = 0; i < v.len(); ++i) vn += v[i] * v[i];
    const double h = 1e-4 * std::sqrt(wn) / std::sqrt(vn);
    curv::ParamVector plus = params;
    curv::ParamVector minus = params;
    for (std::size_t i = 0; i < params.p(); ++i) {
        plus.data[i] += h * v[i];
        minus.data[i] -= h * v[i];
    }
    const curv::GradResult gp = curv::grad_batch(spec, plus, batch);
    const curv::GradResult gm = curv::grad_batch(spec, minus, batch);
    curv::DenseVector out(params.p());
    const double inv = 1.0 / (2.0 * h * static_cast<double>(batch.size()));
    for (std::size_t i = 0; i < params.p(); ++i) out[i] = (gp.grad_total[i] - gm.grad_total[i]) * inv;
    return out;
}

// Spectral-norm distance between the projectors Q1 Q1^T and Q2 Q2^T.
inline double projector_distance(const curv::DenseMatrix& q1, const curv::DenseMatrix& q2) {
    const std::size_t p = q1.rows();
    curv::DenseMatrix diff(p, p, 0.0);
    for (std::size_t c = 0; c < q1.cols(); ++c)
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) diff(i, j) += q1(i, c) * q1(j, c);
    for (std::size_t c = 0; c < q2.cols(); ++c)
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) diff(i, j) -= q2(i, c) * q2(j, c);
    const curv::Svd s = curv::svd(diff);
    return s.singular_values.len() > 0 ? s.singular_values[0] : 0.0;
}

inline curv::DenseMatrix random_matrix(curv::Rng& rng, std::size_t r, std::size_t c) {
    curv::DenseMatrix m(r, c);
    for (std::size_t i = 0; i < r * c; ++i) m.data()[i] = rng.next_normal();
    return m;
}

inline curv::DenseMatrix random_symmetric(curv::Rng& rng, std::size_t n) {
    curv::DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = rng.next_normal();
            m(i, j) = v;
            m(j, i) = v;
        }
    return m;
}

inline curv::DenseVector random_vector(curv::Rng& rng, std::size_t n) {
    curv::DenseVector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = rng.next_normal();
    return v;
}

inline curv::ParamVector random_params(const curv::ModelSpec& spec, curv::Rng& rng,
                                       double scl = 0.5) {
    curv::DenseVector v(curv::param_count(spec));
    for (std::size_t i = 0; i < v.len(); ++i) v[i] = scl * rng.next_normal();
    return curv::ParamVector{std::move(v)};
}

inline curv::Batch random_batch(const curv::ModelSpec& spec, curv::Rng& rng, std::size_t n) {
    curv::DenseMatrix x(n, spec.input_width());
    for (std::size_t i = 0; i < n * spec.input_width(); ++i) x.data()[i] = rng.next_normal();
    curv::DenseMatrix y(n, spec.output_width(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
        y(i, rng.next_u64() % spec.output_width()) = 1.0;
    return curv::Batch{std::move(x), std::move(y)};
}

// The dummy linear regression model: widths (4, 1), raw output, weights
// (3, 4, 5, 2) and zero bias.
inline curv::ModelSpec linear_diag_spec() {
    curv::ModelSpec spec;
    spec.layer_widths = {4, 1};
    spec.hidden_activation = curv::Activation::identity;
    spec.output_mode = curv::OutputMode::raw_mean_output;
    return spec;
}

inline curv::ParamVector linear_diag_params() {
    return curv::ParamVector{curv::DenseVector({3.0, 4.0, 5.0, 2.0, 0.0})};
}

inline curv::Batch linear_diag_batch() {
    return curv::Batch{curv::DenseMatrix(2, 4, {1.0, 2.0, 3.0, 4.0, 2.0, 3.0, 4.0, 5.0}),
                       curv::DenseMatrix(2, 1, {0.0, 0.0})};
}

}  // namespace oracle
