#include "curv/curvature.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace curv {

namespace {

void check_divisible(std::size_t n, std::size_t batch_size, const char* who) {
    if (batch_size < 1) throw ContractError(std::string(who) + ": batch size must be >= 1");
    if (n == 0) throw ContractError(std::string(who) + ": empty dataset");
    if (n % batch_size != 0)
        throw ContractError(std::string(who) + ": dataset size " + std::to_string(n) +
                            " is not divisible by batch size " + std::to_string(batch_size) +
                            "; refusing to drop the remainder");
}

void check_memory_cap(std::size_t p, std::size_t cap, const char* who) {
    if (p > cap)
        throw ContractError(std::string(who) + ": P = " + std::to_string(p) +
                            " exceeds the dense memory cap " + std::to_string(cap) +
                            "; use the matrix-free eigensolvers instead");
}

}  // namespace

HessianResult assemble_hessian(const ModelSpec& spec, const ParamVector& params,
                               const Batch& dataset, const CurvatureConfig& config) {
    const std::size_t p = param_count(spec);
    check_memory_cap(p, config.memory_cap, "assemble_hessian");
    check_divisible(dataset.size(), config.batch_size_h, "assemble_hessian");
    const std::size_t nbatches = dataset.size() / config.batch_size_h;
    const std::size_t lanes = std::max<std::size_t>(1, config.parallelism);

    const LayerParams lp = unflatten_params(spec, params);
    DenseMatrix h(p, p, 0.0);
    for (std::size_t b = 0; b < nbatches; ++b) {
        const ForwardBackward fb =
            forward_backward(spec, lp, slice_batch(dataset, b * config.batch_size_h,
                                                   config.batch_size_h));
        std::exception_ptr worker_error;
        std::mutex error_mutex;
        auto columns = [&](std::size_t lane) {
            try {
                DenseVector e(p, 0.0);
                for (std::size_t col = lane; col < p; col += lanes) {
                    e[col] = 1.0;
                    const DenseVector hv = hvp_from_cache(spec, lp, fb, e);
                    e[col] = 0.0;
                    for (std::size_t row = 0; row < p; ++row) h(row, col) += hv[row];
                }
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!worker_error) worker_error = std::current_exception();
            }
        };
        if (lanes == 1) {
            columns(0);
        } else {
            std::vector<std::thread> workers;
            workers.reserve(lanes);
            for (std::size_t lane = 0; lane < lanes; ++lane) workers.emplace_back(columns, lane);
            for (std::thread& t : workers) t.join();
        }
        if (worker_error) std::rethrow_exception(worker_error);
    }
    const double inv_b = 1.0 / static_cast<double>(nbatches);
    for (std::size_t i = 0; i < p * p; ++i) h.data()[i] *= inv_b;

    double asym = 0.0;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j)
            asym = std::max(asym, std::abs(h(i, j) - h(j, i)));
    const double hmax = max_abs(h);
    if (asym > 1e-8 * hmax)
        throw std::runtime_error("assemble_hessian: pre-symmetrization asymmetry " +
                                 std::to_string(asym) + " exceeds 1e-8 * " +
                                 std::to_string(hmax));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) {
            const double avg = 0.5 * (h(i, j) + h(j, i));
            h(i, j) = avg;
            h(j, i) = avg;
        }
    return HessianResult{std::move(h), asym};
}

DenseMatrix assemble_jacobian(const ModelSpec& spec, const ParamVector& params,
                              const Batch& batch) {
    if (batch.size() == 0) throw ContractError("assemble_jacobian: empty batch");
    const LayerParams lp = unflatten_params(spec, params);
    const ForwardBackward fb = forward_backward(spec, lp, batch);
    return per_example_grad_rows(spec, fb);
}

DenseMatrix assemble_opg(const ModelSpec& spec, const ParamVector& params,
                         const Batch& dataset, const CurvatureConfig& config) {
    const std::size_t p = param_count(spec);
    check_memory_cap(p, config.memory_cap, "assemble_opg");
    check_divisible(dataset.size(), config.batch_size_g, "assemble_opg");
    const std::size_t nbatches = dataset.size() / config.batch_size_g;

    DenseMatrix g(p, p, 0.0);
    for (std::size_t b = 0; b < nbatches; ++b) {
        const DenseMatrix jb = assemble_jacobian(
            spec, params, slice_batch(dataset, b * config.batch_size_g, config.batch_size_g));
        const double inv_rows = 1.0 / static_cast<double>(jb.rows());
        // G += (1/|batch|) J_b^T J_b as a sum of scaled outer products;
        // row[i]*row[j] commutes bitwise, so G stays exactly symmetric.
        for (std::size_t n = 0; n < jb.rows(); ++n) {
            const double* row = jb.row(n);
            for (std::size_t i = 0; i < p; ++i) {
                if (row[i] == 0.0) continue;
                double* grow = g.row(i);
                for (std::size_t j = 0; j < p; ++j) grow[j] += (row[i] * row[j]) * inv_rows;
            }
        }
    }
    const double inv_b = 1.0 / static_cast<double>(nbatches);
    for (std::size_t i = 0; i < p * p; ++i) g.data()[i] *= inv_b;
    return g;
}

}  // namespace curv
