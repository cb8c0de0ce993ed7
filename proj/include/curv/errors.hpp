#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace curv {

// Dimension/shape mismatch between operands.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// A precondition on values (not shapes) was violated: non-one-hot labels,
// batch-size divisibility, non-symmetric input to a symmetric solver, etc.
class ContractError : public std::invalid_argument {
public:
    explicit ContractError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Iterative solver failed to reach its tolerance. Carries the best
// per-eigenpair residuals achieved so the caller can inspect how close it got.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& msg, std::vector<double> residuals)
        : std::runtime_error(msg), best_residuals(std::move(residuals)) {}

    std::vector<double> best_residuals;
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace curv
