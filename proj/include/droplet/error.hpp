#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace droplet {

enum class ErrorCode {
    invalid_argument,
    non_finite,
    grid_mismatch,
    assumption_violated,
    box_too_small,
    not_converged,
    step_failure,
    breakdown,
    bracket_failure,
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Thrown by iterative solvers; carries the residual trace up to the failure.
class ConvergenceError : public Error {
public:
    ConvergenceError(ErrorCode code, const std::string& what, std::vector<double> history)
        : Error(code, what), history_(std::move(history)) {}
    const std::vector<double>& residual_history() const noexcept { return history_; }
    double last_residual() const noexcept { return history_.empty() ? 0.0 : history_.back(); }

private:
    std::vector<double> history_;
};

} // namespace droplet
