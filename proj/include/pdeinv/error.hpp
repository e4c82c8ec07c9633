#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pdeinv {

enum class ErrorKind {
    invalid_config,
    unsupported_grid,
    invalid_params,
    invalid_coefficient,
    insufficient_window,
    divergence,
    integration_failure,
    solver_failure,
    ill_posed,
    undefined_metric,
    empty_train,
    degenerate_grid,
    io,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::unsupported_grid: return "unsupported-grid";
    case ErrorKind::invalid_params: return "invalid-params";
    case ErrorKind::invalid_coefficient: return "invalid-coefficient";
    case ErrorKind::insufficient_window: return "insufficient-window";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::integration_failure: return "integration-failure";
    case ErrorKind::solver_failure: return "solver-failure";
    case ErrorKind::ill_posed: return "ill-posed";
    case ErrorKind::undefined_metric: return "undefined-metric";
    case ErrorKind::empty_train: return "empty-train";
    case ErrorKind::degenerate_grid: return "degenerate-grid";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

/// Base exception for every failure raised by the library. The kind drives
/// CLI exit codes; the message carries the context.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// True for failures of the numerics rather than of the caller's input.
    bool is_numerical() const noexcept {
        switch (kind_) {
        case ErrorKind::divergence:
        case ErrorKind::integration_failure:
        case ErrorKind::solver_failure:
        case ErrorKind::ill_posed:
            return true;
        default:
            return false;
        }
    }

private:
    ErrorKind kind_;
};

/// Raised when a time integrator meets a non-finite state or gives up.
/// `time` is the simulation time of the failure (or last good time).
class TimeIntegrationError : public Error {
public:
    TimeIntegrationError(ErrorKind kind, double time, const std::string& message)
        : Error(kind, message + " (t=" + std::to_string(time) + ")"), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Raised by a linear solve that misses its residual target.
class SolverFailure : public Error {
public:
    SolverFailure(double achieved_residual, const std::string& message)
        : Error(ErrorKind::solver_failure,
                message + " (relative residual " + std::to_string(achieved_residual) + ")"),
          residual_(achieved_residual) {}

    double achieved_residual() const noexcept { return residual_; }

private:
    double residual_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

}  // namespace pdeinv
