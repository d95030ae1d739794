#pragma once

#include <stdexcept>
#include <string>

namespace mixflow {

/// Invalid model parameters or states outside the domain of Lambda, G, h_M.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Configuration text or values that fail validation.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Nonlinear or fixed-point iteration failure. Carries the last residual so the
/// caller can decide whether to retry with a smaller step.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace mixflow
