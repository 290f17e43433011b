#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace tacnode {

// Invalid argument on a documented domain (order <= -1, negative time, ...).
// CLI maps this to exit code 2.
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Parameter combination outside the geometric regime an operation supports
// (e.g. liquid-region endpoints requested where the gas phase has closed).
class CaseError : public DomainError {
public:
    explicit CaseError(const std::string& what) : DomainError(what) {}
};

// An iterative scheme exhausted its budget. CLI maps this to exit code 3.
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + format_residual(residual) + ")"),
          final_residual(residual) {}
    double final_residual;

private:
    static std::string format_residual(double r)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", r);
        return buf;
    }
};

// Adaptive step control hit the step floor; the problem is stiffer than the
// integrator tolerance allows. CLI maps this to exit code 3.
class StiffnessFailure : public std::runtime_error {
public:
    explicit StiffnessFailure(const std::string& what) : std::runtime_error(what) {}
};

// A least-squares or extrapolation fit failed to stabilize (residual above
// threshold or hopeless conditioning). CLI maps this to exit code 3.
class FitFailure : public std::runtime_error {
public:
    FitFailure(const std::string& what, double residual)
        : std::runtime_error(what), final_residual(residual) {}
    double final_residual;
};

// The Gram matrix of the biorthogonal model could not be factorized at the
// working precision. CLI maps this to exit code 3.
class SingularGram : public std::runtime_error {
public:
    SingularGram(const std::string& what, double condition)
        : std::runtime_error(what + " (condition estimate " + format_cond(condition) + ")"),
          condition_estimate(condition) {}
    double condition_estimate;

private:
    static std::string format_cond(double c)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", c);
        return buf;
    }
};

} // namespace tacnode
