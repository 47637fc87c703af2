#pragma once

#include <stdexcept>
#include <string>

namespace margex {

enum class ErrorKind {
    Domain,            // argument outside the mathematical domain (e.g. theta < 0)
    Validation,        // structurally invalid parameters or configuration
    DegenerateRegime,  // entrant mass N^s <= 0
    DegenerateWeights, // weighting scheme integrates/sums to <= 0
    NonConvergence,    // iteration budget exhausted before tolerance
    Separation,        // logistic likelihood unbounded (perfect separation)
    InsufficientData,  // not enough observations for the requested estimate
    ThresholdUnattainable,
    EmptyStratum,
    EmptyMatch,
    UnstableEstimator, // too many bootstrap replicates failed
    Parse,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Quadrature failure that still carries the best estimate reached.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& msg, double best)
        : Error(ErrorKind::NonConvergence, msg), best_estimate_(best) {}

    double best_estimate() const { return best_estimate_; }

private:
    double best_estimate_;
};

const char* error_kind_name(ErrorKind kind);

} // namespace margex
