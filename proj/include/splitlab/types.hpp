#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace splitlab {

/// Flat real parameter vector. Every iterate, center and gradient is one of these.
using ParamVec = Eigen::VectorXd;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate a precondition (dimension, index, range).
class UsageError : public Error {
public:
    using Error::Error;
};

/// A learning-rate or denominator constraint of a bound does not hold.
class ConstraintError : public Error {
public:
    using Error::Error;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

/// Partition parameters cannot be satisfied by the given labels.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Split-learning message does not match the receiving side's shape.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Raised when an iterate stops being finite. Carries the last finite iterate
/// and the (round, step) where the non-finite value appeared.
class DivergenceError : public Error {
public:
    DivergenceError(ParamVec last_finite, std::size_t round, std::size_t step)
        : Error("iterate became non-finite at round " + std::to_string(round) + ", step " +
                std::to_string(step)),
          last_finite_(std::move(last_finite)), round_(round), step_(step) {}

    const ParamVec& last_finite() const noexcept { return last_finite_; }
    std::size_t round() const noexcept { return round_; }
    std::size_t step() const noexcept { return step_; }

private:
    ParamVec last_finite_;
    std::size_t round_;
    std::size_t step_;
};

inline bool all_finite(const ParamVec& x) { return x.allFinite(); }

}  // namespace splitlab
