#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smoothedvotes {

/// Unsupported sizes, unknown registry names, missing witnesses.
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied argument is outside its documented domain.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A structural invariant was broken (non-bijective permutation, mismatched m, ...).
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The witness handed to a relative-axiom check does not satisfy its own invariants.
/// Distinct from "no violation".
class WitnessInvalid : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Covariance requested at phi = 0, where the point mass has no spread.
class SingularMatrixError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace smoothedvotes
