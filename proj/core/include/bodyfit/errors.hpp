#pragma once

#include <stdexcept>
#include <string>

namespace bodyfit {

// Violated precondition or broken invariant on a public interface.
struct ContractViolation : std::invalid_argument {
    explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

// Numerically degenerate input (rank-deficient rotation, zero-length trunk, ...).
struct DegenerateInput : std::runtime_error {
    explicit DegenerateInput(const std::string& what) : std::runtime_error(what) {}
};

// File/IO problems, including malformed structured files. Message carries the
// offending path and field so readers never crash on bad input.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// A whole training phase failed; the message names the phase and round.
struct PhaseError : std::runtime_error {
    explicit PhaseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bodyfit
