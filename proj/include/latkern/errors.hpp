#pragma once

#include <stdexcept>
#include <string>

namespace latkern {

// Contract violation (dimension/degree mismatch, bad builder input, ...).
struct StructuralError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Evaluation requested outside a function's domain (e.g. F_k at the origin
// when the profile is singular there).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// A doubling-controlled quadrature failed to meet its tolerance; carries the
// last two iterates for diagnostics.
struct ToleranceError : std::runtime_error {
    double previous;
    double last;
    ToleranceError(const std::string& what, double prev, double lst)
        : std::runtime_error(what), previous(prev), last(lst) {}
};

// The large-time extraction ladder failed to settle.
struct ExtractionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A case the library deliberately does not evaluate directly; the message
// names the supported alternative route.
struct UnsupportedCaseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace latkern
