#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hle {

/// Malformed input: bad files, out-of-range arguments, inconsistent shapes.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain of a numerical function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Numerical failure inside the alignment iteration.
class AlignmentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The constraint system {S V S'} lost rank. `age` is the survival age whose
/// constraint row could not be pivoted.
class SingularSystemError : public AlignmentError {
public:
    SingularSystemError(int age, const std::string &what)
        : AlignmentError(what), age_{age} {}

    int age() const noexcept { return age_; }

private:
    int age_;
};

} // namespace hle
