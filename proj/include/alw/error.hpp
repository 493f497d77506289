#pragma once

#include <stdexcept>
#include <string>

namespace alw {

// Bad parameters or violated preconditions (maps to CLI exit code 1).
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Distortion target outside the range where the closed-form R(d) is used.
class ValidityError : public DomainError {
public:
    explicit ValidityError(const std::string& what) : DomainError(what) {}
};

// Corrupt or truncated data (maps to CLI exit code 2).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace alw
