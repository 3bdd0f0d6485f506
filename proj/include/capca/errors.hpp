#pragma once

#include <stdexcept>
#include <string>

namespace capca {

/// Raised when an argument lies outside an operation's domain (bad rule
/// index, pattern too short, probability out of range, ...).
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Raised when the data itself cannot support the requested analysis.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace capca
