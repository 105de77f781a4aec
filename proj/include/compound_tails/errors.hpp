#ifndef COMPOUND_TAILS_ERRORS_HPP
#define COMPOUND_TAILS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ctails {

// Parameter outside the mathematical domain of an operation.
class domain_error : public std::domain_error {
public:
    explicit domain_error(const std::string& msg) : std::domain_error(msg) {}
};

// A computation could not reach its declared tolerance; carries the
// tolerance actually achieved so callers can decide whether to proceed.
class numeric_error : public std::runtime_error {
public:
    numeric_error(const std::string& msg, double achieved_tolerance)
        : std::runtime_error(msg + " (achieved tolerance " +
                             std::to_string(achieved_tolerance) + ")"),
          achieved(achieved_tolerance) {}
    explicit numeric_error(const std::string& msg)
        : std::runtime_error(msg), achieved(0.0) {}
    double achieved;
};

// Caller violated a documented precondition (grid mismatch, missing
// capability, malformed config).
class contract_error : public std::logic_error {
public:
    explicit contract_error(const std::string& msg) : std::logic_error(msg) {}
};

// A requested computation would exceed a configured resource budget.
class resource_error : public std::runtime_error {
public:
    explicit resource_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ctails

#endif
