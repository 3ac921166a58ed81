#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace delayshare {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid construction arguments or violated preconditions.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Precedence graph contains a cycle; carries the activity ids of one cycle.
class CycleError : public Error {
public:
    CycleError(const std::string& msg, std::vector<int> cycle)
        : Error(msg), cycle_(std::move(cycle)) {}
    const std::vector<int>& cycle() const { return cycle_; }

private:
    std::vector<int> cycle_;
};

// Operation applied outside its mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// Work or memory limit would be exceeded.
class BudgetError : public Error {
public:
    using Error::Error;
};

// Malformed input text (JSON/CSV).
class ParseError : public Error {
public:
    using Error::Error;
};

// Well-formed input that violates the project-file schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace delayshare
