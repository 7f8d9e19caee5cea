#pragma once

#include <stdexcept>
#include <string>

namespace sdd {

// Base of every exception thrown by this library. The CLI maps ConfigError
// to exit code 1 and everything else to exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct ConditionError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct TrainingError : Error { using Error::Error; };
struct SelectionError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace sdd
