#pragma once

#include <stdexcept>
#include <string>

namespace kms {

/// A request that is well-formed but mathematically unanswerable as posed:
/// infeasible cone, divergent series, violated precondition. CLI maps these
/// to exit code 1.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace kms
