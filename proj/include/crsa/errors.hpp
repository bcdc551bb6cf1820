#pragma once

#include <stdexcept>
#include <string>

namespace crsa {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The constrained problem has no feasible point (e.g. lambda_p above every
/// achievable primary service rate).
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// lambda_p > mu_p: the primary queue is unstable and mu_s is undefined.
class PrimaryUnstableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace crsa
