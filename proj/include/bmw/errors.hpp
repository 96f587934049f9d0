#pragma once

#include <stdexcept>
#include <string>

namespace bmw {

// Input outside the mathematical domain of a function (p outside (0,1),
// |rho| >= 1, non-finite arguments, ...).
class DomainError : public std::domain_error {
   public:
    using std::domain_error::domain_error;
};

// Caller broke a structural precondition (mismatched lengths, empty
// cohorts, counts that violate conservation).
class ContractError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure could not complete, e.g. a matrix that is not
// positive definite.
class NumericError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Grid search found no design satisfying the type I error constraint.
class CalibrationError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

}  // namespace bmw
