#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hypwalk {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A symbol outside the model's alphabet was encountered.
class UnknownLetter : public Error {
public:
    explicit UnknownLetter(const std::string& token)
        : Error("unknown letter: " + token), token(token) {}
    std::string token;
};

/// An exact computation would exceed its configured support/path budget.
class BudgetExceeded : public Error {
public:
    BudgetExceeded(std::size_t estimated, std::size_t budget)
        : Error("budget exceeded: estimated " + std::to_string(estimated) +
                " > budget " + std::to_string(budget)),
          estimated(estimated), budget(budget) {}
    std::size_t estimated;
    std::size_t budget;
};

/// An iterative solve failed to reach its residual target.
class NonConvergence : public Error {
public:
    NonConvergence(double residual, double target)
        : Error("iteration did not converge: residual " + std::to_string(residual) +
                " > target " + std::to_string(target)),
          residual(residual), target(target) {}
    double residual;
    double target;
};

/// A direction function failed the centering condition sum nu(a) mu(a) = 0.
class NotCentered : public Error {
public:
    explicit NotCentered(double sum)
        : Error("direction is not centered: sum nu*mu = " + std::to_string(sum)),
          sum(sum) {}
    double sum;
};

/// Importance weights are too skewed to produce a usable estimate.
class DegenerateWeights : public Error {
public:
    explicit DegenerateWeights(double ess)
        : Error("degenerate reweighting: effective sample size " + std::to_string(ess)),
          ess(ess) {}
    double ess;
};

/// Invalid step size for a finite-difference derivative.
class InvalidLambda : public Error {
public:
    explicit InvalidLambda(double lambda)
        : Error("invalid lambda: " + std::to_string(lambda)), lambda(lambda) {}
    double lambda;
};

/// Configuration or input validation failure (CLI exit code 2).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

}  // namespace hypwalk
