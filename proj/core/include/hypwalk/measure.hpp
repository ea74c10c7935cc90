#pragma once

#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "hypwalk/group.hpp"

namespace hypwalk {

/// Exact rational arithmetic for the small-n oracles.
using Rational = boost::multiprecision::cpp_rational;

/// Parses a decimal literal ("0.25", "1", "3e-2") into an exact rational.
Rational rational_from_decimal(const std::string& text);

/// A symmetric probability measure with full support on the generating set.
/// Probabilities are carried per letter, in alphabet order; an exact rational
/// copy is kept when the inputs were exactly representable.
struct StepMeasure {
    std::vector<double> prob;
    std::optional<std::vector<Rational>> exact;

    static StepMeasure uniform(const GroupModel& model);
    /// Builds from per-letter rational masses (keeps the exact form).
    static StepMeasure from_rationals(std::vector<Rational> masses);
    /// Builds from per-letter doubles (no exact form).
    static StepMeasure from_doubles(std::vector<double> masses);

    double operator()(Letter a) const { return prob[static_cast<std::size_t>(a)]; }
    bool has_exact() const { return exact.has_value(); }
};

struct MeasureViolation {
    enum class Kind { NotSymmetric, NotNormalized, ZeroMass };
    Kind kind;
    Letter letter = -1;  // NotSymmetric / ZeroMass
    double sum = 0.0;    // NotNormalized
    std::string describe(const GroupModel& model) const;
};

struct MeasureValidation {
    std::vector<MeasureViolation> violations;
    bool ok() const { return violations.empty(); }
    std::string describe(const GroupModel& model) const;
};

/// Checks symmetry mu(a^{-1}) = mu(a), positivity on all of S, and
/// normalization (exact for rational measures, 1e-12 otherwise).
MeasureValidation validate_measure(const GroupModel& model, const StepMeasure& m);

/// A one-parameter exponential family mu_lambda(a) = mu_0(a) e^{lambda phi(a)} / Z(lambda)
/// through a base measure, with its logarithmic derivative nu at lambda = 0.
struct MeasureCurve {
    StepMeasure base;
    std::vector<double> tilt;  // phi, inverse-invariant
    std::vector<double> nu;    // phi(a) - E_{mu_0}[phi]
    std::optional<std::vector<Rational>> nu_exact;

    static MeasureCurve make(const GroupModel& model, StepMeasure base, std::vector<double> tilt);
    /// Rational variant: keeps nu exact for the small-n oracles.
    static MeasureCurve make_exact(const GroupModel& model, StepMeasure base,
                                   std::vector<Rational> tilt);

    /// sum_a nu(a)^2 mu_0(a): the exact variance of each martingale increment.
    double increment_variance() const;
};

/// The measure at parameter lambda (|lambda| <= 1). curve_at(c, 0) returns the
/// base measure, exact form included.
StepMeasure curve_at(const GroupModel& model, const MeasureCurve& curve, double lambda);

/// Returns nu.
const std::vector<double>& curve_derivative(const MeasureCurve& curve);

/// log mu_lambda(a) - log mu_0(a) = lambda phi(a) - log Z(lambda).
double log_ratio(const MeasureCurve& curve, double lambda, Letter a);

/// Per-letter log-ratio table, one entry per letter.
std::vector<double> log_ratio_table(const MeasureCurve& curve, double lambda);

}  // namespace hypwalk
