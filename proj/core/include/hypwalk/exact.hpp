#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "hypwalk/group.hpp"
#include "hypwalk/measure.hpp"

namespace hypwalk {

/// Budgets for the exact engines.
struct OracleOptions {
    std::size_t support_budget = 10'000'000;        // convolution support guard
    std::size_t rational_support_budget = 200'000;  // above this, fall back to floats
    std::size_t path_budget = 100'000'000;          // |S|^n full-enumeration guard
    bool force_float = false;                       // disable rational mode
};

/// The exact law of Z_n, keys in normal form, sorted lexicographically.
/// mass_exact is parallel to mass and present in rational mode.
struct ExactDistribution {
    int n = 0;
    bool exact = false;
    std::vector<std::pair<Word, double>> mass;
    std::optional<std::vector<Rational>> mass_exact;

    std::size_t support() const { return mass.size(); }
    double total() const;
    /// Mass at a normal-form word (0 if absent).
    double at(const Word& w) const;
};

/// Exact law of Z_n by sparse convolution over normal forms.
ExactDistribution convolve_power(const GroupModel& model, const StepMeasure& m, int n,
                                 const OracleOptions& opts = {});

/// H(mu^n) in nats.
double exact_entropy(const GroupModel& model, const StepMeasure& m, int n,
                     const OracleOptions& opts = {});

/// H(mu^j) for j = 0..n_max in one convolution sweep.
std::vector<double> exact_entropy_series(const GroupModel& model, const StepMeasure& m, int n_max,
                                         const OracleOptions& opts = {});

/// E[d(id, Z_n)] exactly.
double exact_mean_distance(const GroupModel& model, const StepMeasure& m, int n,
                           const Metric& metric, const OracleOptions& opts = {});

/// E[d(id, Z_j)] for j = 0..n_max in one sweep.
std::vector<double> exact_mean_distance_series(const GroupModel& model, const StepMeasure& m,
                                               int n_max, const Metric& metric,
                                               const OracleOptions& opts = {});

enum class CovarianceEngine { Convolution, Paths };

/// E[d(id, Z_n) M_n] with M_n = sum_j nu(X_j). The convolution engine carries
/// the conditional mean of M_n per endpoint; the path engine enumerates all
/// |S|^n increment sequences and is the independent cross-check.
double exact_covariance(const GroupModel& model, const StepMeasure& m,
                        const std::vector<double>& nu, int n, const Metric& metric,
                        const OracleOptions& opts = {},
                        CovarianceEngine engine = CovarianceEngine::Convolution,
                        const std::vector<Rational>* nu_exact = nullptr);

/// E^lambda[d(id, Z_n)] along the curve.
double exact_tilted_mean(const GroupModel& model, const MeasureCurve& curve, double lambda, int n,
                         const Metric& metric, const OracleOptions& opts = {});

/// Path-enumeration check of the reweighting identity: the mu_0-expectation of
/// d(id,Z_n) times the running likelihood ratio vs. the direct mu_lambda
/// expectation, plus the total reweighted mass (exactly 1 in exact arithmetic).
struct GirsanovCheck {
    double weighted_mean = 0.0;  // E^0[d * prod_j mu_l(X_j)/mu_0(X_j)]
    double direct_mean = 0.0;    // E^lambda[d]
    double weighted_total = 0.0; // E^0[prod_j mu_l(X_j)/mu_0(X_j)]
};
GirsanovCheck girsanov_path_check(const GroupModel& model, const MeasureCurve& curve,
                                  double lambda, int n, const Metric& metric,
                                  const OracleOptions& opts = {});

/// Birth-death projection of |Z_n| for letter-uniform measures on homogeneous
/// models (free groups, free products with equal factor orders). Exact and
/// cheap far beyond the convolution budget.
struct DistanceChain {
    bool applicable = false;
    double up_from_zero = 1.0;
    double up = 0.0;    // |Z| grows by 1
    double stay = 0.0;  // syllable merge that keeps the length
    double down = 0.0;  // cancellation
};
DistanceChain distance_chain(const GroupModel& model, const StepMeasure& m);

/// P[|Z_n| = r] for r = 0..n.
std::vector<double> chain_distribution(const DistanceChain& chain, int n);

/// E|Z_j| for j = 0..n_max.
std::vector<double> chain_mean_distance_series(const DistanceChain& chain, int n_max);

/// mu^n(z) for a point z with |z| = r (letter-uniform measures only).
double chain_point_probability(const GroupModel& model, const DistanceChain& chain, int n, int r);

/// r_j = (mu^{2j}(id))^{1/(2j)} for j = 1..n_max; nondecreasing, converges to
/// the spectral radius from below.
std::vector<double> spectral_radius_sequence(const GroupModel& model, const StepMeasure& m,
                                             int n_max, const OracleOptions& opts = {});

/// Upper estimate of the spectral radius: last element of the sequence plus a
/// safety margin. Uses the distance chain at n_star when applicable, the
/// convolution budget otherwise.
struct SpectralRadiusUpper {
    double rho_hat = 1.0;
    int n_star = 0;
    bool from_chain = false;
};
SpectralRadiusUpper spectral_radius_upper(const GroupModel& model, const StepMeasure& m,
                                          double margin = 0.02, int n_star = 400,
                                          const OracleOptions& opts = {});

/// a(n) = E|Z_n| for n = 1..n_max plus the empirical almost-additivity
/// constant: tau0_hat = max over n+k <= n_max of (a(n) + a(k) - a(n+k)) / 2.
struct SandwichReport {
    std::vector<double> a;  // a[0] unused; a[n] = E d(id, Z_n)
    double tau0_hat = 0.0;
    bool subadditive_ok = true;
};
SandwichReport mean_distance_sandwich(const GroupModel& model, const StepMeasure& m,
                                      const Metric& metric, int n_max,
                                      const OracleOptions& opts = {});

/// mu^j(z) for j = 0..T (convolution; see green module for the chain fast path).
std::vector<double> point_mass_series(const GroupModel& model, const StepMeasure& m,
                                      const GroupElement& z, int T,
                                      const OracleOptions& opts = {});

/// Upper estimate of |supp(mu^n)|: parity-refined ball size capped by |S|^n.
/// This is what the convolution budget guard compares against.
std::size_t convolution_support_estimate(const GroupModel& model, int n);

}  // namespace hypwalk
