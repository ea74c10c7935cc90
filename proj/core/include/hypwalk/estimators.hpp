#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hypwalk/exact.hpp"
#include "hypwalk/green.hpp"
#include "hypwalk/group.hpp"
#include "hypwalk/measure.hpp"
#include "hypwalk/walk.hpp"

namespace hypwalk {

/// A numerical result: point value, standard error, sample sizes and enough
/// metadata to reproduce it.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    long N = 0;
    int n = 0;
    std::uint64_t seed = 0;
    std::string method;
    std::map<std::string, double> metadata;
    std::map<std::string, std::string> notes;
};

struct EstimatorOptions {
    int threads = 1;
    OracleOptions oracle;
    int oracle_bound_n = 12;  // horizon for the exact mean-distance bound metadata
};

/// Rate of escape: mean of d(id, Z_n)/n with its standard error. Metadata
/// carries the exact subadditive upper bound a(n')/n' when affordable.
Estimate escape_rate(const GroupModel& model, const StepMeasure& m, const Metric& metric, int n,
                     long N, std::uint64_t seed, const EstimatorOptions& opts = {});

/// Asymptotic entropy as the rate of escape in the walk's own Green metric
/// (tree-exact on free groups, bracketed ball metric otherwise).
Estimate entropy_via_green_speed(const GroupModel& model, const StepMeasure& m, int n, long N,
                                 std::uint64_t seed, const EstimatorOptions& opts = {});

/// Exact entropy sequence H(mu^j) with increments; the increment column is the
/// refined estimate of h.
struct EntropyRow {
    int n = 0;
    double entropy = 0.0;
    double increment = 0.0;  // H(mu^n) - H(mu^{n-1}); NaN at n = 0
};
std::vector<EntropyRow> entropy_via_convolution(const GroupModel& model, const StepMeasure& m,
                                                int n_max, const EstimatorOptions& opts = {});

/// The asymptotic correlation estimator: (1/n) mean of (d(id,Z_n) - dbar) M_n.
Estimate covariance_sigma(const GroupModel& model, const MeasureCurve& curve, const Metric& metric,
                          int n, long N, std::uint64_t seed, const EstimatorOptions& opts = {});

enum class FdTarget { EscapeRate, Entropy };
enum class FdSide { Central, Forward };

/// Finite-difference derivative of the chosen asymptotic functional along the
/// curve, with common random numbers across the +-lambda batches. The Entropy
/// target evaluates each tilted walk in its own tree-exact Green metric.
Estimate fd_derivative(const GroupModel& model, const MeasureCurve& curve, FdTarget target,
                       const Metric* escape_metric, double lambda, int n, long N,
                       std::uint64_t seed, const EstimatorOptions& opts = {},
                       FdSide side = FdSide::Central);

/// Girsanov-scaled derivative at lambda = sqrt(alpha/n): the same mu_0 batch
/// is reweighted by the likelihood ratio, so no second simulation is needed.
Estimate girsanov_derivative(const GroupModel& model, const MeasureCurve& curve,
                             const Metric& metric, int n, long N, std::uint64_t seed,
                             double alpha = 1.0, const EstimatorOptions& opts = {});

/// Joint CLT diagnostics for ((d(id,Z_n) - n ell)/sqrt(n), M_n/sqrt(n)).
struct CltReport {
    std::vector<int> grid;
    std::vector<double> var_d, var_M, cov;        // sample covariance entries
    std::vector<double> se_var_d, se_var_M, se_cov;
    std::vector<double> ks_d, ks_M;               // KS vs fitted normal
    double martingale_variance_exact = 0.0;       // sum nu^2 mu_0
    double ell_hat = 0.0;
    long N = 0;
    std::uint64_t seed = 0;
};
CltReport clt_report(const GroupModel& model, const MeasureCurve& curve, const Metric& metric,
                     const std::vector<int>& grid, long N, std::uint64_t seed,
                     std::optional<double> ell_hat = std::nullopt,
                     const EstimatorOptions& opts = {});

/// h <= v(d) * ell(mu; d), with v = 1 for the Green metric.
struct FundamentalInequalityReport {
    Estimate h_hat;
    Estimate ell_hat;
    double growth = 0.0;   // v(d)
    double slack = 0.0;    // v * ell - h
    double slack_se = 0.0;
    bool passes = false;   // slack >= -3 * combined SE
    std::string metric_name;
};
FundamentalInequalityReport fundamental_inequality_check(const GroupModel& model,
                                                         const StepMeasure& m, bool green_metric,
                                                         int n, long N, std::uint64_t seed,
                                                         const EstimatorOptions& opts = {});

/// (h(mu_lambda) - ell(mu_lambda; d_G^0)) / lambda for a list of lambdas, each
/// estimated from one batch under mu_lambda scoring both Green metrics on the
/// same trajectories.
struct GapDecayPoint {
    double lambda = 0.0;
    double gap_over_lambda = 0.0;  // <= 0 up to noise, tends to 0
    double se = 0.0;
};
std::vector<GapDecayPoint> entropy_gap_decay(const GroupModel& model, const MeasureCurve& curve,
                                             const std::vector<double>& lambdas, int n, long N,
                                             std::uint64_t seed,
                                             const EstimatorOptions& opts = {});

/// Kolmogorov-Smirnov distance between a sample and the normal law fitted to
/// its mean and variance.
double ks_against_fitted_normal(std::vector<double> sample);

}  // namespace hypwalk
