#include "hypwalk/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hypwalk {

namespace {

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& xs) {
    MeanSd out;
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
    return out;
}

BatchSpec make_batch(const GroupModel& model, StepMeasure measure, const Metric& metric, int n,
                     long N, std::uint64_t seed, int threads) {
    BatchSpec spec;
    spec.model = &model;
    spec.measure = std::move(measure);
    spec.horizon = n;
    spec.checkpoints = {n};
    spec.trajectories = N;
    spec.seed = seed;
    spec.metrics = {&metric};
    spec.store_records = true;
    spec.threads = threads;
    return spec;
}

std::vector<double> record_column(const BatchResult& batch, std::size_t checkpoint,
                                  std::size_t n_metrics, std::size_t metric_index) {
    std::vector<double> out;
    out.reserve(batch.records.size());
    for (const auto& rec : batch.records)
        out.push_back(rec.distance[checkpoint * n_metrics + metric_index]);
    return out;
}

// Exact a(n')/n' upper bound on the escape rate, for the metadata channel.
void attach_oracle_bound(Estimate& est, const GroupModel& model, const StepMeasure& m,
                         const Metric& metric, int n, const EstimatorOptions& opts) {
    try {
        DistanceChain chain = distance_chain(model, m);
        const std::vector<double>* costs = metric.letter_costs();
        if (chain.applicable && costs &&
            std::all_of(costs->begin(), costs->end(), [&](double c) { return c == (*costs)[0]; })) {
            auto means = chain_mean_distance_series(chain, n);
            est.metadata["oracle_upper_bound"] = (*costs)[0] * means.back() / n;
            est.metadata["oracle_n"] = n;
            return;
        }
        int np = std::min(n, opts.oracle_bound_n);
        double a = exact_mean_distance(model, m, np, metric, opts.oracle);
        est.metadata["oracle_upper_bound"] = a / np;
        est.metadata["oracle_n"] = np;
    } catch (const BudgetExceeded&) {
        est.notes["oracle_upper_bound"] = "skipped: budget exceeded";
    }
}

}  // namespace

double ks_against_fitted_normal(std::vector<double> sample) {
    if (sample.size() < 2) return 0.0;
    auto ms = mean_sd(sample);
    if (ms.sd == 0.0) return 1.0;
    std::sort(sample.begin(), sample.end());
    double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double z = (sample[i] - ms.mean) / ms.sd;
        double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
        double lo = static_cast<double>(i) / n;
        double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(cdf - lo, hi - cdf));
    }
    return d;
}

Estimate escape_rate(const GroupModel& model, const StepMeasure& m, const Metric& metric, int n,
                     long N, std::uint64_t seed, const EstimatorOptions& opts) {
    if (n < 1) throw ValidationError("escape_rate needs n >= 1");
    BatchSpec spec = make_batch(model, m, metric, n, N, seed, opts.threads);
    BatchResult batch = sample_batch(spec);
    auto d = record_column(batch, 0, 1, 0);
    auto ms = mean_sd(d);
    Estimate est;
    est.value = ms.mean / n;
    est.std_error = ms.sd / (std::sqrt(static_cast<double>(N)) * n);
    est.N = N;
    est.n = n;
    est.seed = seed;
    est.method = "escape_rate(" + metric.name() + ")";
    attach_oracle_bound(est, model, m, metric, n, opts);
    return est;
}

Estimate entropy_via_green_speed(const GroupModel& model, const StepMeasure& m, int n, long N,
                                 std::uint64_t seed, const EstimatorOptions& opts) {
    if (model.kind() == GroupKind::FreeGroup) {
        FirstPassageTable table = tree_first_passage(model, m);
        LetterCostMetric green = tree_green_metric(model, table);
        Estimate est = escape_rate(model, m, green, n, N, seed, opts);
        est.method = "entropy_green_speed(tree)";
        est.metadata["green_at_id"] = table.green_at_id();
        est.metadata["first_passage_residual"] = table.residual;
        return est;
    }
    BallGreenMetric green(model, m);
    Estimate est = escape_rate(model, m, green, n, N, seed, opts);
    est.method = "entropy_green_speed(ball)";
    est.metadata["bracket_halfwidth_max"] = green.max_halfwidth();
    return est;
}

std::vector<EntropyRow> entropy_via_convolution(const GroupModel& model, const StepMeasure& m,
                                                int n_max, const EstimatorOptions& opts) {
    auto hs = exact_entropy_series(model, m, n_max, opts.oracle);
    std::vector<EntropyRow> rows(hs.size());
    for (std::size_t j = 0; j < hs.size(); ++j) {
        rows[j].n = static_cast<int>(j);
        rows[j].entropy = hs[j];
        rows[j].increment =
            j == 0 ? std::numeric_limits<double>::quiet_NaN() : hs[j] - hs[j - 1];
    }
    return rows;
}

Estimate covariance_sigma(const GroupModel& model, const MeasureCurve& curve, const Metric& metric,
                          int n, long N, std::uint64_t seed, const EstimatorOptions& opts) {
    if (n < 1) throw ValidationError("covariance_sigma needs n >= 1");
    BatchSpec spec = make_batch(model, curve.base, metric, n, N, seed, opts.threads);
    spec.curve = &curve;
    BatchResult batch = sample_batch(spec);
    auto d = record_column(batch, 0, 1, 0);
    std::vector<double> M;
    M.reserve(batch.records.size());
    for (const auto& rec : batch.records) M.push_back(rec.martingale[0]);

    double dbar = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(N);
    double mbar = std::accumulate(M.begin(), M.end(), 0.0) / static_cast<double>(N);
    std::vector<double> psi(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) psi[i] = (d[i] - dbar) * (M[i] - mbar);
    auto ms = mean_sd(psi);

    Estimate est;
    est.value = ms.mean / n;
    est.std_error = ms.sd / (std::sqrt(static_cast<double>(N)) * n);
    est.N = N;
    est.n = n;
    est.seed = seed;
    est.method = "covariance_sigma(" + metric.name() + ")";
    est.metadata["martingale_mean"] = mbar;
    est.metadata["increment_variance_exact"] = curve.increment_variance();
    est.notes["centering"] = "sample-mean centering; O(1/N) bias";
    return est;
}

Estimate fd_derivative(const GroupModel& model, const MeasureCurve& curve, FdTarget target,
                       const Metric* escape_metric, double lambda, int n, long N,
                       std::uint64_t seed, const EstimatorOptions& opts, FdSide side) {
    if (lambda <= 0.0 || lambda > 1.0) throw InvalidLambda(lambda);
    if (n < 1) throw ValidationError("fd_derivative needs n >= 1");
    if (target == FdTarget::EscapeRate && escape_metric == nullptr)
        throw ValidationError("fd_derivative(EscapeRate) needs a metric");
    if (target == FdTarget::Entropy && model.kind() != GroupKind::FreeGroup)
        throw ValidationError("fd_derivative(Entropy) needs a free group (tree-exact Green metric)");

    double lambda_hi = lambda;
    double lambda_lo = side == FdSide::Central ? -lambda : 0.0;
    double denom = (lambda_hi - lambda_lo) * n;

    StepMeasure mu_hi = curve_at(model, curve, lambda_hi);
    StepMeasure mu_lo = curve_at(model, curve, lambda_lo);

    std::optional<LetterCostMetric> green_hi, green_lo;
    const Metric* metric_hi = escape_metric;
    const Metric* metric_lo = escape_metric;
    if (target == FdTarget::Entropy) {
        green_hi.emplace(tree_green_metric(model, tree_first_passage(model, mu_hi), "green-tree(+)"));
        green_lo.emplace(tree_green_metric(model, tree_first_passage(model, mu_lo), "green-tree(-)"));
        metric_hi = &*green_hi;
        metric_lo = &*green_lo;
    }

    // Common random numbers: both batches consume the same (seed, index, step)
    // uniforms through the same inverse-CDF letter order.
    BatchSpec spec_hi = make_batch(model, mu_hi, *metric_hi, n, N, seed, opts.threads);
    BatchSpec spec_lo = make_batch(model, mu_lo, *metric_lo, n, N, seed, opts.threads);
    BatchResult hi = sample_batch(spec_hi);
    BatchResult lo = sample_batch(spec_lo);

    std::vector<double> paired(static_cast<std::size_t>(N));
    for (std::size_t i = 0; i < paired.size(); ++i)
        paired[i] = (hi.records[i].distance[0] - lo.records[i].distance[0]) / denom;
    auto ms = mean_sd(paired);

    Estimate est;
    est.value = ms.mean;
    est.std_error = ms.sd / std::sqrt(static_cast<double>(N));
    est.N = N;
    est.n = n;
    est.seed = seed;
    std::string target_name =
        target == FdTarget::Entropy ? "entropy" : "escape," + escape_metric->name();
    est.method = std::string("fd_") + (side == FdSide::Central ? "central" : "forward") + "(" +
                 target_name + ")";
    est.metadata["lambda"] = lambda;
    est.notes["bias"] = side == FdSide::Central ? "O(lambda^2)" : "O(lambda)";
    return est;
}

Estimate girsanov_derivative(const GroupModel& model, const MeasureCurve& curve,
                             const Metric& metric, int n, long N, std::uint64_t seed,
                             double alpha, const EstimatorOptions& opts) {
    if (n < 1) throw ValidationError("girsanov_derivative needs n >= 1");
    double lambda = std::sqrt(alpha / static_cast<double>(n));
    if (!(lambda > 0.0) || lambda > 1.0) throw InvalidLambda(lambda);

    BatchSpec spec = make_batch(model, curve.base, metric, n, N, seed, opts.threads);
    spec.curve = &curve;
    spec.lambdas = {lambda};
    BatchResult batch = sample_batch(spec);

    bool constant_direction =
        std::all_of(curve.nu.begin(), curve.nu.end(), [](double v) { return v == 0.0; });

    std::vector<double> d = record_column(batch, 0, 1, 0);
    std::vector<double> w(d.size());
    double max_w = 0.0, sum_w = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        w[i] = std::exp(batch.records[i].logweight[0]);
        max_w = std::max(max_w, w[i]);
        sum_w += w[i];
    }
    double ess = max_w > 0.0 ? sum_w / max_w : 0.0;
    if (!constant_direction && ess < 10.0) throw DegenerateWeights(ess);

    double T = 0.0, D = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        T += w[i] * d[i];
        D += d[i];
    }
    T /= static_cast<double>(N);
    D /= static_cast<double>(N);
    double W = sum_w / static_cast<double>(N);
    double tilted_mean = T / W;

    Estimate est;
    est.value = (tilted_mean - D) / (lambda * n);
    // influence function of the self-normalized difference
    std::vector<double> psi(d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        psi[i] = (w[i] * (d[i] - tilted_mean) / W - (d[i] - D)) / (lambda * n);
    auto ms = mean_sd(psi);
    est.std_error = ms.sd / std::sqrt(static_cast<double>(N));
    est.N = N;
    est.n = n;
    est.seed = seed;
    est.method = "girsanov(" + metric.name() + ")";
    est.metadata["lambda"] = lambda;
    est.metadata["alpha"] = alpha;
    est.metadata["ess"] = ess;
    est.metadata["mean_weight"] = W;
    return est;
}

CltReport clt_report(const GroupModel& model, const MeasureCurve& curve, const Metric& metric,
                     const std::vector<int>& grid, long N, std::uint64_t seed,
                     std::optional<double> ell_hat, const EstimatorOptions& opts) {
    if (grid.empty()) throw ValidationError("clt_report needs a nonempty grid");
    for (int g : grid)
        if (g < 1) throw ValidationError("clt grid points must be >= 1");
    BatchSpec spec = make_batch(model, curve.base, metric, grid.back(), N, seed, opts.threads);
    spec.checkpoints = grid;
    spec.curve = &curve;
    BatchResult batch = sample_batch(spec);

    CltReport report;
    report.grid = grid;
    report.N = N;
    report.seed = seed;
    report.martingale_variance_exact = curve.increment_variance();

    std::size_t last = grid.size() - 1;
    auto d_last = record_column(batch, last, 1, 0);
    report.ell_hat = ell_hat.value_or(std::accumulate(d_last.begin(), d_last.end(), 0.0) /
                                      (static_cast<double>(N) * grid.back()));

    for (std::size_t g = 0; g < grid.size(); ++g) {
        double sqrt_n = std::sqrt(static_cast<double>(grid[g]));
        auto d = record_column(batch, g, 1, 0);
        std::vector<double> x(d.size()), y(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            x[i] = (d[i] - grid[g] * report.ell_hat) / sqrt_n;
            y[i] = batch.records[i].martingale[g] / sqrt_n;
        }
        auto mx = mean_sd(x);
        auto my = mean_sd(y);
        double cov = 0.0, m22 = 0.0, m4x = 0.0, m4y = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double cx = x[i] - mx.mean, cy = y[i] - my.mean;
            cov += cx * cy;
            m22 += cx * cx * cy * cy;
            m4x += cx * cx * cx * cx;
            m4y += cy * cy * cy * cy;
        }
        double Nn = static_cast<double>(N);
        cov /= Nn;
        m22 /= Nn;
        m4x /= Nn;
        m4y /= Nn;
        double var_x = mx.sd * mx.sd, var_y = my.sd * my.sd;
        report.var_d.push_back(var_x);
        report.var_M.push_back(var_y);
        report.cov.push_back(cov);
        report.se_var_d.push_back(std::sqrt(std::max(0.0, m4x - var_x * var_x) / Nn));
        report.se_var_M.push_back(std::sqrt(std::max(0.0, m4y - var_y * var_y) / Nn));
        report.se_cov.push_back(std::sqrt(std::max(0.0, m22 - cov * cov) / Nn));
        report.ks_d.push_back(ks_against_fitted_normal(x));
        report.ks_M.push_back(ks_against_fitted_normal(y));
    }
    return report;
}

FundamentalInequalityReport fundamental_inequality_check(const GroupModel& model,
                                                         const StepMeasure& m, bool green_metric,
                                                         int n, long N, std::uint64_t seed,
                                                         const EstimatorOptions& opts) {
    FundamentalInequalityReport report;
    report.h_hat = entropy_via_green_speed(model, m, n, N, seed + 1, opts);
    if (green_metric) {
        if (model.kind() != GroupKind::FreeGroup)
            throw ValidationError("green-metric inequality check needs a free group");
        FirstPassageTable table = tree_first_passage(model, m);
        LetterCostMetric green = tree_green_metric(model, table);
        report.ell_hat = escape_rate(model, m, green, n, N, seed, opts);
        report.growth = 1.0;  // v(d_G) = 1
        report.metric_name = "green-tree";
    } else {
        WordMetric word(model);
        report.ell_hat = escape_rate(model, m, word, n, N, seed, opts);
        report.growth = model.growth_rate();
        report.metric_name = "word";
    }
    report.slack = report.growth * report.ell_hat.value - report.h_hat.value;
    report.slack_se = std::sqrt(report.growth * report.growth * report.ell_hat.std_error *
                                    report.ell_hat.std_error +
                                report.h_hat.std_error * report.h_hat.std_error);
    report.passes = report.slack >= -3.0 * report.slack_se;
    return report;
}

std::vector<GapDecayPoint> entropy_gap_decay(const GroupModel& model, const MeasureCurve& curve,
                                             const std::vector<double>& lambdas, int n, long N,
                                             std::uint64_t seed, const EstimatorOptions& opts) {
    if (model.kind() != GroupKind::FreeGroup)
        throw ValidationError("entropy_gap_decay needs a free group");
    FirstPassageTable base_table = tree_first_passage(model, curve.base);
    LetterCostMetric green_base = tree_green_metric(model, base_table, "green-tree(0)");

    std::vector<GapDecayPoint> out;
    for (double lambda : lambdas) {
        StepMeasure tilted = curve_at(model, curve, lambda);
        FirstPassageTable table = tree_first_passage(model, tilted);
        LetterCostMetric green_own = tree_green_metric(model, table, "green-tree(lambda)");

        BatchSpec spec = make_batch(model, tilted, green_own, n, N, seed, opts.threads);
        spec.metrics = {&green_own, &green_base};
        BatchResult batch = sample_batch(spec);

        std::vector<double> gap(static_cast<std::size_t>(N));
        for (std::size_t i = 0; i < gap.size(); ++i) {
            double own = batch.records[i].distance[0];
            double base = batch.records[i].distance[1];
            gap[i] = (own - base) / (lambda * n);
        }
        auto ms = mean_sd(gap);
        out.push_back({lambda, ms.mean, ms.sd / std::sqrt(static_cast<double>(N))});
    }
    return out;
}

}  // namespace hypwalk
