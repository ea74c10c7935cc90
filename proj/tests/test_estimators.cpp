#include <doctest.h>

#include <cmath>

#include "hypwalk/estimators.hpp"

using namespace hypwalk;

namespace {

struct EstFixture {
    GroupModel f2 = GroupModel::free_group(2);
    StepMeasure uniform = StepMeasure::uniform(f2);
    WordMetric word{f2};
    MeasureCurve curve_c = MeasureCurve::make_exact(
        f2, StepMeasure::uniform(f2),
        {Rational(1), Rational(1), Rational(-1), Rational(-1)});
    MeasureCurve curve_b = MeasureCurve::make_exact(
        f2,
        StepMeasure::from_rationals(
            {Rational(3, 10), Rational(3, 10), Rational(1, 5), Rational(1, 5)}),
        {Rational(1), Rational(1), Rational(-1), Rational(-1)});
    EstimatorOptions opts{};
};

}  // namespace

TEST_CASE("escape rate") {
    EstFixture fx;

    // n = 1 is exact for nearest-neighbor steps
    Estimate one = escape_rate(fx.f2, fx.uniform, fx.word, 1, 500, 3, fx.opts);
    CHECK(one.value == 1.0);
    CHECK(one.std_error == 0.0);

    // against the exact chain mean at moderate n
    Estimate est = escape_rate(fx.f2, fx.uniform, fx.word, 400, 5000, 41, fx.opts);
    DistanceChain chain = distance_chain(fx.f2, fx.uniform);
    double exact = chain_mean_distance_series(chain, 400).back() / 400.0;
    CHECK(std::abs(est.value - exact) <= 3.0 * est.std_error);
    CHECK(est.metadata.at("oracle_upper_bound") == doctest::Approx(exact).epsilon(1e-12));
    CHECK(est.std_error > 0.0);

    CHECK_THROWS_AS(escape_rate(fx.f2, fx.uniform, fx.word, 0, 10, 1, fx.opts),
                    ValidationError);
}

TEST_CASE("entropy estimators") {
    EstFixture fx;
    const double target = 0.5 * std::log(3.0);

    // n = 1 under the uniform tree Green metric is deterministic
    Estimate one = entropy_via_green_speed(fx.f2, fx.uniform, 1, 200, 5, fx.opts);
    CHECK(one.value == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(one.std_error <= 1e-12);

    Estimate est = entropy_via_green_speed(fx.f2, fx.uniform, 800, 4000, 11, fx.opts);
    CHECK(std::abs(est.value - target) <= 3.0 * est.std_error + 0.002);

    auto single = entropy_via_convolution(fx.f2, fx.uniform, 0, fx.opts);
    REQUIRE(single.size() == 1);
    CHECK(single[0].n == 0);
    CHECK(single[0].entropy == 0.0);
    CHECK(std::isnan(single[0].increment));

    auto rows = entropy_via_convolution(fx.f2, fx.uniform, 10, fx.opts);
    REQUIRE(rows.size() == 11);
    CHECK(rows[0].n == 0);
    CHECK(rows[0].entropy == 0.0);
    CHECK(std::isnan(rows[0].increment));
    CHECK(rows[1].entropy == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    // H(mu^n)/n is nonincreasing, increments decrease toward h
    for (std::size_t j = 2; j < rows.size(); ++j) {
        CHECK(rows[j].entropy / rows[j].n <= rows[j - 1].entropy / rows[j - 1].n + 1e-12);
        CHECK(rows[j].increment <= rows[j - 1].increment + 1e-12);
        CHECK(rows[j].increment >= target - 1e-12);
    }
}

TEST_CASE("covariance sigma") {
    EstFixture fx;

    // zero direction: exactly zero with zero spread
    MeasureCurve flat = MeasureCurve::make(fx.f2, fx.uniform, {0, 0, 0, 0});
    Estimate zero = covariance_sigma(fx.f2, flat, fx.word, 50, 300, 1, fx.opts);
    CHECK(zero.value == 0.0);
    CHECK(zero.std_error == 0.0);

    // symmetric curve: centered at zero
    Estimate c = covariance_sigma(fx.f2, fx.curve_c, fx.word, 200, 20000, 7, fx.opts);
    CHECK(std::abs(c.value) <= 3.0 * c.std_error);

    // curve B at n = 2 against the exact oracle -0.192/2
    Estimate b2 = covariance_sigma(fx.f2, fx.curve_b, fx.word, 2, 200000, 13, fx.opts);
    CHECK(std::abs(b2.value - (-0.096)) <= 3.0 * b2.std_error);

    // sigma is linear in nu: doubling phi doubles the estimate exactly under
    // common random numbers (same seed, same trajectories)
    MeasureCurve doubled = MeasureCurve::make_exact(
        fx.f2, fx.curve_b.base, {Rational(2), Rational(2), Rational(-2), Rational(-2)});
    Estimate s1 = covariance_sigma(fx.f2, fx.curve_b, fx.word, 100, 2000, 99, fx.opts);
    Estimate s2 = covariance_sigma(fx.f2, doubled, fx.word, 100, 2000, 99, fx.opts);
    CHECK(s2.value == doctest::Approx(2.0 * s1.value).epsilon(1e-12));
}

TEST_CASE("finite-difference derivative") {
    EstFixture fx;

    CHECK_THROWS_AS(fd_derivative(fx.f2, fx.curve_b, FdTarget::EscapeRate, &fx.word, 0.0, 100,
                                  100, 1, fx.opts),
                    InvalidLambda);
    CHECK_THROWS_AS(fd_derivative(fx.f2, fx.curve_b, FdTarget::EscapeRate, &fx.word, 1.5, 100,
                                  100, 1, fx.opts),
                    InvalidLambda);

    // symmetric curve: the derivative vanishes
    Estimate c = fd_derivative(fx.f2, fx.curve_c, FdTarget::EscapeRate, &fx.word, 0.05, 500,
                               10000, 21, fx.opts);
    CHECK(std::abs(c.value) <= 3.0 * c.std_error + 0.01);

    // forward differences run and carry the first-order bias note
    Estimate fwd = fd_derivative(fx.f2, fx.curve_b, FdTarget::EscapeRate, &fx.word, 0.1, 200,
                                 2000, 22, fx.opts, FdSide::Forward);
    CHECK(fwd.notes.at("bias") == "O(lambda)");
    CHECK(fwd.value < 0.0);  // tilting toward the heavy pair slows the walk

    // entropy target needs a tree
    GroupModel z33 = GroupModel::free_product({3, 3});
    MeasureCurve pcurve = MeasureCurve::make(z33, StepMeasure::uniform(z33), {1, 1, -1, -1});
    CHECK_THROWS_AS(fd_derivative(z33, pcurve, FdTarget::Entropy, nullptr, 0.05, 100, 100, 1,
                                  fx.opts),
                    ValidationError);
}

TEST_CASE("girsanov derivative") {
    EstFixture fx;

    MeasureCurve flat = MeasureCurve::make(fx.f2, fx.uniform, {0, 0, 0, 0});
    Estimate zero = girsanov_derivative(fx.f2, flat, fx.word, 100, 500, 1, 1.0, fx.opts);
    CHECK(zero.value == 0.0);

    Estimate c = girsanov_derivative(fx.f2, fx.curve_c, fx.word, 400, 20000, 31, 1.0, fx.opts);
    CHECK(std::abs(c.value) <= 3.0 * c.std_error);
    CHECK(c.metadata.at("lambda") == doctest::Approx(0.05));
    CHECK(c.metadata.at("ess") >= 10.0);

    // an extreme tilt degenerates the weights
    MeasureCurve wild = MeasureCurve::make(fx.f2, fx.uniform, {40, 40, -40, -40});
    CHECK_THROWS_AS(girsanov_derivative(fx.f2, wild, fx.word, 400, 200, 1, 1.0, fx.opts),
                    DegenerateWeights);
}

TEST_CASE("clt report") {
    EstFixture fx;
    CltReport report =
        clt_report(fx.f2, fx.curve_c, fx.word, {250, 500}, 4000, 17, std::nullopt, fx.opts);

    CHECK(report.martingale_variance_exact == doctest::Approx(1.0));
    CHECK(std::abs(report.var_M[0] - 1.0) <= 3.0 * report.se_var_M[0]);
    CHECK(report.ks_d[0] <= 0.06);
    CHECK(report.ks_M[0] <= 0.06);
    CHECK(report.var_d[0] > 0.0);

    // the off-diagonal entry is the covariance estimator on the same batch
    Estimate sigma = covariance_sigma(fx.f2, fx.curve_c, fx.word, 500, 4000, 17, fx.opts);
    CHECK(report.cov[1] == doctest::Approx(sigma.value).epsilon(1e-9));

    // zero direction: the M marginal is identically zero
    MeasureCurve flat = MeasureCurve::make(fx.f2, fx.uniform, {0, 0, 0, 0});
    CltReport zero = clt_report(fx.f2, flat, fx.word, {100}, 500, 3, std::nullopt, fx.opts);
    CHECK(zero.var_M[0] == 0.0);
    CHECK(zero.cov[0] == 0.0);
}

TEST_CASE("ks statistic") {
    // a Gaussian-looking sample: Box-Muller over the counter rng
    std::vector<double> normal;
    CounterRng rng(9, 0);
    for (uint64_t i = 0; i < 2000; ++i) {
        double u1 = std::max(rng.uniform(2 * i), 1e-12);
        double u2 = rng.uniform(2 * i + 1);
        normal.push_back(std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2));
    }
    CHECK(ks_against_fitted_normal(normal) <= 0.03);

    std::vector<double> flat;
    for (uint64_t i = 0; i < 2000; ++i) flat.push_back(rng.uniform(100000 + i));
    CHECK(ks_against_fitted_normal(flat) >= 0.05);
}

TEST_CASE("fundamental inequality") {
    EstFixture fx;
    auto word_report =
        fundamental_inequality_check(fx.f2, fx.uniform, false, 600, 4000, 51, fx.opts);
    CHECK(word_report.growth == doctest::Approx(std::log(3.0)));
    CHECK(std::abs(word_report.slack) <= 0.03);  // equality case up to noise and bias
    CHECK(word_report.passes);

    auto green_report =
        fundamental_inequality_check(fx.f2, fx.uniform, true, 600, 4000, 52, fx.opts);
    CHECK(green_report.growth == 1.0);
    CHECK(std::abs(green_report.slack) <= 0.03);
    CHECK(green_report.passes);

    auto b_report =
        fundamental_inequality_check(fx.f2, fx.curve_b.base, false, 600, 4000, 53, fx.opts);
    CHECK(b_report.slack >= -3.0 * b_report.slack_se);
    CHECK(b_report.passes);
}

TEST_CASE("variance growth and mean-distance sandwich over the horizon grid") {
    EstFixture fx;
    BatchSpec spec;
    spec.model = &fx.f2;
    spec.measure = fx.curve_b.base;
    spec.horizon = 2000;
    spec.checkpoints = {250, 500, 1000, 2000};
    spec.trajectories = 4000;
    spec.seed = 71;
    spec.metrics = {&fx.word};
    BatchResult batch = sample_batch(spec);

    double N = static_cast<double>(batch.count);
    std::vector<double> var_over_n, mean_d;
    for (std::size_t cp = 0; cp < spec.checkpoints.size(); ++cp) {
        double m = batch.stats[cp].sum_d[0] / N;
        double v = batch.stats[cp].sum_d2[0] / N - m * m;
        mean_d.push_back(m);
        var_over_n.push_back(v / spec.checkpoints[cp]);
    }

    // (1/n) Var d(id, Z_n) stays within a factor-2 band
    double lo = *std::min_element(var_over_n.begin(), var_over_n.end());
    double hi = *std::max_element(var_over_n.begin(), var_over_n.end());
    CHECK(hi <= 2.0 * lo);

    // |E d(id,Z_n) - n ell| is bounded with no growth trend (large-n reference;
    // the last deviation is zero by construction, so check the interior points)
    double ell = mean_d.back() / spec.checkpoints.back();
    std::vector<double> dev;
    for (std::size_t cp = 0; cp < mean_d.size(); ++cp)
        dev.push_back(std::abs(mean_d[cp] - ell * spec.checkpoints[cp]));
    for (double d : dev) CHECK(d <= 2.0);
    CHECK(dev[2] <= dev[0] + 0.2);
}

TEST_CASE("entropy gap decay") {
    EstFixture fx;
    auto gaps = entropy_gap_decay(fx.f2, fx.curve_b, {0.2, 0.05}, 500, 20000, 61, fx.opts);
    REQUIRE(gaps.size() == 2);
    // h(mu_lambda) <= ell(mu_lambda; d_G^0): the gap is nonpositive up to noise
    for (const auto& g : gaps) CHECK(g.gap_over_lambda <= 2.0 * g.se);
    // and shrinks (in magnitude) as lambda decreases
    CHECK(std::abs(gaps[1].gap_over_lambda) <=
          std::abs(gaps[0].gap_over_lambda) + 2.0 * std::sqrt(gaps[0].se * gaps[0].se +
                                                              gaps[1].se * gaps[1].se));
}
