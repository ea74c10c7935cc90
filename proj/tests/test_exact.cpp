#include <doctest.h>

#include <cmath>

#include "hypwalk/exact.hpp"

using namespace hypwalk;

namespace {

MeasureCurve curve_c(const GroupModel& f2) {
    return MeasureCurve::make_exact(
        f2, StepMeasure::uniform(f2),
        {Rational(1), Rational(1), Rational(-1), Rational(-1)});
}

MeasureCurve curve_b(const GroupModel& f2) {
    StepMeasure base = StepMeasure::from_rationals(
        {Rational(3, 10), Rational(3, 10), Rational(1, 5), Rational(1, 5)});
    return MeasureCurve::make_exact(
        f2, std::move(base), {Rational(1), Rational(1), Rational(-1), Rational(-1)});
}

}  // namespace

TEST_CASE("convolution powers") {
    GroupModel f2 = GroupModel::free_group(2);
    StepMeasure uniform = StepMeasure::uniform(f2);

    ExactDistribution d0 = convolve_power(f2, uniform, 0);
    CHECK(d0.support() == 1);
    CHECK(d0.mass[0].first.empty());
    CHECK(d0.mass[0].second == 1.0);

    ExactDistribution d1 = convolve_power(f2, uniform, 1);
    CHECK(d1.support() == 4);
    for (const auto& [w, p] : d1.mass) CHECK(p == 0.25);

    ExactDistribution d2 = convolve_power(f2, uniform, 2);
    CHECK(d2.support() == 13);  // id + 12 reduced words of length 2
    CHECK(d2.at(Word{}) == 0.25);
    int length2 = 0;
    for (const auto& [w, p] : d2.mass)
        if (w.size() == 2) {
            CHECK(p == 0.0625);
            ++length2;
        }
    CHECK(length2 == 12);

    // exact rational mode: masses sum to one exactly
    CHECK(d2.exact);
    Rational total = 0;
    for (const auto& r : *d2.mass_exact) total += r;
    CHECK(total == 1);

    OracleOptions tiny;
    tiny.support_budget = 50;
    tiny.rational_support_budget = 50;
    CHECK_THROWS_AS(convolve_power(f2, uniform, 6, tiny), BudgetExceeded);
}

TEST_CASE("exact entropy") {
    GroupModel f2 = GroupModel::free_group(2);
    StepMeasure uniform = StepMeasure::uniform(f2);

    CHECK(exact_entropy(f2, uniform, 0) == 0.0);
    CHECK(exact_entropy(f2, uniform, 1) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(exact_entropy(f2, uniform, 2) == doctest::Approx(2.4260151319598084).epsilon(1e-12));

    auto series = exact_entropy_series(f2, uniform, 6);
    CHECK(series.size() == 7);
    for (int n = 1; n <= 6; ++n)
        CHECK(series[static_cast<std::size_t>(n)] ==
              doctest::Approx(exact_entropy(f2, uniform, n)).epsilon(1e-12));
    // H(mu^n)/n is nonincreasing (subadditivity)
    for (int n = 2; n <= 6; ++n)
        CHECK(series[static_cast<std::size_t>(n)] / n <=
              series[static_cast<std::size_t>(n - 1)] / (n - 1) + 1e-12);
}

TEST_CASE("exact mean distance and the distance chain") {
    GroupModel f2 = GroupModel::free_group(2);
    StepMeasure uniform = StepMeasure::uniform(f2);
    WordMetric word(f2);

    CHECK(exact_mean_distance(f2, uniform, 1, word) == doctest::Approx(1.0));
    CHECK(exact_mean_distance(f2, uniform, 2, word) == doctest::Approx(1.5));
    CHECK(exact_mean_distance(f2, uniform, 3, word) == doctest::Approx(2.125));

    DistanceChain chain = distance_chain(f2, uniform);
    REQUIRE(chain.applicable);
    auto chain_means = chain_mean_distance_series(chain, 10);
    auto conv_means = exact_mean_distance_series(f2, uniform, 10, word);
    for (int n = 0; n <= 10; ++n)
        CHECK(chain_means[static_cast<std::size_t>(n)] ==
              doctest::Approx(conv_means[static_cast<std::size_t>(n)]).epsilon(1e-12));

    // chain distribution matches convolution masses at the identity
    for (int n = 2; n <= 8; n += 2) {
        auto dist = chain_distribution(chain, n);
        CHECK(convolve_power(f2, uniform, n).at(Word{}) ==
              doctest::Approx(dist[0]).epsilon(1e-12));
    }

    // anisotropic measures have no chain
    StepMeasure skew = StepMeasure::from_doubles({0.3, 0.3, 0.2, 0.2});
    CHECK_FALSE(distance_chain(f2, skew).applicable);

    // letter-uniform free product with equal orders does
    GroupModel z33 = GroupModel::free_product({3, 3});
    DistanceChain pchain = distance_chain(z33, StepMeasure::uniform(z33));
    REQUIRE(pchain.applicable);
    CHECK(pchain.stay == doctest::Approx(0.25));
    WordMetric pword(z33);
    auto pconv = exact_mean_distance_series(z33, StepMeasure::uniform(z33), 8, pword);
    auto pchain_means = chain_mean_distance_series(pchain, 8);
    for (int n = 0; n <= 8; ++n)
        CHECK(pchain_means[static_cast<std::size_t>(n)] ==
              doctest::Approx(pconv[static_cast<std::size_t>(n)]).epsilon(1e-12));
}

TEST_CASE("exact covariance: engines, symmetry, frozen value") {
    GroupModel f2 = GroupModel::free_group(2);
    WordMetric word(f2);
    MeasureCurve c = curve_c(f2);
    MeasureCurve b = curve_b(f2);

    // n = 1: nearest-neighbor distance is constant, nu is centered
    CHECK(exact_covariance(f2, c.base, c.nu, 1, word) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(exact_covariance(f2, b.base, b.nu, 1, word) == doctest::Approx(0.0).epsilon(1e-15));

    // symmetric curve: exactly zero in rational mode, all n <= 6
    for (int n = 1; n <= 6; ++n) {
        double cov = exact_covariance(f2, c.base, c.nu, n, word, {},
                                      CovarianceEngine::Convolution, &*c.nu_exact);
        CHECK(cov == 0.0);
    }

    // frozen: curve B at n = 2 equals -0.192 = -4 sum mu(s)^2 nu(s)
    double cov_b2 = exact_covariance(f2, b.base, b.nu, 2, word, {},
                                     CovarianceEngine::Convolution, &*b.nu_exact);
    CHECK(cov_b2 == doctest::Approx(-0.192).epsilon(1e-12));

    // the two engines agree on overlapping budgets
    for (int n = 1; n <= 5; ++n) {
        double conv = exact_covariance(f2, b.base, b.nu, n, word);
        double paths = exact_covariance(f2, b.base, b.nu, n, word, {}, CovarianceEngine::Paths);
        CHECK(conv == doctest::Approx(paths).epsilon(1e-12));
    }

    std::vector<double> uncentered{1.0, 1.0, 1.0, -1.0};
    CHECK_THROWS_AS(exact_covariance(f2, c.base, uncentered, 2, word), NotCentered);
}

TEST_CASE("tilted means and the reweighting identity") {
    GroupModel f2 = GroupModel::free_group(2);
    WordMetric word(f2);
    MeasureCurve c = curve_c(f2);
    MeasureCurve b = curve_b(f2);

    // lambda = 0 reduces to the plain mean
    CHECK(exact_tilted_mean(f2, b, 0.0, 4, word) ==
          doctest::Approx(exact_mean_distance(f2, b.base, 4, word)).epsilon(1e-12));

    // a <-> b relabeling makes the symmetric curve even in lambda
    for (int n = 2; n <= 5; ++n)
        CHECK(exact_tilted_mean(f2, c, 0.2, n, word) ==
              doctest::Approx(exact_tilted_mean(f2, c, -0.2, n, word)).epsilon(1e-12));

    // path-enumeration reweighting matches the direct tilted law
    for (double lambda : {0.05, 0.2}) {
        GirsanovCheck check = girsanov_path_check(f2, b, lambda, 5, word);
        CHECK(std::abs(check.weighted_mean - check.direct_mean) <= 1e-12);
        CHECK(check.weighted_total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(check.direct_mean ==
              doctest::Approx(exact_tilted_mean(f2, b, lambda, 5, word)).epsilon(1e-10));
    }

    // derivative identity at n = 6: central FD of the tilted mean matches the
    // covariance to 1e-6 at lambda = 1e-4
    double lambda = 1e-4;
    double up = exact_tilted_mean(f2, b, lambda, 6, word);
    double dn = exact_tilted_mean(f2, b, -lambda, 6, word);
    double fd = (up - dn) / (2 * lambda);
    double cov = exact_covariance(f2, b.base, b.nu, 6, word, {},
                                  CovarianceEngine::Convolution, &*b.nu_exact);
    CHECK(std::abs(fd - cov) <= 1e-6);
}

TEST_CASE("spectral radius sequence") {
    GroupModel f2 = GroupModel::free_group(2);
    StepMeasure uniform = StepMeasure::uniform(f2);

    auto seq = spectral_radius_sequence(f2, uniform, 60);
    CHECK(seq[0] == doctest::Approx(0.5).epsilon(1e-12));  // (mu^2(id))^{1/2} = 1/2
    for (std::size_t j = 1; j < seq.size(); ++j) CHECK(seq[j] >= seq[j - 1] - 1e-12);
    double rho = std::sqrt(3.0) / 2.0;
    for (double r : seq) CHECK(r <= rho + 1e-12);
    // frozen: the sequence converges very slowly; r_50 is still 0.046 below rho
    CHECK(seq[49] == doctest::Approx(0.820145).epsilon(1e-4));

    auto upper = spectral_radius_upper(f2, uniform);
    CHECK(upper.from_chain);
    CHECK(upper.rho_hat > rho);  // n_star = 400 plus margin clears the true value
    CHECK(upper.rho_hat < 0.9);

    // anisotropic route goes through convolution; cross-check against a
    // direct enumeration of return paths
    StepMeasure skew = StepMeasure::from_rationals(
        {Rational(3, 10), Rational(3, 10), Rational(1, 5), Rational(1, 5)});
    auto askew = spectral_radius_sequence(f2, skew, 2);
    // mu^2(id) = sum mu(s) mu(s^{-1}) = 2(0.09 + 0.04) = 0.26
    CHECK(askew[0] == doctest::Approx(std::sqrt(0.26)).epsilon(1e-12));
    double return4 = 0.0;
    Word pos;
    auto walk4 = [&](auto&& self, int depth, double p) -> void {
        if (depth == 4) {
            if (pos.empty()) return4 += p;
            return;
        }
        for (Letter a = 0; a < 4; ++a) {
            Word saved = pos;
            f2.push_letter(pos, a);
            self(self, depth + 1, p * skew.prob[static_cast<std::size_t>(a)]);
            pos = std::move(saved);
        }
    };
    walk4(walk4, 0, 1.0);
    CHECK(askew[1] == doctest::Approx(std::pow(return4, 0.25)).epsilon(1e-12));
    auto skew_upper = spectral_radius_upper(f2, skew);
    CHECK_FALSE(skew_upper.from_chain);

    // hitting-time tail: mu^n(z) <= rho_hat^n over the whole support
    for (int n = 2; n <= 10; ++n) {
        auto d = convolve_power(f2, uniform, n);
        for (const auto& [w, p] : d.mass) CHECK(p <= std::pow(upper.rho_hat, n));
    }
}

TEST_CASE("mean-distance sandwich") {
    GroupModel f2 = GroupModel::free_group(2);
    StepMeasure uniform = StepMeasure::uniform(f2);
    WordMetric word(f2);

    auto rep40 = mean_distance_sandwich(f2, uniform, word, 40);
    CHECK(rep40.subadditive_ok);
    CHECK(rep40.tau0_hat >= 0.0);
    CHECK(rep40.tau0_hat < 1.0);
    auto rep80 = mean_distance_sandwich(f2, uniform, word, 80);
    CHECK(rep80.tau0_hat >= rep40.tau0_hat - 1e-12);  // max over a larger range
    CHECK(std::abs(rep80.tau0_hat - rep40.tau0_hat) <= 0.05);  // and stable

    // anisotropic route goes through the convolution series
    StepMeasure skew = StepMeasure::from_rationals(
        {Rational(3, 10), Rational(3, 10), Rational(1, 5), Rational(1, 5)});
    auto repb = mean_distance_sandwich(f2, skew, word, 10);
    CHECK(repb.subadditive_ok);
    CHECK(repb.a[1] == doctest::Approx(1.0));
}

TEST_CASE("point mass series") {
    GroupModel f2 = GroupModel::free_group(2);
    StepMeasure uniform = StepMeasure::uniform(f2);
    auto series = point_mass_series(f2, uniform, f2.parse_word("ab"), 8);
    CHECK(series[0] == 0.0);
    CHECK(series[1] == 0.0);
    CHECK(series[2] == doctest::Approx(0.0625).epsilon(1e-12));  // the one path a.b
    DistanceChain chain = distance_chain(f2, uniform);
    for (int n = 2; n <= 8; ++n)
        CHECK(series[static_cast<std::size_t>(n)] ==
              doctest::Approx(chain_point_probability(f2, chain, n, 2)).epsilon(1e-12));
}
