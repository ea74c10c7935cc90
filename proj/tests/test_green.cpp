#include <doctest.h>

#include <cmath>

#include "hypwalk/green.hpp"
#include "hypwalk/rng.hpp"

using namespace hypwalk;

namespace {

StepMeasure measure_b() {
    return StepMeasure::from_rationals(
        {Rational(3, 10), Rational(3, 10), Rational(1, 5), Rational(1, 5)});
}

std::vector<GroupElement> random_elements(const GroupModel& m, int count, int max_len,
                                          uint64_t seed) {
    std::vector<GroupElement> out;
    CounterRng rng(seed, 0);
    uint64_t ctr = 0;
    for (int i = 0; i < count; ++i) {
        int len = 1 + static_cast<int>(rng.bits(ctr++) % max_len);
        std::vector<Letter> raw;
        for (int j = 0; j < len; ++j)
            raw.push_back(static_cast<Letter>(rng.bits(ctr++) % m.alphabet_size()));
        out.push_back(m.reduce(raw));
    }
    return out;
}

}  // namespace

TEST_CASE("first passage on the uniform tree") {
    GroupModel f2 = GroupModel::free_group(2);
    FirstPassageTable table = tree_first_passage(f2, StepMeasure::uniform(f2));

    for (double q : table.q) CHECK(q == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(table.residual <= 1e-12);
    CHECK(table.return_prob == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(table.green_at_id() == doctest::Approx(1.5).epsilon(1e-12));
    for (std::size_t i = 0; i < table.q.size(); ++i) {
        CHECK(table.q_upper[i] >= table.q[i]);
        CHECK(table.q_upper[i] - table.q[i] <= 1e-8);
    }
}

TEST_CASE("first passage for the anisotropic measure") {
    GroupModel f2 = GroupModel::free_group(2);
    StepMeasure m = measure_b();
    FirstPassageTable table = tree_first_passage(f2, m);

    CHECK(table.residual <= 1e-12);
    // indicative digits; the residual is the real oracle
    CHECK(table.q[0] == doctest::Approx(0.39).epsilon(0.01));
    CHECK(table.q[2] == doctest::Approx(0.28).epsilon(0.01));
    // symmetry q(s) = q(s^{-1}) and the fixed-point equations hold
    const auto& inv = f2.alphabet().inverse;
    for (Letter s = 0; s < 4; ++s) {
        CHECK(table.q[static_cast<std::size_t>(s)] ==
              doctest::Approx(table.q[static_cast<std::size_t>(inv[static_cast<std::size_t>(s)])])
                  .epsilon(1e-12));
        double crossing = 0.0;
        for (Letter t = 0; t < 4; ++t)
            if (t != s)
                crossing += m.prob[static_cast<std::size_t>(t)] *
                            table.q[static_cast<std::size_t>(inv[static_cast<std::size_t>(t)])];
        double rhs = m.prob[static_cast<std::size_t>(s)] +
                     crossing * table.q[static_cast<std::size_t>(s)];
        CHECK(table.q[static_cast<std::size_t>(s)] == doctest::Approx(rhs).epsilon(1e-12));
        CHECK(table.q[static_cast<std::size_t>(s)] > 0.0);
        CHECK(table.q[static_cast<std::size_t>(s)] < 1.0);
    }
    CHECK(table.return_prob < 1.0);

    GroupModel z33 = GroupModel::free_product({3, 3});
    CHECK_THROWS_AS(tree_first_passage(z33, StepMeasure::uniform(z33)), ValidationError);
}

TEST_CASE("tree Green distances") {
    GroupModel f2 = GroupModel::free_group(2);
    FirstPassageTable table = tree_first_passage(f2, StepMeasure::uniform(f2));
    const double log3 = std::log(3.0);

    CHECK(green_distance_tree(f2, table, f2.identity()) == 0.0);
    CHECK(green_distance_tree(f2, table, f2.parse_word("ab")) ==
          doctest::Approx(2 * log3).epsilon(1e-13));
    CHECK(green_distance_tree(f2, table, f2.parse_word("aab")) ==
          doctest::Approx(3 * log3).epsilon(1e-13));
}

TEST_CASE("tree Green metric is a metric and looks like a tree") {
    GroupModel f2 = GroupModel::free_group(2);
    StepMeasure m = measure_b();
    FirstPassageTable table = tree_first_passage(f2, m);
    LetterCostMetric green = tree_green_metric(f2, table);

    auto elements = random_elements(f2, 90, 8, 31);

    // symmetry d(id, z) = d(id, z^{-1})
    for (const auto& z : elements)
        CHECK(green.from_id(z) == doctest::Approx(green.from_id(f2.invert(z))).epsilon(1e-10));

    // triangle inequality via left invariance
    for (std::size_t i = 0; i + 2 < elements.size(); i += 3) {
        double xy = green.between(f2, elements[i], elements[i + 1]);
        double yz = green.between(f2, elements[i + 1], elements[i + 2]);
        double xz = green.between(f2, elements[i], elements[i + 2]);
        CHECK(xz <= xy + yz + 1e-10);
    }

    // equivalence to the word metric: bounded cost ratio on |z| <= 8
    double cmin = 1e9, cmax = 0.0;
    for (const auto& z : elements) {
        double ratio = green.from_id(z) / static_cast<double>(z.word.size());
        cmin = std::min(cmin, ratio);
        cmax = std::max(cmax, ratio);
    }
    CHECK(cmin > 0.0);
    CHECK(cmax < 2.0);
    CHECK(cmin <= cmax);

    // a weighted tree metric has zero hyperbolicity defect
    std::vector<Quadruple> quads;
    for (std::size_t i = 0; i + 3 < elements.size(); i += 4)
        quads.push_back({elements[i], elements[i + 1], elements[i + 2], elements[i + 3]});
    CHECK(hyperbolicity_defect(f2, green, quads) <= 1e-9);
}

TEST_CASE("killed-walk ball solve on the tree") {
    GroupModel f2 = GroupModel::free_group(2);
    StepMeasure uniform = StepMeasure::uniform(f2);
    StepMeasure skew = measure_b();

    GroupElement ab = f2.parse_word("ab");

    // the enumerated sweep solver and the tree recursion agree
    for (const StepMeasure* m : {&uniform, &skew}) {
        for (int R = 2; R <= 6; ++R) {
            double tree = ball_hitting_probability_tree(f2, *m, ab, R);
            double sweep = ball_hitting_probability_sweep(f2, *m, ab, R);
            CHECK(tree == doctest::Approx(sweep).epsilon(1e-9));
        }
    }

    // lower bound is nondecreasing in R and approaches the true F
    FirstPassageTable table = tree_first_passage(f2, uniform);
    double truth = std::exp(-green_distance_tree(f2, table, ab));
    double prev = 0.0;
    for (int R : {2, 4, 7, 12, 20}) {
        double f = ball_hitting_probability_tree(f2, uniform, ab, R);
        CHECK(f >= prev - 1e-15);
        CHECK(f <= truth + 1e-12);
        prev = f;
    }
    CHECK(truth - ball_hitting_probability_tree(f2, uniform, ab, 25) <= 1e-9);

    CHECK_THROWS_AS(ball_hitting_probability_tree(f2, uniform, ab, 1), ValidationError);
    BallSolveOptions stuck;
    stuck.max_sweeps = 1;
    CHECK_THROWS_AS(ball_hitting_probability_sweep(f2, uniform, ab, 6, stuck), NonConvergence);
}

TEST_CASE("ball brackets contain the tree value") {
    GroupModel f2 = GroupModel::free_group(2);
    for (const StepMeasure& m : {StepMeasure::uniform(f2), measure_b()}) {
        FirstPassageTable table = tree_first_passage(f2, m);
        for (const char* text : {"a", "ab", "abA", "abab"}) {
            GroupElement z = f2.parse_word(text);
            double exact = green_distance_tree(f2, table, z);
            for (int margin : {5, 10, 15}) {
                GreenEvaluation eval =
                    green_distance_ball(f2, m, z, static_cast<int>(z.word.size()) + margin);
                CHECK(eval.lower <= eval.upper);
                CHECK(eval.contains(exact));
            }
            // widening the ball never loosens the hitting lower bound
            GreenEvaluation narrow =
                green_distance_ball(f2, m, z, static_cast<int>(z.word.size()) + 5);
            GreenEvaluation wide =
                green_distance_ball(f2, m, z, static_cast<int>(z.word.size()) + 10);
            CHECK(wide.hitting_lower >= narrow.hitting_lower - 1e-15);
        }
    }

    GreenEvaluation at_id =
        green_distance_ball(f2, StepMeasure::uniform(f2), f2.identity(), 5);
    CHECK(at_id.lower == 0.0);
    CHECK(at_id.upper == 0.0);
}

TEST_CASE("ball solve on a free product") {
    GroupModel z33 = GroupModel::free_product({3, 3});
    StepMeasure uniform = StepMeasure::uniform(z33);
    GroupElement x = z33.parse_word("x1");

    GreenEvaluation eval = green_distance_ball(z33, uniform, x, 9);
    CHECK(eval.hitting_lower > 0.0);
    CHECK(eval.hitting_lower < 1.0);
    CHECK(eval.lower <= eval.upper);

    // cross-check against the Green-function series: F(z) = G(z)/G(id)
    SeriesEvaluation gz = green_function_series(z33, uniform, x, 400);
    SeriesEvaluation gid = green_function_series(z33, uniform, z33.identity(), 400);
    double f_est = gz.partial / gid.partial;
    CHECK(eval.hitting_lower <= f_est + 1e-6);
    CHECK(f_est <= eval.hitting_lower + eval.tail + 1e-6);
}

TEST_CASE("Green function series") {
    GroupModel f2 = GroupModel::free_group(2);
    StepMeasure uniform = StepMeasure::uniform(f2);

    SeriesEvaluation t0 = green_function_series(f2, uniform, f2.identity(), 0);
    CHECK(t0.partial == 1.0);

    double prev = 0.0;
    for (int T : {10, 50, 200}) {
        SeriesEvaluation eval = green_function_series(f2, uniform, f2.identity(), T);
        CHECK(eval.partial >= prev);
        CHECK(eval.partial <= 1.5 + 1e-12);
        prev = eval.partial;
    }
    SeriesEvaluation full = green_function_series(f2, uniform, f2.identity(), 200);
    CHECK(full.from_chain);
    CHECK(full.lower() <= 1.5);
    CHECK(1.5 <= full.upper());

    // multiplicativity across the bracket: G(z) = F(z) G(id) on the tree
    FirstPassageTable table = tree_first_passage(f2, uniform);
    for (const char* text : {"a", "ab", "aba"}) {
        GroupElement z = f2.parse_word(text);
        double expected = std::exp(-green_distance_tree(f2, table, z)) * 1.5;
        SeriesEvaluation eval = green_function_series(f2, uniform, z, 200);
        CHECK(eval.lower() <= expected + 1e-9);
        CHECK(expected <= eval.upper() + 1e-9);
    }
}

TEST_CASE("ball Green metric serves bracket midpoints") {
    GroupModel z33 = GroupModel::free_product({3, 3});
    BallGreenMetric metric(z33, StepMeasure::uniform(z33), 6);
    GroupElement x = z33.parse_word("x1.x2");
    double d = metric.from_id(x);
    CHECK(d > 0.0);
    CHECK(metric.from_id(x) == d);  // cached
    CHECK(metric.max_halfwidth() >= 0.0);
    CHECK(metric.from_id(z33.identity()) == 0.0);
}
