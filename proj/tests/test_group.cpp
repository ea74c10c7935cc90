#include <doctest.h>
#include <cmath>

#include "hypwalk/group.hpp"
#include "hypwalk/rng.hpp"

using namespace hypwalk;

namespace {

GroupElement w(const GroupModel& m, const std::string& text) { return m.parse_word(text); }

// deterministic random words for property checks
std::vector<GroupElement> random_elements(const GroupModel& m, int count, int max_len,
                                          uint64_t seed) {
    std::vector<GroupElement> out;
    CounterRng rng(seed, 0);
    uint64_t ctr = 0;
    for (int i = 0; i < count; ++i) {
        int len = static_cast<int>(rng.bits(ctr++) % (max_len + 1));
        std::vector<Letter> raw;
        for (int j = 0; j < len; ++j)
            raw.push_back(static_cast<Letter>(rng.bits(ctr++) % m.alphabet_size()));
        out.push_back(m.reduce(raw));
    }
    return out;
}

}  // namespace

TEST_CASE("free group reduction and arithmetic") {
    GroupModel f2 = GroupModel::free_group(2);

    CHECK(w(f2, "aA").is_identity());
    CHECK(f2.format(w(f2, "abB")) == "a");
    CHECK(f2.multiply(w(f2, "ab"), w(f2, "BA")).is_identity());
    CHECK(f2.format(f2.multiply(w(f2, "a"), w(f2, "b"))) == "ab");
    CHECK(f2.format(f2.multiply(w(f2, "ab"), w(f2, "BB"))) == "aB");

    CHECK(f2.invert(f2.identity()).is_identity());
    CHECK(f2.format(f2.invert(w(f2, "ab"))) == "BA");

    CHECK(word_length(f2.identity()) == 0);
    CHECK(word_length(w(f2, "aba")) == 3);
    CHECK(word_length(w(f2, "aB")) == 2);

    CHECK_THROWS_AS(f2.parse_word("q"), UnknownLetter);
    CHECK_THROWS_AS(f2.reduce(std::vector<Letter>{9}), UnknownLetter);
}

TEST_CASE("free product reduction and arithmetic") {
    GroupModel z33 = GroupModel::free_product({3, 3});

    CHECK(w(z33, "x1.x1.x1").is_identity());
    CHECK(z33.format(w(z33, "x1.x1")) == "x1^2");
    CHECK(z33.format(z33.invert(w(z33, "x1"))) == "x1^2");
    CHECK(z33.multiply(w(z33, "x1^2"), w(z33, "x1")).is_identity());
    CHECK(z33.format(z33.multiply(w(z33, "x1"), w(z33, "x2^2"))) == "x1^1.x2^2");
    CHECK(word_length(w(z33, "x1.x2.x1")) == 3);

    GroupModel z44 = GroupModel::free_product({4, 4});
    CHECK(z44.format(z44.multiply(w(z44, "x1^3"), w(z44, "x1^2"))) == "x1^1");
    CHECK(z44.multiply(w(z44, "x1^2"), w(z44, "x1^2")).is_identity());

    CHECK_THROWS_AS(GroupModel::free_product({2, 2}), ValidationError);
    CHECK_THROWS_AS(GroupModel::free_group(1), ValidationError);
}

TEST_CASE("model parsing round trip") {
    CHECK(GroupModel::parse("free:2").description() == "free:2");
    CHECK(GroupModel::parse("freeproduct:3,4").description() == "freeproduct:3,4");
    CHECK_THROWS_AS(GroupModel::parse("dihedral:5"), ValidationError);

    GroupModel f3 = GroupModel::parse("free:3");
    GroupElement x = w(f3, "abcABC");
    CHECK(f3.parse_word(f3.format(x)) == x);
}

TEST_CASE("reduce is idempotent and inversion is an involution") {
    for (const char* desc : {"free:2", "freeproduct:3,3", "freeproduct:2,3"}) {
        GroupModel m = GroupModel::parse(desc);
        auto elements = random_elements(m, 200, 24, 11);
        for (const auto& x : elements) {
            std::vector<Letter> letters;
            for (char c : x.word) letters.push_back(static_cast<unsigned char>(c));
            CHECK(m.reduce(letters) == x);
            CHECK(m.invert(m.invert(x)) == x);
            CHECK(m.multiply(x, m.invert(x)).is_identity());
            CHECK(word_length(m.invert(x)) == word_length(x));
        }
    }
}

TEST_CASE("word metric triangle inequality on random pairs") {
    GroupModel f2 = GroupModel::free_group(2);
    auto elements = random_elements(f2, 60, 16, 17);
    for (std::size_t i = 0; i + 1 < elements.size(); i += 2) {
        const auto& x = elements[i];
        const auto& y = elements[i + 1];
        CHECK(word_length(f2.multiply(x, y)) <= word_length(x) + word_length(y));
    }
}

TEST_CASE("gromov products") {
    GroupModel f2 = GroupModel::free_group(2);
    WordMetric word(f2);
    GroupElement id = f2.identity();

    CHECK(gromov_product(f2, word, w(f2, "ab"), w(f2, "aB"), id) == doctest::Approx(1.0));
    CHECK(gromov_product(f2, word, w(f2, "ab"), w(f2, "ab"), id) == doctest::Approx(2.0));
    CHECK(gromov_product(f2, word, w(f2, "a"), w(f2, "b"), id) == doctest::Approx(0.0));
}

TEST_CASE("hyperbolicity defect vanishes on trees") {
    GroupModel f2 = GroupModel::free_group(2);
    WordMetric word(f2);
    auto elements = random_elements(f2, 120, 12, 23);
    std::vector<Quadruple> quads;
    for (std::size_t i = 0; i + 3 < elements.size(); i += 4)
        quads.push_back({elements[i], elements[i + 1], elements[i + 2], elements[i + 3]});
    CHECK(hyperbolicity_defect(f2, word, quads) == doctest::Approx(0.0).epsilon(1e-12));

    GroupElement x = w(f2, "ab");
    std::vector<Quadruple> degenerate{{x, x, x, x}};
    CHECK(hyperbolicity_defect(f2, word, degenerate) == 0.0);

    // scaled tree metric stays 0-hyperbolic
    LetterCostMetric scaled(std::vector<double>(4, std::log(3.0)), "scaled");
    CHECK(hyperbolicity_defect(f2, scaled, quads) <= 1e-9);

    // free products: tree of complete graphs, defect stays small (report-style bound)
    GroupModel z33 = GroupModel::free_product({3, 3});
    WordMetric pword(z33);
    auto pelems = random_elements(z33, 120, 12, 29);
    std::vector<Quadruple> pquads;
    for (std::size_t i = 0; i + 3 < pelems.size(); i += 4)
        pquads.push_back({pelems[i], pelems[i + 1], pelems[i + 2], pelems[i + 3]});
    double defect = hyperbolicity_defect(z33, pword, pquads);
    CHECK(defect >= 0.0);
    CHECK(defect <= 2.0);
}

TEST_CASE("ball counts and growth") {
    GroupModel f2 = GroupModel::free_group(2);
    CHECK(f2.ball_count(0) == 1);
    CHECK(f2.ball_count(1) == 5);
    CHECK(f2.ball_count(2) == 17);
    for (int r = 1; r <= 12; ++r) CHECK(f2.ball_count(r) > f2.ball_count(r - 1));

    double v = std::log(static_cast<double>(f2.ball_count(12))) / 12.0;
    CHECK(std::abs(v - std::log(3.0)) <= 0.1);
    CHECK(f2.growth_rate() == doctest::Approx(std::log(3.0)));

    GroupModel z33 = GroupModel::free_product({3, 3});
    auto spheres = z33.sphere_counts(4);
    CHECK(spheres[0] == 1);
    CHECK(spheres[1] == 4);
    CHECK(spheres[2] == 8);   // alternating syllables: 4 * 2
    CHECK(spheres[3] == 16);
    CHECK(z33.growth_rate() == doctest::Approx(std::log(2.0)));

    CHECK_THROWS_AS(f2.ball_count(45), Error);
}

TEST_CASE("counter rng is a pure function of (seed, stream, counter)") {
    CounterRng a(42, 7);
    CounterRng b(42, 7);
    for (uint64_t c = 0; c < 16; ++c) CHECK(a.bits(c) == b.bits(c));
    CHECK(CounterRng(42, 8).bits(0) != a.bits(0));
    CHECK(CounterRng(43, 7).bits(0) != a.bits(0));
    for (uint64_t c = 0; c < 1000; ++c) {
        double u = a.uniform(c);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    // frozen values: the stream must never change across platforms or versions
    CHECK(stream_key(1, 2) == 17367068528372346380ULL);
    CHECK(counter_rng(stream_key(1, 2), 3) == 9548416233784575402ULL);
}
