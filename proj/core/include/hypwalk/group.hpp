#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hypwalk/errors.hpp"

namespace hypwalk {

/// Index into a GeneratorAlphabet. Words store letters as single bytes, so an
/// alphabet is limited to 127 letters (far beyond any supported model).
using Letter = int;

/// A word over an alphabet, one byte per letter index. Lexicographic string
/// order is the canonical order on normal forms.
using Word = std::string;

/// A finite symmetric generating set with its inverse involution.
struct GeneratorAlphabet {
    std::vector<std::string> tokens;  // printable token per letter
    std::vector<Letter> inverse;      // involution: letter -> inverse letter
    std::vector<int> factor;          // generator index / free-factor index
    std::vector<int> exponent;        // +1/-1 for free groups, syllable power otherwise

    int size() const { return static_cast<int>(tokens.size()); }
};

/// An element in normal form: freely reduced word (free group) or alternating
/// syllable word (free product). The empty word is the identity.
struct GroupElement {
    Word word;

    bool operator==(const GroupElement&) const = default;
    auto operator<=>(const GroupElement&) const = default;
    std::size_t length() const { return word.size(); }
    bool is_identity() const { return word.empty(); }
};

enum class GroupKind { FreeGroup, FreeProduct };

/// One of the supported non-elementary hyperbolic group models: a free group
/// F_k (k >= 2) or a free product of finite cyclic groups Z_{m_1} * ... * Z_{m_r}
/// (r >= 2, excluding the infinite dihedral case Z_2 * Z_2). Holds the standard
/// symmetric generating set and the letter-by-letter normal-form action.
class GroupModel {
public:
    static GroupModel free_group(int rank);
    static GroupModel free_product(const std::vector<int>& orders);
    /// Parses "free:2" or "freeproduct:3,3".
    static GroupModel parse(const std::string& description);

    GroupKind kind() const { return kind_; }
    int rank() const { return rank_; }
    const std::vector<int>& orders() const { return orders_; }
    const GeneratorAlphabet& alphabet() const { return alphabet_; }
    int alphabet_size() const { return alphabet_.size(); }
    std::string description() const;

    /// Effect of right-multiplying a word ending in `top` by `next`:
    /// kActionPop (cancellation), kActionPush (append), or the merged letter.
    static constexpr int kActionPop = -1;
    static constexpr int kActionPush = -2;
    int action_code(Letter top, Letter next) const {
        return action_[static_cast<std::size_t>(top) * alphabet_.size() + next];
    }

    /// Right-multiplies the normal-form buffer by one generator. Amortized O(1):
    /// appends, cancels, or merges the trailing syllable.
    void push_letter(Word& w, Letter a) const {
        if (!w.empty()) {
            int code = action_code(static_cast<Letter>(static_cast<unsigned char>(w.back())), a);
            if (code == kActionPop) {
                w.pop_back();
                return;
            }
            if (code != kActionPush) {
                w.back() = static_cast<char>(code);
                return;
            }
        }
        w.push_back(static_cast<char>(a));
    }

    GroupElement reduce(std::span<const Letter> raw) const;
    GroupElement multiply(const GroupElement& x, const GroupElement& y) const;
    GroupElement invert(const GroupElement& x) const;
    GroupElement identity() const { return GroupElement{}; }

    /// Parses a serialized word: "abA" for free groups (uppercase = inverse),
    /// dot- or space-separated "x1^2.x2^1" syllables for free products.
    GroupElement parse_word(const std::string& text) const;
    std::string format(const GroupElement& x) const;

    /// Exact count of elements with word length <= radius. Throws Error on
    /// 64-bit overflow.
    unsigned long long ball_count(int radius) const;
    /// Exact sphere sizes |{x : |x| = r}| for r = 0..radius.
    std::vector<unsigned long long> sphere_counts(int radius) const;

    /// Logarithmic growth rate v of the word metric: log(2k-1) for F_k, the
    /// log-Perron root of the sphere recursion otherwise.
    double growth_rate() const;

private:
    GroupModel() = default;
    void build_action_table();

    GroupKind kind_ = GroupKind::FreeGroup;
    int rank_ = 0;                 // free group only
    std::vector<int> orders_;      // free product only
    GeneratorAlphabet alphabet_;
    std::vector<int16_t> action_;  // (top letter, next letter) -> kPop/kPush/merged letter
};

/// Word length d(id, x); every letter of the standard alphabet has length 1.
inline std::size_t word_length(const GroupElement& x) { return x.word.size(); }

/// A left-invariant metric evaluated through d(x, y) = d(id, x^{-1} y).
class Metric {
public:
    virtual ~Metric() = default;
    virtual double from_id(const GroupElement& x) const = 0;
    virtual std::string name() const = 0;
    /// Non-null when d(id, x) is a sum of per-letter costs over the normal
    /// form; enables O(1) incremental tracking in the walk engine.
    virtual const std::vector<double>* letter_costs() const { return nullptr; }

    double between(const GroupModel& model, const GroupElement& x, const GroupElement& y) const {
        return from_id(model.multiply(model.invert(x), y));
    }
};

class WordMetric final : public Metric {
public:
    explicit WordMetric(const GroupModel& model)
        : ones_(static_cast<std::size_t>(model.alphabet_size()), 1.0) {}
    double from_id(const GroupElement& x) const override {
        return static_cast<double>(x.word.size());
    }
    std::string name() const override { return "word"; }
    const std::vector<double>* letter_costs() const override { return &ones_; }

private:
    std::vector<double> ones_;
};

/// Metric of the form d(id, x) = sum of cost(letter) over the normal form of x.
/// Tree-exact Green metrics are instances (cost = -log q per letter).
class LetterCostMetric : public Metric {
public:
    LetterCostMetric(std::vector<double> costs, std::string name)
        : costs_(std::move(costs)), name_(std::move(name)) {}
    double from_id(const GroupElement& x) const override {
        double d = 0.0;
        for (char c : x.word) d += costs_[static_cast<unsigned char>(c)];
        return d;
    }
    std::string name() const override { return name_; }
    const std::vector<double>* letter_costs() const override { return &costs_; }

private:
    std::vector<double> costs_;
    std::string name_;
};

/// Gromov product (x, y)_w = (d(x,w) + d(y,w) - d(x,y)) / 2.
double gromov_product(const GroupModel& model, const Metric& metric,
                      const GroupElement& x, const GroupElement& y, const GroupElement& w);

/// Empirical lower bound on the four-point constant: max over quadruples
/// (x, y, z, w) of min{(x,z)_w, (z,y)_w} - (x,y)_w, floored at zero.
struct Quadruple {
    GroupElement x, y, z, w;
};
double hyperbolicity_defect(const GroupModel& model, const Metric& metric,
                            std::span<const Quadruple> samples);

}  // namespace hypwalk
