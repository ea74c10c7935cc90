#include "hypwalk/group.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hypwalk {

GroupModel GroupModel::free_group(int rank) {
    if (rank < 2) throw ValidationError("free group rank must be >= 2 (non-elementary)");
    if (rank > 26) throw ValidationError("free group rank limited to 26 (letter tokens a..z)");
    GroupModel m;
    m.kind_ = GroupKind::FreeGroup;
    m.rank_ = rank;
    auto& a = m.alphabet_;
    for (int g = 0; g < rank; ++g) {
        a.tokens.push_back(std::string(1, static_cast<char>('a' + g)));
        a.tokens.push_back(std::string(1, static_cast<char>('A' + g)));
        a.inverse.push_back(2 * g + 1);
        a.inverse.push_back(2 * g);
        a.factor.push_back(g);
        a.factor.push_back(g);
        a.exponent.push_back(+1);
        a.exponent.push_back(-1);
    }
    m.build_action_table();
    return m;
}

GroupModel GroupModel::free_product(const std::vector<int>& orders) {
    if (orders.size() < 2)
        throw ValidationError("free product needs at least two factors");
    for (int mi : orders)
        if (mi < 2) throw ValidationError("cyclic factor order must be >= 2");
    if (orders.size() == 2 && orders[0] == 2 && orders[1] == 2)
        throw ValidationError("Z2 * Z2 is elementary (infinite dihedral); not supported");
    GroupModel m;
    m.kind_ = GroupKind::FreeProduct;
    m.orders_ = orders;
    auto& a = m.alphabet_;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        int base = a.size();
        int mi = orders[i];
        for (int e = 1; e < mi; ++e) {
            a.tokens.push_back("x" + std::to_string(i + 1) + "^" + std::to_string(e));
            a.factor.push_back(static_cast<int>(i));
            a.exponent.push_back(e);
            a.inverse.push_back(base + (mi - e) - 1);
        }
    }
    if (a.size() > 127) throw ValidationError("alphabet too large (limit 127 letters)");
    m.build_action_table();
    return m;
}

GroupModel GroupModel::parse(const std::string& description) {
    auto colon = description.find(':');
    std::string head = description.substr(0, colon);
    std::string tail = colon == std::string::npos ? "" : description.substr(colon + 1);
    if (head == "free") {
        int k = 0;
        try {
            k = std::stoi(tail);
        } catch (const std::exception&) {
            throw ValidationError("cannot parse group \"" + description + "\"");
        }
        return free_group(k);
    }
    if (head == "freeproduct") {
        std::vector<int> orders;
        std::stringstream ss(tail);
        std::string part;
        while (std::getline(ss, part, ',')) {
            try {
                orders.push_back(std::stoi(part));
            } catch (const std::exception&) {
                throw ValidationError("cannot parse group \"" + description + "\"");
            }
        }
        return free_product(orders);
    }
    throw ValidationError("unknown group kind \"" + head + "\" (want free:k or freeproduct:m1,m2,...)");
}

std::string GroupModel::description() const {
    if (kind_ == GroupKind::FreeGroup) return "free:" + std::to_string(rank_);
    std::string s = "freeproduct:";
    for (std::size_t i = 0; i < orders_.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(orders_[i]);
    }
    return s;
}

void GroupModel::build_action_table() {
    int n = alphabet_.size();
    action_.assign(static_cast<std::size_t>(n) * n, kActionPush);
    for (int top = 0; top < n; ++top) {
        for (int next = 0; next < n; ++next) {
            auto& code = action_[static_cast<std::size_t>(top) * n + next];
            if (kind_ == GroupKind::FreeGroup) {
                code = (alphabet_.inverse[top] == next) ? kActionPop : kActionPush;
            } else {
                if (alphabet_.factor[top] != alphabet_.factor[next]) {
                    code = kActionPush;
                } else {
                    int f = alphabet_.factor[top];
                    int m = orders_[f];
                    int e = (alphabet_.exponent[top] + alphabet_.exponent[next]) % m;
                    if (e == 0) {
                        code = kActionPop;
                    } else {
                        int base = 0;
                        for (int j = 0; j < f; ++j) base += orders_[j] - 1;
                        code = static_cast<int16_t>(base + e - 1);
                    }
                }
            }
        }
    }
}

GroupElement GroupModel::reduce(std::span<const Letter> raw) const {
    GroupElement out;
    out.word.reserve(raw.size());
    for (Letter a : raw) {
        if (a < 0 || a >= alphabet_.size())
            throw UnknownLetter("#" + std::to_string(a));
        push_letter(out.word, a);
    }
    return out;
}

GroupElement GroupModel::multiply(const GroupElement& x, const GroupElement& y) const {
    GroupElement out;
    out.word = x.word;
    out.word.reserve(x.word.size() + y.word.size());
    for (char c : y.word) push_letter(out.word, static_cast<Letter>(c));
    return out;
}

GroupElement GroupModel::invert(const GroupElement& x) const {
    GroupElement out;
    out.word.reserve(x.word.size());
    for (auto it = x.word.rbegin(); it != x.word.rend(); ++it)
        out.word.push_back(static_cast<char>(alphabet_.inverse[static_cast<unsigned char>(*it)]));
    return out;
}

GroupElement GroupModel::parse_word(const std::string& text) const {
    std::vector<Letter> letters;
    if (kind_ == GroupKind::FreeGroup) {
        for (char c : text) {
            if (c == '.' || c == ' ') continue;
            Letter a;
            if (c >= 'a' && c < 'a' + rank_) a = 2 * (c - 'a');
            else if (c >= 'A' && c < 'A' + rank_) a = 2 * (c - 'A') + 1;
            else throw UnknownLetter(std::string(1, c));
            letters.push_back(a);
        }
    } else {
        std::string token;
        auto flush = [&]() {
            if (token.empty()) return;
            auto caret = token.find('^');
            std::string gen = token.substr(0, caret);
            int e = 1;
            if (caret != std::string::npos) {
                try {
                    e = std::stoi(token.substr(caret + 1));
                } catch (const std::exception&) {
                    throw UnknownLetter(token);
                }
            }
            if (gen.size() < 2 || gen[0] != 'x') throw UnknownLetter(token);
            int f;
            try {
                f = std::stoi(gen.substr(1)) - 1;
            } catch (const std::exception&) {
                throw UnknownLetter(token);
            }
            if (f < 0 || f >= static_cast<int>(orders_.size())) throw UnknownLetter(token);
            int m = orders_[f];
            e %= m;
            if (e < 0) e += m;
            if (e == 0) {  // explicit identity syllable contributes nothing
                token.clear();
                return;
            }
            int base = 0;
            for (int j = 0; j < f; ++j) base += orders_[j] - 1;
            letters.push_back(base + e - 1);
            token.clear();
        };
        for (char c : text) {
            if (c == '.' || c == ' ') flush();
            else token.push_back(c);
        }
        flush();
    }
    return reduce(letters);
}

std::string GroupModel::format(const GroupElement& x) const {
    if (x.word.empty()) return "id";
    std::string out;
    for (std::size_t i = 0; i < x.word.size(); ++i) {
        if (kind_ == GroupKind::FreeProduct && i) out += ".";
        out += alphabet_.tokens[static_cast<unsigned char>(x.word[i])];
    }
    return out;
}

std::vector<unsigned long long> GroupModel::sphere_counts(int radius) const {
    // Sphere DP over the last letter: a letter may follow another unless the
    // pair cancels (free group) or shares a factor (free product).
    int n = alphabet_.size();
    std::vector<unsigned long long> sphere{1ULL};
    std::vector<unsigned long long> by_last(n, 1ULL);  // r = 1 seeds, set below
    for (int r = 1; r <= radius; ++r) {
        std::vector<unsigned long long> next(n, 0ULL);
        unsigned long long total = 0;
        for (int a = 0; a < n; ++a) {
            unsigned long long ways = 0;
            if (r == 1) {
                ways = 1;
            } else {
                for (int prev = 0; prev < n; ++prev) {
                    bool allowed;
                    if (kind_ == GroupKind::FreeGroup)
                        allowed = alphabet_.inverse[prev] != a;
                    else
                        allowed = alphabet_.factor[prev] != alphabet_.factor[a];
                    if (!allowed) continue;
                    if (__builtin_add_overflow(ways, by_last[prev], &ways))
                        throw Error("sphere count overflows 64 bits at radius " + std::to_string(r));
                }
            }
            next[a] = ways;
            if (__builtin_add_overflow(total, ways, &total))
                throw Error("sphere count overflows 64 bits at radius " + std::to_string(r));
        }
        by_last = std::move(next);
        sphere.push_back(total);
    }
    return sphere;
}

unsigned long long GroupModel::ball_count(int radius) const {
    if (radius < 0) throw ValidationError("radius must be >= 0");
    auto spheres = sphere_counts(radius);
    unsigned long long total = 0;
    for (auto s : spheres)
        if (__builtin_add_overflow(total, s, &total))
            throw Error("ball count overflows 64 bits at radius " + std::to_string(radius));
    return total;
}

double GroupModel::growth_rate() const {
    if (kind_ == GroupKind::FreeGroup) return std::log(2.0 * rank_ - 1.0);
    // Perron root of the sphere recursion N_i(r) = sum_{j != i} (m_i - 1) N_j(r-1),
    // indexed by free factor.
    std::size_t r = orders_.size();
    std::vector<double> v(r, 1.0);
    double lambda = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<double> w(r, 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < r; ++j)
                if (j != i) w[i] += (orders_[i] - 1.0) * v[j];
            total += w[i];
        }
        double next = total / std::accumulate(v.begin(), v.end(), 0.0);
        for (std::size_t i = 0; i < r; ++i) v[i] = w[i] / total;
        if (iter > 4 && std::abs(next - lambda) < 1e-14) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::log(lambda);
}

double gromov_product(const GroupModel& model, const Metric& metric,
                      const GroupElement& x, const GroupElement& y, const GroupElement& w) {
    double dxw = metric.between(model, x, w);
    double dyw = metric.between(model, y, w);
    double dxy = metric.between(model, x, y);
    return 0.5 * (dxw + dyw - dxy);
}

double hyperbolicity_defect(const GroupModel& model, const Metric& metric,
                            std::span<const Quadruple> samples) {
    if (samples.empty()) throw ValidationError("hyperbolicity_defect needs a nonempty sample");
    double worst = 0.0;
    for (const auto& q : samples) {
        double xy = gromov_product(model, metric, q.x, q.y, q.w);
        double xz = gromov_product(model, metric, q.x, q.z, q.w);
        double zy = gromov_product(model, metric, q.z, q.y, q.w);
        worst = std::max(worst, std::min(xz, zy) - xy);
    }
    return std::max(worst, 0.0);
}

}  // namespace hypwalk
