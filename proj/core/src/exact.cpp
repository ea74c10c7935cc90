#include "hypwalk/exact.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace hypwalk {

namespace {

// Plain sparse convolution state over normal forms, value type M.
template <class M>
using SparseDist = std::vector<std::pair<Word, M>>;

template <class M>
void sort_by_word(SparseDist<M>& d) {
    std::sort(d.begin(), d.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
}

template <class M>
SparseDist<M> convolve_step(const GroupModel& model, const SparseDist<M>& cur,
                            const std::vector<M>& letter_mass, std::size_t budget) {
    const int S = model.alphabet_size();
    std::size_t estimated = cur.size() * static_cast<std::size_t>(S);
    if (estimated > budget) throw BudgetExceeded(estimated, budget);
    std::unordered_map<Word, M> acc;
    acc.reserve(estimated);
    Word buf;
    for (const auto& [w, m] : cur) {
        for (Letter a = 0; a < S; ++a) {
            buf = w;
            model.push_letter(buf, a);
            auto it = acc.find(buf);
            if (it == acc.end())
                acc.emplace(buf, m * letter_mass[static_cast<std::size_t>(a)]);
            else
                it->second += m * letter_mass[static_cast<std::size_t>(a)];
        }
    }
    SparseDist<M> next;
    next.reserve(acc.size());
    for (auto& [w, m] : acc) next.emplace_back(w, std::move(m));
    sort_by_word(next);
    return next;
}

// Augmented value: total mass p and the mass-weighted sum s of the path
// functional M_n over paths ending at the word. Stepping with letter a maps
// (p, s) contributions to (p*q_a, (s + p*nu_a)*q_a).
template <class M>
struct Aug {
    M p{};
    M s{};
};

template <class M>
SparseDist<Aug<M>> convolve_step_augmented(const GroupModel& model,
                                           const SparseDist<Aug<M>>& cur,
                                           const std::vector<M>& letter_mass,
                                           const std::vector<M>& nu, std::size_t budget) {
    const int S = model.alphabet_size();
    std::size_t estimated = cur.size() * static_cast<std::size_t>(S);
    if (estimated > budget) throw BudgetExceeded(estimated, budget);
    std::unordered_map<Word, Aug<M>> acc;
    acc.reserve(estimated);
    Word buf;
    for (const auto& [w, v] : cur) {
        for (Letter a = 0; a < S; ++a) {
            buf = w;
            model.push_letter(buf, a);
            const M& q = letter_mass[static_cast<std::size_t>(a)];
            M dp = v.p * q;
            M ds = (v.s + v.p * nu[static_cast<std::size_t>(a)]) * q;
            auto it = acc.find(buf);
            if (it == acc.end()) {
                acc.emplace(buf, Aug<M>{std::move(dp), std::move(ds)});
            } else {
                it->second.p += dp;
                it->second.s += ds;
            }
        }
    }
    SparseDist<Aug<M>> next;
    next.reserve(acc.size());
    for (auto& [w, v] : acc) next.emplace_back(w, std::move(v));
    sort_by_word(next);
    return next;
}

// Whether rational mode is worth attempting for horizon n.
bool use_rational(const GroupModel& model, const StepMeasure& m, int n,
                  const OracleOptions& opts) {
    if (opts.force_float || !m.exact) return false;
    // Projected support: ball of radius n (parity-refined on free groups),
    // capped by |S|^n.
    long double paths = 1.0L;
    long double cap = static_cast<long double>(opts.rational_support_budget);
    for (int j = 0; j < n; ++j) {
        paths *= model.alphabet_size();
        if (paths > 4 * cap) break;
    }
    long double projected = 0.0L;
    try {
        auto spheres = model.sphere_counts(n);
        for (int r = 0; r <= n; ++r) {
            if (model.kind() == GroupKind::FreeGroup && ((n - r) % 2 != 0)) continue;
            projected += static_cast<long double>(spheres[static_cast<std::size_t>(r)]);
        }
    } catch (const Error&) {
        projected = cap + 1;
    }
    return std::min(projected, paths) <= cap;
}

std::vector<Rational> exact_letter_mass(const StepMeasure& m) { return *m.exact; }

std::vector<double> float_letter_mass(const StepMeasure& m) { return m.prob; }

template <class M>
SparseDist<M> run_convolution(const GroupModel& model, const std::vector<M>& letter_mass, int n,
                              std::size_t budget) {
    SparseDist<M> cur;
    cur.emplace_back(Word{}, M(1));
    for (int j = 0; j < n; ++j) cur = convolve_step<M>(model, cur, letter_mass, budget);
    return cur;
}

double entropy_of(const SparseDist<double>& d) {
    double h = 0.0;
    for (const auto& [w, p] : d)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

double entropy_of(const SparseDist<Rational>& d) {
    double h = 0.0;
    for (const auto& [w, p] : d) {
        double pd = static_cast<double>(p);
        if (pd > 0.0) h -= pd * std::log(pd);
    }
    return h;
}

}  // namespace

double ExactDistribution::total() const {
    double t = 0.0;
    for (const auto& [w, p] : mass) t += p;
    return t;
}

double ExactDistribution::at(const Word& w) const {
    auto it = std::lower_bound(mass.begin(), mass.end(), w,
                               [](const auto& entry, const Word& key) { return entry.first < key; });
    if (it != mass.end() && it->first == w) return it->second;
    return 0.0;
}

ExactDistribution convolve_power(const GroupModel& model, const StepMeasure& m, int n,
                                 const OracleOptions& opts) {
    if (n < 0) throw ValidationError("convolution power needs n >= 0");
    ExactDistribution out;
    out.n = n;
    if (use_rational(model, m, n, opts)) {
        auto dist = run_convolution<Rational>(model, exact_letter_mass(m), n,
                                              opts.rational_support_budget);
        out.exact = true;
        out.mass.reserve(dist.size());
        std::vector<Rational> exact;
        exact.reserve(dist.size());
        for (auto& [w, p] : dist) {
            out.mass.emplace_back(w, static_cast<double>(p));
            exact.push_back(std::move(p));
        }
        out.mass_exact = std::move(exact);
    } else {
        auto dist = run_convolution<double>(model, float_letter_mass(m), n, opts.support_budget);
        out.exact = false;
        out.mass = std::move(dist);
    }
    return out;
}

double exact_entropy(const GroupModel& model, const StepMeasure& m, int n,
                     const OracleOptions& opts) {
    auto d = convolve_power(model, m, n, opts);
    double h = 0.0;
    for (const auto& [w, p] : d.mass)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

std::vector<double> exact_entropy_series(const GroupModel& model, const StepMeasure& m, int n_max,
                                         const OracleOptions& opts) {
    std::vector<double> hs;
    hs.reserve(static_cast<std::size_t>(n_max) + 1);
    if (use_rational(model, m, n_max, opts)) {
        SparseDist<Rational> cur;
        cur.emplace_back(Word{}, Rational(1));
        hs.push_back(0.0);
        auto mass = exact_letter_mass(m);
        for (int j = 1; j <= n_max; ++j) {
            cur = convolve_step<Rational>(model, cur, mass, opts.rational_support_budget);
            hs.push_back(entropy_of(cur));
        }
    } else {
        SparseDist<double> cur;
        cur.emplace_back(Word{}, 1.0);
        hs.push_back(0.0);
        auto mass = float_letter_mass(m);
        for (int j = 1; j <= n_max; ++j) {
            cur = convolve_step<double>(model, cur, mass, opts.support_budget);
            hs.push_back(entropy_of(cur));
        }
    }
    return hs;
}

double exact_mean_distance(const GroupModel& model, const StepMeasure& m, int n,
                           const Metric& metric, const OracleOptions& opts) {
    auto d = convolve_power(model, m, n, opts);
    double mean = 0.0;
    for (const auto& [w, p] : d.mass) mean += p * metric.from_id(GroupElement{w});
    return mean;
}

std::vector<double> exact_mean_distance_series(const GroupModel& model, const StepMeasure& m,
                                               int n_max, const Metric& metric,
                                               const OracleOptions& opts) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n_max) + 1);
    out.push_back(0.0);
    SparseDist<double> cur;
    cur.emplace_back(Word{}, 1.0);
    auto mass = float_letter_mass(m);
    for (int j = 1; j <= n_max; ++j) {
        cur = convolve_step<double>(model, cur, mass, opts.support_budget);
        double mean = 0.0;
        for (const auto& [w, p] : cur) mean += p * metric.from_id(GroupElement{w});
        out.push_back(mean);
    }
    return out;
}

namespace {

// Depth-first full path enumeration. Walks letters in alphabet order so float
// accumulation order is fixed.
struct PathEnumerator {
    const GroupModel& model;
    const Metric& metric;
    int horizon;

    // per-path state
    Word position;
    double covariance_acc = 0.0;

    void check_budget(std::size_t budget) const {
        long double paths = 1.0L;
        for (int j = 0; j < horizon; ++j) {
            paths *= model.alphabet_size();
            if (paths > static_cast<long double>(budget))
                throw BudgetExceeded(static_cast<std::size_t>(paths), budget);
        }
    }
};

}  // namespace

double exact_covariance(const GroupModel& model, const StepMeasure& m,
                        const std::vector<double>& nu, int n, const Metric& metric,
                        const OracleOptions& opts, CovarianceEngine engine,
                        const std::vector<Rational>* nu_exact) {
    if (nu.size() != m.prob.size())
        throw ValidationError("nu size does not match alphabet");
    double centered = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) centered += nu[i] * m.prob[i];
    if (std::abs(centered) > 1e-10) throw NotCentered(centered);

    if (engine == CovarianceEngine::Paths) {
        const int S = model.alphabet_size();
        long double paths = 1.0L;
        for (int j = 0; j < n; ++j) {
            paths *= S;
            if (paths > static_cast<long double>(opts.path_budget))
                throw BudgetExceeded(static_cast<std::size_t>(paths), opts.path_budget);
        }
        double acc = 0.0;
        Word pos;
        auto rec = [&](auto&& self, int depth, double prob, double mn) -> void {
            if (depth == n) {
                acc += prob * metric.from_id(GroupElement{pos}) * mn;
                return;
            }
            for (Letter a = 0; a < S; ++a) {
                Word saved = pos;
                model.push_letter(pos, a);
                self(self, depth + 1, prob * m.prob[static_cast<std::size_t>(a)],
                     mn + nu[static_cast<std::size_t>(a)]);
                pos = std::move(saved);
            }
        };
        rec(rec, 0, 1.0, 0.0);
        return acc;
    }

    // Convolution engine with the augmented accumulator.
    if (!opts.force_float && m.exact && nu_exact && use_rational(model, m, n, opts)) {
        Rational centered_exact = 0;
        for (std::size_t i = 0; i < nu.size(); ++i)
            centered_exact += (*nu_exact)[i] * (*m.exact)[i];
        if (centered_exact != 0) throw NotCentered(static_cast<double>(centered_exact));
        SparseDist<Aug<Rational>> cur;
        cur.emplace_back(Word{}, Aug<Rational>{Rational(1), Rational(0)});
        for (int j = 0; j < n; ++j)
            cur = convolve_step_augmented<Rational>(model, cur, *m.exact, *nu_exact,
                                                    opts.rational_support_budget);
        const std::vector<double>* costs = metric.letter_costs();
        bool integer_metric =
            costs && std::all_of(costs->begin(), costs->end(), [](double c) { return c == 1.0; });
        if (integer_metric) {
            // word metric: keep the whole sum rational
            Rational acc = 0;
            for (const auto& [w, v] : cur)
                acc += Rational(static_cast<long>(w.size())) * v.s;
            return static_cast<double>(acc);
        }
        double acc = 0.0;
        for (const auto& [w, v] : cur)
            acc += metric.from_id(GroupElement{w}) * static_cast<double>(v.s);
        return acc;
    }
    SparseDist<Aug<double>> cur;
    cur.emplace_back(Word{}, Aug<double>{1.0, 0.0});
    for (int j = 0; j < n; ++j)
        cur = convolve_step_augmented<double>(model, cur, m.prob, nu, opts.support_budget);
    double acc = 0.0;
    for (const auto& [w, v] : cur) acc += metric.from_id(GroupElement{w}) * v.s;
    return acc;
}

double exact_tilted_mean(const GroupModel& model, const MeasureCurve& curve, double lambda, int n,
                         const Metric& metric, const OracleOptions& opts) {
    StepMeasure tilted = curve_at(model, curve, lambda);
    return exact_mean_distance(model, tilted, n, metric, opts);
}

GirsanovCheck girsanov_path_check(const GroupModel& model, const MeasureCurve& curve,
                                  double lambda, int n, const Metric& metric,
                                  const OracleOptions& opts) {
    const int S = model.alphabet_size();
    long double paths = 1.0L;
    for (int j = 0; j < n; ++j) {
        paths *= S;
        if (paths > static_cast<long double>(opts.path_budget))
            throw BudgetExceeded(static_cast<std::size_t>(paths), opts.path_budget);
    }
    StepMeasure tilted = curve_at(model, curve, lambda);
    GirsanovCheck out;
    Word pos;
    auto rec = [&](auto&& self, int depth, double p0, double ratio, double pl) -> void {
        if (depth == n) {
            double d = metric.from_id(GroupElement{pos});
            out.weighted_mean += p0 * ratio * d;
            out.weighted_total += p0 * ratio;
            out.direct_mean += pl * d;
            return;
        }
        for (Letter a = 0; a < S; ++a) {
            Word saved = pos;
            model.push_letter(pos, a);
            std::size_t i = static_cast<std::size_t>(a);
            self(self, depth + 1, p0 * curve.base.prob[i],
                 ratio * (tilted.prob[i] / curve.base.prob[i]), pl * tilted.prob[i]);
            pos = std::move(saved);
        }
    };
    rec(rec, 0, 1.0, 1.0, 1.0);
    return out;
}

DistanceChain distance_chain(const GroupModel& model, const StepMeasure& m) {
    DistanceChain chain;
    // letter-uniform?
    for (std::size_t i = 1; i < m.prob.size(); ++i) {
        bool equal = m.exact ? ((*m.exact)[i] == (*m.exact)[0]) : (m.prob[i] == m.prob[0]);
        if (!equal) return chain;
    }
    const int S = model.alphabet_size();
    if (model.kind() == GroupKind::FreeGroup) {
        chain.applicable = true;
        chain.down = 1.0 / S;
        chain.stay = 0.0;
        chain.up = 1.0 - chain.down;
        return chain;
    }
    const auto& orders = model.orders();
    for (int mi : orders)
        if (mi != orders[0]) return chain;
    int mi = orders[0];
    chain.applicable = true;
    chain.down = 1.0 / S;                    // the one letter closing the last syllable
    chain.stay = static_cast<double>(mi - 2) / S;  // same factor, nonzero residue
    chain.up = 1.0 - chain.down - chain.stay;
    return chain;
}

std::vector<double> chain_distribution(const DistanceChain& chain, int n) {
    if (!chain.applicable) throw ValidationError("distance chain not applicable");
    std::vector<double> p(static_cast<std::size_t>(n) + 2, 0.0);
    p[0] = 1.0;
    std::vector<double> q(p.size());
    for (int t = 0; t < n; ++t) {
        std::fill(q.begin(), q.end(), 0.0);
        for (int r = 0; r <= t; ++r) {
            double mass = p[static_cast<std::size_t>(r)];
            if (mass == 0.0) continue;
            if (r == 0) {
                q[1] += mass * chain.up_from_zero;
            } else {
                q[static_cast<std::size_t>(r) + 1] += mass * chain.up;
                q[static_cast<std::size_t>(r)] += mass * chain.stay;
                q[static_cast<std::size_t>(r) - 1] += mass * chain.down;
            }
        }
        std::swap(p, q);
    }
    p.resize(static_cast<std::size_t>(n) + 1);
    return p;
}

std::vector<double> chain_mean_distance_series(const DistanceChain& chain, int n_max) {
    if (!chain.applicable) throw ValidationError("distance chain not applicable");
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(n_max) + 1);
    means.push_back(0.0);
    std::vector<double> p(static_cast<std::size_t>(n_max) + 2, 0.0);
    p[0] = 1.0;
    std::vector<double> q(p.size());
    for (int t = 0; t < n_max; ++t) {
        std::fill(q.begin(), q.end(), 0.0);
        for (int r = 0; r <= t; ++r) {
            double mass = p[static_cast<std::size_t>(r)];
            if (mass == 0.0) continue;
            if (r == 0) {
                q[1] += mass;
            } else {
                q[static_cast<std::size_t>(r) + 1] += mass * chain.up;
                q[static_cast<std::size_t>(r)] += mass * chain.stay;
                q[static_cast<std::size_t>(r) - 1] += mass * chain.down;
            }
        }
        std::swap(p, q);
        double mean = 0.0;
        for (int r = 1; r <= t + 1; ++r) mean += r * p[static_cast<std::size_t>(r)];
        means.push_back(mean);
    }
    return means;
}

double chain_point_probability(const GroupModel& model, const DistanceChain& chain, int n, int r) {
    auto p = chain_distribution(chain, n);
    if (r > n) return 0.0;
    if (r == 0) return p[0];
    auto spheres = model.sphere_counts(r);
    return p[static_cast<std::size_t>(r)] / static_cast<double>(spheres[static_cast<std::size_t>(r)]);
}

std::vector<double> spectral_radius_sequence(const GroupModel& model, const StepMeasure& m,
                                             int n_max, const OracleOptions& opts) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n_max));
    DistanceChain chain = distance_chain(model, m);
    if (chain.applicable) {
        std::vector<double> p(static_cast<std::size_t>(2 * n_max) + 2, 0.0);
        p[0] = 1.0;
        std::vector<double> q(p.size());
        for (int t = 1; t <= 2 * n_max; ++t) {
            std::fill(q.begin(), q.end(), 0.0);
            for (int r = 0; r < t; ++r) {
                double mass = p[static_cast<std::size_t>(r)];
                if (mass == 0.0) continue;
                if (r == 0) {
                    q[1] += mass;
                } else {
                    q[static_cast<std::size_t>(r) + 1] += mass * chain.up;
                    q[static_cast<std::size_t>(r)] += mass * chain.stay;
                    q[static_cast<std::size_t>(r) - 1] += mass * chain.down;
                }
            }
            std::swap(p, q);
            if (t % 2 == 0)
                out.push_back(std::pow(p[0], 1.0 / t));
        }
        return out;
    }
    SparseDist<double> cur;
    cur.emplace_back(Word{}, 1.0);
    auto mass = float_letter_mass(m);
    for (int t = 1; t <= 2 * n_max; ++t) {
        cur = convolve_step<double>(model, cur, mass, opts.support_budget);
        if (t % 2 == 0) {
            double at_id = 0.0;
            if (!cur.empty() && cur.front().first.empty()) at_id = cur.front().second;
            out.push_back(std::pow(at_id, 1.0 / t));
        }
    }
    return out;
}

SpectralRadiusUpper spectral_radius_upper(const GroupModel& model, const StepMeasure& m,
                                          double margin, int n_star, const OracleOptions& opts) {
    SpectralRadiusUpper out;
    DistanceChain chain = distance_chain(model, m);
    if (chain.applicable) {
        auto seq = spectral_radius_sequence(model, m, n_star, opts);
        out.rho_hat = std::min(seq.back() + margin, 1.0 - 1e-9);
        out.n_star = n_star;
        out.from_chain = true;
        return out;
    }
    // Largest 2n within the convolution budget.
    int n = 1;
    std::vector<double> seq;
    try {
        for (int trial = 1; trial <= 12; ++trial) {
            seq = spectral_radius_sequence(model, m, trial, opts);
            n = trial;
        }
    } catch (const BudgetExceeded&) {
        if (seq.empty()) throw;
    }
    out.rho_hat = std::min(seq.back() + margin, 1.0 - 1e-9);
    out.n_star = n;
    out.from_chain = false;
    return out;
}

SandwichReport mean_distance_sandwich(const GroupModel& model, const StepMeasure& m,
                                      const Metric& metric, int n_max,
                                      const OracleOptions& opts) {
    SandwichReport report;
    DistanceChain chain = distance_chain(model, m);
    bool word_like = metric.letter_costs() != nullptr;
    if (chain.applicable && word_like) {
        // letter-uniform + letter-cost metric: costs must be uniform too for the
        // chain to apply directly; the word metric qualifies.
        const auto& costs = *metric.letter_costs();
        bool flat = std::all_of(costs.begin(), costs.end(),
                                [&](double c) { return c == costs[0]; });
        if (flat) {
            auto means = chain_mean_distance_series(chain, n_max);
            report.a = means;
            for (auto& v : report.a) v *= costs[0];
        }
    }
    if (report.a.empty())
        report.a = exact_mean_distance_series(model, m, n_max, metric, opts);
    double tau = 0.0;
    for (std::size_t i = 1; i < report.a.size(); ++i) {
        for (std::size_t j = i; i + j < report.a.size(); ++j) {
            double gap = report.a[i] + report.a[j] - report.a[i + j];
            if (gap < -1e-9) report.subadditive_ok = false;
            tau = std::max(tau, gap / 2.0);
        }
    }
    report.tau0_hat = tau;
    return report;
}

std::size_t convolution_support_estimate(const GroupModel& model, int n) {
    long double paths = 1.0L;
    const long double cap = 1e18L;
    for (int j = 0; j < n && paths < cap; ++j) paths *= model.alphabet_size();
    long double ball = 0.0L;
    try {
        auto spheres = model.sphere_counts(n);
        for (int r = 0; r <= n; ++r) {
            if (model.kind() == GroupKind::FreeGroup && ((n - r) % 2 != 0)) continue;
            ball += static_cast<long double>(spheres[static_cast<std::size_t>(r)]);
        }
    } catch (const Error&) {
        ball = cap;
    }
    return static_cast<std::size_t>(std::min({paths, ball, cap}));
}

std::vector<double> point_mass_series(const GroupModel& model, const StepMeasure& m,
                                      const GroupElement& z, int T, const OracleOptions& opts) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(T) + 1);
    out.push_back(z.is_identity() ? 1.0 : 0.0);
    SparseDist<double> cur;
    cur.emplace_back(Word{}, 1.0);
    auto mass = float_letter_mass(m);
    for (int t = 1; t <= T; ++t) {
        cur = convolve_step<double>(model, cur, mass, opts.support_budget);
        auto it = std::lower_bound(cur.begin(), cur.end(), z.word,
                                   [](const auto& e, const Word& k) { return e.first < k; });
        out.push_back(it != cur.end() && it->first == z.word ? it->second : 0.0);
    }
    return out;
}

}  // namespace hypwalk
