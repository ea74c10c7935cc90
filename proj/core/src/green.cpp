#include "hypwalk/green.hpp"

#include <algorithm>
#include <cmath>

namespace hypwalk {

namespace {

void require_tree(const GroupModel& model, const char* what) {
    if (model.kind() != GroupKind::FreeGroup)
        throw ValidationError(std::string(what) + " requires a free group (tree Cayley graph)");
}

// One application of the first-passage map.
std::vector<double> passage_map(const GroupModel& model, const StepMeasure& m,
                                const std::vector<double>& q) {
    const int S = model.alphabet_size();
    std::vector<double> out(static_cast<std::size_t>(S));
    for (Letter s = 0; s < S; ++s) {
        double crossing = 0.0;
        for (Letter t = 0; t < S; ++t) {
            if (t == s) continue;
            crossing += m.prob[static_cast<std::size_t>(t)] *
                        q[static_cast<std::size_t>(model.alphabet().inverse[static_cast<std::size_t>(t)])];
        }
        out[static_cast<std::size_t>(s)] = m.prob[static_cast<std::size_t>(s)] +
                                           crossing * q[static_cast<std::size_t>(s)];
    }
    return out;
}

}  // namespace

double FirstPassageTable::q_max_upper() const {
    return *std::max_element(q_upper.begin(), q_upper.end());
}

FirstPassageTable tree_first_passage(const GroupModel& model, const StepMeasure& m,
                                     double residual_target, int max_iterations) {
    require_tree(model, "tree_first_passage");
    const int S = model.alphabet_size();
    std::vector<double> q(static_cast<std::size_t>(S), 0.0);
    double residual = 1.0;
    for (int iter = 0; iter < max_iterations; ++iter) {
        auto next = passage_map(model, m, q);
        residual = 0.0;
        for (int i = 0; i < S; ++i)
            residual = std::max(residual, std::abs(next[static_cast<std::size_t>(i)] -
                                                   q[static_cast<std::size_t>(i)]));
        q = std::move(next);
        if (residual == 0.0) break;  // fixed point to the last bit
    }
    if (residual > residual_target) throw NonConvergence(residual, residual_target);

    FirstPassageTable table;
    table.q = q;
    table.residual = residual;
    double U = 0.0;
    for (Letter s = 0; s < S; ++s)
        U += m.prob[static_cast<std::size_t>(s)] *
             q[static_cast<std::size_t>(model.alphabet().inverse[static_cast<std::size_t>(s)])];
    table.return_prob = U;

    // Certified upper bound: q + delta is a supersolution of the monotone map,
    // hence dominates the minimal fixed point.
    double delta = 1e-11;
    for (; delta <= 1e-5; delta *= 10.0) {
        std::vector<double> probe(q);
        for (auto& v : probe) v = std::min(v + delta, 1.0);
        auto image = passage_map(model, m, probe);
        bool super = true;
        for (int i = 0; i < S; ++i)
            if (image[static_cast<std::size_t>(i)] > probe[static_cast<std::size_t>(i)]) {
                super = false;
                break;
            }
        if (super) break;
    }
    if (delta > 1e-5) throw NonConvergence(delta, 1e-5);
    table.q_upper.resize(static_cast<std::size_t>(S));
    for (int i = 0; i < S; ++i)
        table.q_upper[static_cast<std::size_t>(i)] =
            std::min(q[static_cast<std::size_t>(i)] + delta, 1.0);
    return table;
}

double green_distance_tree(const GroupModel& model, const FirstPassageTable& table,
                           const GroupElement& z) {
    require_tree(model, "green_distance_tree");
    double d = 0.0;
    for (char c : z.word) d -= std::log(table.q[static_cast<unsigned char>(c)]);
    return d;
}

LetterCostMetric tree_green_metric(const GroupModel& model, const FirstPassageTable& table,
                                   std::string name) {
    require_tree(model, "tree_green_metric");
    std::vector<double> costs(table.q.size());
    for (std::size_t i = 0; i < table.q.size(); ++i) costs[i] = -std::log(table.q[i]);
    return LetterCostMetric(std::move(costs), std::move(name));
}

double ball_hitting_probability_tree(const GroupModel& model, const StepMeasure& m,
                                     const GroupElement& z, int R) {
    require_tree(model, "ball_hitting_probability_tree");
    if (z.is_identity()) return 1.0;
    const int len = static_cast<int>(z.word.size());
    if (R < len) throw ValidationError("ball radius must be >= |z|");
    const int S = model.alphabet_size();
    const auto& inv = model.alphabet().inverse;

    // beta[d][s]: from a vertex at depth d whose normal form ends in s, the
    // probability of hitting the parent before reaching depth R + 1.
    std::vector<std::vector<double>> beta(static_cast<std::size_t>(R) + 2,
                                          std::vector<double>(static_cast<std::size_t>(S), 0.0));
    for (int d = R; d >= 1; --d) {
        for (Letter s = 0; s < S; ++s) {
            double blocked = 0.0;
            Letter back = inv[static_cast<std::size_t>(s)];
            for (Letter t = 0; t < S; ++t) {
                if (t == back) continue;
                blocked += m.prob[static_cast<std::size_t>(t)] *
                           beta[static_cast<std::size_t>(d) + 1][static_cast<std::size_t>(t)];
            }
            beta[static_cast<std::size_t>(d)][static_cast<std::size_t>(s)] =
                m.prob[static_cast<std::size_t>(back)] / (1.0 - blocked);
        }
    }

    // March down the geodesic of z: G_i = P[from v_{i-1} hit v_i before the kill].
    double F = 1.0;
    double G_prev = 0.0;
    for (int i = 1; i <= len; ++i) {
        Letter step = static_cast<Letter>(static_cast<unsigned char>(z.word[static_cast<std::size_t>(i - 1)]));
        Letter parent = (i >= 2)
                            ? inv[static_cast<unsigned char>(z.word[static_cast<std::size_t>(i - 2)])]
                            : -1;
        double denom = 1.0;
        for (Letter t = 0; t < S; ++t) {
            if (t == step) continue;
            if (t == parent)
                denom -= m.prob[static_cast<std::size_t>(t)] * G_prev;
            else
                denom -= m.prob[static_cast<std::size_t>(t)] *
                         beta[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
        }
        double G = m.prob[static_cast<std::size_t>(step)] / denom;
        F *= G;
        G_prev = G;
    }
    return F;
}

double ball_hitting_probability_sweep(const GroupModel& model, const StepMeasure& m,
                                      const GroupElement& z, int R,
                                      const BallSolveOptions& opts) {
    if (z.is_identity()) return 1.0;
    if (R < static_cast<int>(z.word.size()))
        throw ValidationError("ball radius must be >= |z|");
    const int S = model.alphabet_size();

    // Enumerate the ball breadth-first, each level sorted, so the state order
    // and therefore the sweep arithmetic is deterministic.
    std::vector<Word> states{Word{}};
    std::unordered_map<Word, int> index;
    index.emplace(Word{}, 0);
    std::vector<Word> level{Word{}};
    for (int r = 1; r <= R; ++r) {
        std::vector<Word> next;
        for (const Word& w : level) {
            for (Letter a = 0; a < S; ++a) {
                Word y = w;
                model.push_letter(y, a);
                if (y.size() != w.size() + 1) continue;  // not an outward move
                if (index.contains(y)) continue;
                next.push_back(y);
                index.emplace(y, 0);
            }
        }
        std::sort(next.begin(), next.end());
        for (auto& w : next) states.push_back(w);
        level = std::move(next);
        if (states.size() > opts.state_budget)
            throw BudgetExceeded(states.size(), opts.state_budget);
    }
    for (std::size_t i = 0; i < states.size(); ++i) index[states[i]] = static_cast<int>(i);

    // Precompute neighbors; -1 encodes the killed exterior.
    std::vector<int> neighbor(states.size() * static_cast<std::size_t>(S), -1);
    for (std::size_t i = 0; i < states.size(); ++i) {
        for (Letter a = 0; a < S; ++a) {
            Word y = states[i];
            model.push_letter(y, a);
            auto it = index.find(y);
            neighbor[i * static_cast<std::size_t>(S) + static_cast<std::size_t>(a)] =
                it == index.end() ? -1 : it->second;
        }
    }

    const int target = index.at(z.word);
    std::vector<double> f(states.size(), 0.0);
    f[static_cast<std::size_t>(target)] = 1.0;
    double residual = 1.0;
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        residual = 0.0;
        for (std::size_t i = 0; i < states.size(); ++i) {
            if (static_cast<int>(i) == target) continue;
            double v = 0.0;
            for (Letter a = 0; a < S; ++a) {
                int j = neighbor[i * static_cast<std::size_t>(S) + static_cast<std::size_t>(a)];
                if (j >= 0) v += m.prob[static_cast<std::size_t>(a)] * f[static_cast<std::size_t>(j)];
            }
            residual = std::max(residual, std::abs(v - f[i]));
            f[i] = v;
        }
        if (residual <= opts.residual_target) return f[0];
    }
    throw NonConvergence(residual, opts.residual_target);
}

GreenEvaluation green_distance_ball(const GroupModel& model, const StepMeasure& m,
                                    const GroupElement& z, int R, const BallSolveOptions& opts) {
    GreenEvaluation eval;
    eval.z = z;
    eval.method = GreenMethod::BallSolve;
    eval.radius = R;
    if (z.is_identity()) {
        eval.hitting_lower = 1.0;
        return eval;  // exact zero bracket
    }
    const int len = static_cast<int>(z.word.size());
    if (R < len) throw ValidationError("ball radius must be >= |z|");

    double F_lower;
    double tail;
    if (model.kind() == GroupKind::FreeGroup) {
        F_lower = ball_hitting_probability_tree(model, m, z, R);
        // Paths missed by the killed walk exit at depth R + 1 and still have to
        // travel back to z: at most q_max^(R + 1 - |z|) in hitting probability.
        auto table = tree_first_passage(model, m);
        tail = std::pow(table.q_max_upper(), R + 1 - len);
    } else {
        F_lower = ball_hitting_probability_sweep(model, m, z, R, opts);
        // Step-count bound: exiting first forces T_z >= 2R + 2 - |z|, and
        // P[T_z = n] <= mu^n(z) <= rho_hat^n.
        auto rho = spectral_radius_upper(model, m, opts.rho_margin);
        tail = std::pow(rho.rho_hat, 2 * R + 2 - len) / (1.0 - rho.rho_hat);
    }
    tail = std::min(tail, 1.0);
    eval.hitting_lower = F_lower;
    eval.tail = tail;
    eval.upper = -std::log(F_lower);
    eval.lower = -std::log(std::min(F_lower + tail, 1.0));
    return eval;
}

SeriesEvaluation green_function_series(const GroupModel& model, const StepMeasure& m,
                                       const GroupElement& z, int T,
                                       const OracleOptions& oracle_opts, double rho_margin) {
    SeriesEvaluation eval;
    eval.terms = T;
    DistanceChain chain = distance_chain(model, m);
    const int r = static_cast<int>(z.word.size());
    if (chain.applicable) {
        eval.from_chain = true;
        // march the chain once, accumulating P[|Z_t| = r] / sphere(r)
        double sphere = 1.0;
        if (r > 0) {
            auto spheres = model.sphere_counts(r);
            sphere = static_cast<double>(spheres[static_cast<std::size_t>(r)]);
        }
        std::vector<double> p(static_cast<std::size_t>(T) + 2, 0.0);
        p[0] = 1.0;
        std::vector<double> q(p.size());
        eval.partial = (r == 0) ? 1.0 : 0.0;
        for (int t = 1; t <= T; ++t) {
            std::fill(q.begin(), q.end(), 0.0);
            for (int x = 0; x < t && x <= static_cast<int>(p.size()) - 2; ++x) {
                double mass = p[static_cast<std::size_t>(x)];
                if (mass == 0.0) continue;
                if (x == 0) {
                    q[1] += mass;
                } else {
                    q[static_cast<std::size_t>(x) + 1] += mass * chain.up;
                    q[static_cast<std::size_t>(x)] += mass * chain.stay;
                    q[static_cast<std::size_t>(x) - 1] += mass * chain.down;
                }
            }
            std::swap(p, q);
            if (r <= t) eval.partial += p[static_cast<std::size_t>(r)] / sphere;
        }
    } else {
        auto masses = point_mass_series(model, m, z, T, oracle_opts);
        for (double v : masses) eval.partial += v;
    }
    auto rho = spectral_radius_upper(model, m, rho_margin);
    eval.rho_hat = rho.rho_hat;
    eval.tail = std::pow(rho.rho_hat, T + 1) / (1.0 - rho.rho_hat);
    return eval;
}

BallGreenMetric::BallGreenMetric(const GroupModel& model, StepMeasure measure, int radius_margin,
                                 BallSolveOptions opts)
    : model_(model), measure_(std::move(measure)), radius_margin_(radius_margin),
      opts_(opts) {}

double BallGreenMetric::from_id(const GroupElement& x) const {
    if (x.is_identity()) return 0.0;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(x.word);
        if (it != cache_.end()) return it->second;
    }
    int R = static_cast<int>(x.word.size()) + radius_margin_;
    GreenEvaluation eval = green_distance_ball(model_, measure_, x, R, opts_);
    double mid = 0.5 * (eval.lower + eval.upper);
    std::lock_guard<std::mutex> lock(mutex_);
    cache_.emplace(x.word, mid);
    max_halfwidth_ = std::max(max_halfwidth_, 0.5 * eval.width());
    return mid;
}

double BallGreenMetric::max_halfwidth() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return max_halfwidth_;
}

}  // namespace hypwalk
