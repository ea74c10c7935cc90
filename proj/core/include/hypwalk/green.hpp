#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "hypwalk/exact.hpp"
#include "hypwalk/group.hpp"
#include "hypwalk/measure.hpp"

namespace hypwalk {

/// Per-letter first-passage probabilities q(s) = P[T_s < infinity] on a free
/// group, computed as the minimal solution of the tree fixed-point system
///   q_s = mu(s) + (sum_{t != s} mu(t) q(t^{-1})) q_s
/// by monotone iteration from zero. q_upper certifies q(s) <= q_upper(s) via a
/// supersolution check, used for honest truncation tails.
struct FirstPassageTable {
    std::vector<double> q;
    std::vector<double> q_upper;
    double return_prob = 0.0;  // U = sum_s mu(s) q(s^{-1})
    double residual = 0.0;

    double green_at_id() const { return 1.0 / (1.0 - return_prob); }
    double q_max_upper() const;
};

FirstPassageTable tree_first_passage(const GroupModel& model, const StepMeasure& m,
                                     double residual_target = 1e-12, int max_iterations = 200000);

/// d_G(id, z) = -sum_i log q(s_i) over the normal form of z (trees only).
double green_distance_tree(const GroupModel& model, const FirstPassageTable& table,
                           const GroupElement& z);

/// The Green metric of the measure as a letter-cost metric (trees only).
LetterCostMetric tree_green_metric(const GroupModel& model, const FirstPassageTable& table,
                                   std::string name = "green-tree");

struct BallSolveOptions {
    std::size_t state_budget = 2'000'000;  // enumerated solver only
    double residual_target = 1e-12;
    int max_sweeps = 200000;
    double rho_margin = 0.02;
};

enum class GreenMethod { TreeExact, BallSolve, Series };

/// Bracket on d_G(id, z). lower == upper for TreeExact.
struct GreenEvaluation {
    GroupElement z;
    double lower = 0.0;
    double upper = 0.0;
    GreenMethod method = GreenMethod::BallSolve;
    int radius = 0;              // BallSolve
    int terms = 0;               // Series
    double hitting_lower = 0.0;  // F_R(z), the killed-walk hitting probability
    double tail = 0.0;           // bound on F - F_R

    double width() const { return upper - lower; }
    bool contains(double d) const { return lower - 1e-12 <= d && d <= upper + 1e-12; }
};

/// Hitting probability of z for the walk killed on exiting the ball of radius
/// R, by backward recursion over branch depths (trees only; exact, O(R |S|)).
double ball_hitting_probability_tree(const GroupModel& model, const StepMeasure& m,
                                     const GroupElement& z, int R);

/// Same quantity by enumerating the ball and running Gauss-Seidel sweeps in a
/// fixed state order until the residual target is met (any supported model).
double ball_hitting_probability_sweep(const GroupModel& model, const StepMeasure& m,
                                      const GroupElement& z, int R,
                                      const BallSolveOptions& opts = {});

/// Bracket on d_G(id, z) from the killed-walk lower bound plus a tail term:
/// a certified per-letter hitting bound on trees, a spectral-radius step-count
/// bound otherwise.
GreenEvaluation green_distance_ball(const GroupModel& model, const StepMeasure& m,
                                    const GroupElement& z, int R,
                                    const BallSolveOptions& opts = {});

/// Partial sum of the Green function G(z) = sum_n mu^n(z) with a spectral tail
/// bound. Uses the distance-chain fast path for letter-uniform measures.
struct SeriesEvaluation {
    double partial = 0.0;
    double tail = 0.0;
    int terms = 0;
    bool from_chain = false;
    double rho_hat = 1.0;

    double lower() const { return partial; }
    double upper() const { return partial + tail; }
};
SeriesEvaluation green_function_series(const GroupModel& model, const StepMeasure& m,
                                       const GroupElement& z, int T,
                                       const OracleOptions& oracle_opts = {},
                                       double rho_margin = 0.02);

/// Green metric via per-point ball brackets (midpoint value), for models with
/// no tree factorization. Thread-safe memoization; expensive per fresh point.
class BallGreenMetric final : public Metric {
public:
    BallGreenMetric(const GroupModel& model, StepMeasure measure, int radius_margin = 8,
                    BallSolveOptions opts = {});

    double from_id(const GroupElement& x) const override;
    std::string name() const override { return "green-ball"; }

    /// Largest half-width of any bracket served so far.
    double max_halfwidth() const;

private:
    const GroupModel& model_;
    StepMeasure measure_;
    int radius_margin_;
    BallSolveOptions opts_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<Word, double> cache_;
    mutable double max_halfwidth_ = 0.0;
};

}  // namespace hypwalk
