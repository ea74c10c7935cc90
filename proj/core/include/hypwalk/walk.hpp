#pragma once

#include <cstdint>
#include <vector>

#include "hypwalk/group.hpp"
#include "hypwalk/measure.hpp"
#include "hypwalk/rng.hpp"

namespace hypwalk {

/// One simulation request: N trajectories of `horizon` steps under `measure`,
/// with functionals recorded at each checkpoint. Every trajectory is a pure
/// function of (seed, index).
struct BatchSpec {
    const GroupModel* model = nullptr;
    StepMeasure measure;
    int horizon = 0;
    std::vector<int> checkpoints;  // sorted ascending, nonempty, last <= horizon
    long trajectories = 0;
    std::uint64_t seed = 0;
    std::vector<const Metric*> metrics;   // distances to record (>= 1)
    const MeasureCurve* curve = nullptr;  // enables M_n, A_n and log-weights
    std::vector<double> lambdas;          // Girsanov log-weight parameters
    bool store_records = false;
    int threads = 1;

    void validate() const;
};

/// Per-trajectory functionals at the requested checkpoints.
/// distance is flattened [checkpoint][metric]; logweight [checkpoint][lambda].
struct TrajectoryRecord {
    long index = 0;
    std::vector<double> distance;
    std::vector<double> martingale;  // M_n = sum nu(X_j)
    std::vector<double> quadratic;   // A_n = (1/2) sum nu^2(X_j)
    std::vector<double> logweight;   // sum_j log(mu_lambda(X_j)/mu_0(X_j))
};

/// Moment accumulators for one checkpoint. Sums run in trajectory-index order;
/// parallel runs merge fixed-size blocks in block order, so results are
/// bit-identical for any worker count.
struct CheckpointStats {
    std::vector<double> sum_d, sum_d2, sum_dM;  // [metric]
    double sum_M = 0.0, sum_M2 = 0.0, sum_A = 0.0;
    std::vector<double> sum_w, sum_w2, max_logw;  // [lambda]
    std::vector<double> sum_wd;                   // [metric * n_lambda + lambda]

    void init(std::size_t n_metrics, std::size_t n_lambdas);
    void merge(const CheckpointStats& other);
};

struct BatchResult {
    long count = 0;
    std::vector<CheckpointStats> stats;     // [checkpoint]
    std::vector<TrajectoryRecord> records;  // filled iff spec.store_records

    const CheckpointStats& at_checkpoint(std::size_t i) const { return stats[i]; }
};

/// Simulates trajectory `index` alone; deterministic in (spec.seed, index).
TrajectoryRecord sample_trajectory(const BatchSpec& spec, long index);

/// Simulates the full batch, in parallel over fixed blocks of indices.
BatchResult sample_batch(const BatchSpec& spec);

/// Cumulative table over letters in alphabet order (inverse-CDF sampling).
std::vector<double> cumulative_table(const StepMeasure& m);

}  // namespace hypwalk
