#include "hypwalk/walk.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace hypwalk {

namespace {

// Fixed block size for the deterministic parallel reduction. Must not depend
// on thread count: block boundaries define the float summation grouping.
constexpr long kBlock = 1024;

struct WalkTables {
    std::vector<double> cum;                       // cumulative letter probabilities
    std::vector<const std::vector<double>*> costs; // per metric; null -> evaluate at checkpoint
    std::vector<double> nu;                        // per letter (zeros without a curve)
    std::vector<double> nu2half;
    std::vector<std::vector<double>> logratio;     // [lambda][letter]

    explicit WalkTables(const BatchSpec& spec) {
        cum = cumulative_table(spec.measure);
        costs.reserve(spec.metrics.size());
        for (const Metric* m : spec.metrics) costs.push_back(m->letter_costs());
        std::size_t S = spec.measure.prob.size();
        nu.assign(S, 0.0);
        nu2half.assign(S, 0.0);
        if (spec.curve) {
            for (std::size_t i = 0; i < S; ++i) {
                nu[i] = spec.curve->nu[i];
                nu2half[i] = 0.5 * nu[i] * nu[i];
            }
            for (double lambda : spec.lambdas)
                logratio.push_back(log_ratio_table(*spec.curve, lambda));
        } else {
            for (std::size_t j = 0; j < spec.lambdas.size(); ++j)
                logratio.emplace_back(S, 0.0);
        }
    }
};

void run_trajectory(const BatchSpec& spec, const WalkTables& tables, long index,
                    TrajectoryRecord& rec, Word& word, std::vector<double>& cost) {
    const GroupModel& model = *spec.model;
    const std::size_t n_metrics = spec.metrics.size();
    const std::size_t n_lambdas = spec.lambdas.size();
    const std::size_t n_checkpoints = spec.checkpoints.size();

    rec.index = index;
    rec.distance.assign(n_checkpoints * n_metrics, 0.0);
    rec.martingale.assign(n_checkpoints, 0.0);
    rec.quadratic.assign(n_checkpoints, 0.0);
    rec.logweight.assign(n_checkpoints * n_lambdas, 0.0);

    word.clear();
    cost.assign(n_metrics, 0.0);
    double martingale = 0.0, quadratic = 0.0;
    double logw[8];
    std::vector<double> logw_dyn;
    double* logweight = logw;
    if (n_lambdas > 8) {
        logw_dyn.assign(n_lambdas, 0.0);
        logweight = logw_dyn.data();
    } else {
        std::fill(logw, logw + n_lambdas, 0.0);
    }

    CounterRng rng(spec.seed, static_cast<uint64_t>(index));
    std::size_t next_cp = 0;
    auto record_checkpoint = [&](std::size_t cp) {
        for (std::size_t mi = 0; mi < n_metrics; ++mi) {
            double d = tables.costs[mi] != nullptr
                           ? cost[mi]
                           : spec.metrics[mi]->from_id(GroupElement{word});
            rec.distance[cp * n_metrics + mi] = d;
        }
        rec.martingale[cp] = martingale;
        rec.quadratic[cp] = quadratic;
        for (std::size_t j = 0; j < n_lambdas; ++j)
            rec.logweight[cp * n_lambdas + j] = logweight[j];
    };
    while (next_cp < n_checkpoints && spec.checkpoints[next_cp] == 0)
        record_checkpoint(next_cp++);

    for (int t = 1; t <= spec.horizon; ++t) {
        double u = rng.uniform(static_cast<uint64_t>(t));
        Letter a = 0;
        const int S = static_cast<int>(tables.cum.size());
        while (a + 1 < S && u >= tables.cum[static_cast<std::size_t>(a)]) ++a;

        // normal-form update with incremental letter costs
        if (word.empty()) {
            word.push_back(static_cast<char>(a));
            for (std::size_t mi = 0; mi < n_metrics; ++mi)
                if (tables.costs[mi]) cost[mi] += (*tables.costs[mi])[static_cast<std::size_t>(a)];
        } else {
            Letter top = static_cast<Letter>(static_cast<unsigned char>(word.back()));
            int code = model.action_code(top, a);
            if (code == GroupModel::kActionPop) {
                for (std::size_t mi = 0; mi < n_metrics; ++mi)
                    if (tables.costs[mi]) cost[mi] -= (*tables.costs[mi])[static_cast<std::size_t>(top)];
                word.pop_back();
            } else if (code == GroupModel::kActionPush) {
                word.push_back(static_cast<char>(a));
                for (std::size_t mi = 0; mi < n_metrics; ++mi)
                    if (tables.costs[mi]) cost[mi] += (*tables.costs[mi])[static_cast<std::size_t>(a)];
            } else {
                for (std::size_t mi = 0; mi < n_metrics; ++mi)
                    if (tables.costs[mi])
                        cost[mi] += (*tables.costs[mi])[static_cast<std::size_t>(code)] -
                                    (*tables.costs[mi])[static_cast<std::size_t>(top)];
                word.back() = static_cast<char>(code);
            }
        }

        martingale += tables.nu[static_cast<std::size_t>(a)];
        quadratic += tables.nu2half[static_cast<std::size_t>(a)];
        for (std::size_t j = 0; j < n_lambdas; ++j)
            logweight[j] += tables.logratio[j][static_cast<std::size_t>(a)];

        while (next_cp < n_checkpoints && spec.checkpoints[next_cp] == t)
            record_checkpoint(next_cp++);
    }
}

void accumulate(const BatchSpec& spec, const TrajectoryRecord& rec,
                std::vector<CheckpointStats>& stats) {
    const std::size_t n_metrics = spec.metrics.size();
    const std::size_t n_lambdas = spec.lambdas.size();
    for (std::size_t cp = 0; cp < spec.checkpoints.size(); ++cp) {
        CheckpointStats& s = stats[cp];
        double M = rec.martingale[cp];
        s.sum_M += M;
        s.sum_M2 += M * M;
        s.sum_A += rec.quadratic[cp];
        for (std::size_t mi = 0; mi < n_metrics; ++mi) {
            double d = rec.distance[cp * n_metrics + mi];
            s.sum_d[mi] += d;
            s.sum_d2[mi] += d * d;
            s.sum_dM[mi] += d * M;
        }
        for (std::size_t j = 0; j < n_lambdas; ++j) {
            double lw = rec.logweight[cp * n_lambdas + j];
            double w = std::exp(lw);
            s.sum_w[j] += w;
            s.sum_w2[j] += w * w;
            s.max_logw[j] = std::max(s.max_logw[j], lw);
            for (std::size_t mi = 0; mi < n_metrics; ++mi)
                s.sum_wd[mi * n_lambdas + j] += w * rec.distance[cp * n_metrics + mi];
        }
    }
}

}  // namespace

void BatchSpec::validate() const {
    if (!model) throw ValidationError("batch spec needs a group model");
    if (trajectories < 1) throw ValidationError("batch spec needs N >= 1");
    if (horizon < 0) throw ValidationError("batch spec needs n >= 0");
    if (checkpoints.empty()) throw ValidationError("batch spec needs at least one checkpoint");
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()))
        throw ValidationError("checkpoints must be sorted");
    if (checkpoints.front() < 0 || checkpoints.back() > horizon)
        throw ValidationError("checkpoints must lie in [0, n]");
    if (metrics.empty()) throw ValidationError("batch spec needs at least one metric");
    if (!lambdas.empty() && !curve)
        throw ValidationError("log-weights require a measure curve");
    auto check = validate_measure(*model, measure);
    if (!check.ok())
        throw ValidationError("invalid step measure: " + check.describe(*model));
}

void CheckpointStats::init(std::size_t n_metrics, std::size_t n_lambdas) {
    sum_d.assign(n_metrics, 0.0);
    sum_d2.assign(n_metrics, 0.0);
    sum_dM.assign(n_metrics, 0.0);
    sum_w.assign(n_lambdas, 0.0);
    sum_w2.assign(n_lambdas, 0.0);
    max_logw.assign(n_lambdas, -std::numeric_limits<double>::infinity());
    sum_wd.assign(n_metrics * n_lambdas, 0.0);
}

void CheckpointStats::merge(const CheckpointStats& other) {
    for (std::size_t i = 0; i < sum_d.size(); ++i) {
        sum_d[i] += other.sum_d[i];
        sum_d2[i] += other.sum_d2[i];
        sum_dM[i] += other.sum_dM[i];
    }
    sum_M += other.sum_M;
    sum_M2 += other.sum_M2;
    sum_A += other.sum_A;
    for (std::size_t j = 0; j < sum_w.size(); ++j) {
        sum_w[j] += other.sum_w[j];
        sum_w2[j] += other.sum_w2[j];
        max_logw[j] = std::max(max_logw[j], other.max_logw[j]);
    }
    for (std::size_t k = 0; k < sum_wd.size(); ++k) sum_wd[k] += other.sum_wd[k];
}

std::vector<double> cumulative_table(const StepMeasure& m) {
    std::vector<double> cum;
    cum.reserve(m.prob.size());
    double c = 0.0;
    for (double p : m.prob) {
        c += p;
        cum.push_back(c);
    }
    cum.back() = 1.0;  // guard against rounding drift at the top
    return cum;
}

TrajectoryRecord sample_trajectory(const BatchSpec& spec, long index) {
    spec.validate();
    if (index < 0 || index >= spec.trajectories)
        throw ValidationError("trajectory index out of range");
    WalkTables tables(spec);
    TrajectoryRecord rec;
    Word word;
    std::vector<double> cost;
    run_trajectory(spec, tables, index, rec, word, cost);
    return rec;
}

BatchResult sample_batch(const BatchSpec& spec) {
    spec.validate();
    WalkTables tables(spec);

    const long N = spec.trajectories;
    const long n_blocks = (N + kBlock - 1) / kBlock;
    const std::size_t n_cp = spec.checkpoints.size();

    BatchResult result;
    result.count = N;
    if (spec.store_records) result.records.resize(static_cast<std::size_t>(N));

    std::vector<std::vector<CheckpointStats>> block_stats(static_cast<std::size_t>(n_blocks));

    auto worker = [&](std::atomic<long>& next_block) {
        TrajectoryRecord rec;
        Word word;
        word.reserve(static_cast<std::size_t>(spec.horizon) + 1);
        std::vector<double> cost;
        for (;;) {
            long b = next_block.fetch_add(1);
            if (b >= n_blocks) break;
            auto& stats = block_stats[static_cast<std::size_t>(b)];
            stats.resize(n_cp);
            for (auto& s : stats) s.init(spec.metrics.size(), spec.lambdas.size());
            long lo = b * kBlock;
            long hi = std::min(N, lo + kBlock);
            for (long i = lo; i < hi; ++i) {
                run_trajectory(spec, tables, i, rec, word, cost);
                accumulate(spec, rec, stats);
                if (spec.store_records) result.records[static_cast<std::size_t>(i)] = rec;
            }
        }
    };

    int threads = std::max(1, spec.threads);
    std::atomic<long> next_block{0};
    if (threads == 1 || n_blocks == 1) {
        worker(next_block);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back([&] { worker(next_block); });
        for (auto& th : pool) th.join();
    }

    // Deterministic reduction: merge blocks in index order.
    result.stats.resize(n_cp);
    for (auto& s : result.stats) s.init(spec.metrics.size(), spec.lambdas.size());
    for (long b = 0; b < n_blocks; ++b)
        for (std::size_t cp = 0; cp < n_cp; ++cp)
            result.stats[cp].merge(block_stats[static_cast<std::size_t>(b)][cp]);
    return result;
}

}  // namespace hypwalk
