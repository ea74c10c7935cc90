#include <benchmark/benchmark.h>

#include "hypwalk/estimators.hpp"
#include "hypwalk/exact.hpp"
#include "hypwalk/green.hpp"
#include "hypwalk/walk.hpp"

using namespace hypwalk;

namespace {

const GroupModel& f2() {
    static GroupModel model = GroupModel::free_group(2);
    return model;
}

void BM_walk_steps(benchmark::State& state) {
    StepMeasure uniform = StepMeasure::uniform(f2());
    WordMetric word(f2());
    BatchSpec spec;
    spec.model = &f2();
    spec.measure = uniform;
    spec.horizon = static_cast<int>(state.range(0));
    spec.checkpoints = {spec.horizon};
    spec.trajectories = 256;
    spec.seed = 1;
    spec.metrics = {&word};
    for (auto _ : state) {
        BatchResult r = sample_batch(spec);
        benchmark::DoNotOptimize(r.stats[0].sum_d[0]);
    }
    state.SetItemsProcessed(state.iterations() * spec.trajectories * spec.horizon);
}
BENCHMARK(BM_walk_steps)->Arg(1000)->Arg(4000);

void BM_walk_with_curve(benchmark::State& state) {
    MeasureCurve curve = MeasureCurve::make(f2(), StepMeasure::uniform(f2()), {1, 1, -1, -1});
    WordMetric word(f2());
    BatchSpec spec;
    spec.model = &f2();
    spec.measure = curve.base;
    spec.horizon = 1000;
    spec.checkpoints = {1000};
    spec.trajectories = 256;
    spec.seed = 1;
    spec.metrics = {&word};
    spec.curve = &curve;
    spec.lambdas = {0.05};
    for (auto _ : state) {
        BatchResult r = sample_batch(spec);
        benchmark::DoNotOptimize(r.stats[0].sum_wd[0]);
    }
    state.SetItemsProcessed(state.iterations() * spec.trajectories * spec.horizon);
}
BENCHMARK(BM_walk_with_curve);

void BM_reduce(benchmark::State& state) {
    std::vector<Letter> letters;
    CounterRng rng(3, 0);
    for (int i = 0; i < 4096; ++i)
        letters.push_back(static_cast<Letter>(rng.bits(static_cast<uint64_t>(i)) % 4));
    for (auto _ : state) {
        GroupElement x = f2().reduce(letters);
        benchmark::DoNotOptimize(x.word.size());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(letters.size()));
}
BENCHMARK(BM_reduce);

void BM_convolve_power(benchmark::State& state) {
    StepMeasure uniform = StepMeasure::uniform(f2());
    OracleOptions opts;
    opts.force_float = true;
    int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        ExactDistribution d = convolve_power(f2(), uniform, n, opts);
        benchmark::DoNotOptimize(d.support());
    }
}
BENCHMARK(BM_convolve_power)->Arg(6)->Arg(9);

void BM_tree_first_passage(benchmark::State& state) {
    StepMeasure skew = StepMeasure::from_doubles({0.3, 0.3, 0.2, 0.2});
    for (auto _ : state) {
        FirstPassageTable t = tree_first_passage(f2(), skew);
        benchmark::DoNotOptimize(t.return_prob);
    }
}
BENCHMARK(BM_tree_first_passage);

void BM_ball_hitting_tree(benchmark::State& state) {
    StepMeasure skew = StepMeasure::from_doubles({0.3, 0.3, 0.2, 0.2});
    GroupElement z = f2().parse_word("abab");
    for (auto _ : state) {
        double v = ball_hitting_probability_tree(f2(), skew, z, 19);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_ball_hitting_tree);

}  // namespace

BENCHMARK_MAIN();
