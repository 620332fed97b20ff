#include <benchmark/benchmark.h>

#include "feddlora/arbvs.hpp"
#include "feddlora/fed.hpp"
#include "feddlora/gap.hpp"
#include "feddlora/rng.hpp"
#include "feddlora/scenario.hpp"

using namespace feddlora;

namespace {

const ModelSpec kToy{{{64, 32}, {10, 64}}};

ObjectiveParams toy_params() {
    ObjectiveParams p;
    p.total_singulars = kToy.total_singular_values();
    p.layers = kToy.layer_count();
    return p;
}

void BM_ArbvsSchedule(benchmark::State& state) {
    RadioConfig radio;
    SpawnPolicy policy;
    policy.target_population = static_cast<int>(state.range(0));
    auto vehicles = spawn_initial(policy, radio, 1);
    const auto params = toy_params();
    for (auto _ : state) {
        auto d = arbvs_schedule(vehicles, kToy, radio, params, 32, 4);
        benchmark::DoNotOptimize(d);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ArbvsSchedule)->RangeMultiplier(2)->Range(25, 400)->Complexity();

void BM_MinBandwidth(benchmark::State& state) {
    RadioConfig radio;
    Vehicle v;
    v.id = 0;
    v.position = {250, 0};
    v.heading = {0, 1};
    v.speed = 15.0;
    v.cpu_freq = 2.4e9;
    v.cycles_per_sample = 1e7;
    v.gamma = 1.4;
    v.tx_power = 0.631;
    v.dataset_size = 300;
    for (auto _ : state) {
        auto b = min_bandwidth(v, 8, kToy, radio, 4);
        benchmark::DoNotOptimize(b);
    }
}
BENCHMARK(BM_MinBandwidth);

void BM_SvdTruncate(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(3);
    std::normal_distribution<double> d(0.0, 1.0);
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = d(rng);
    for (auto _ : state) {
        auto t = svd_truncate(g, 4);
        benchmark::DoNotOptimize(t);
    }
}
BENCHMARK(BM_SvdTruncate)->Arg(16)->Arg(32)->Arg(64);

void BM_LocalTrain(benchmark::State& state) {
    auto ds = make_gaussian_mixture(10, 32, 300, 0.6, 4);
    auto parts = partition_dataset(ds, 1, PartitionMode::Iid, 3, 300, 5);
    GlobalModel global = make_global_model(kToy, 6);
    TrainConfig cfg;
    for (auto _ : state) {
        auto u = local_train(global, parts[0], cfg, static_cast<int>(state.range(0)), 7);
        benchmark::DoNotOptimize(u);
    }
}
BENCHMARK(BM_LocalTrain)->Arg(2)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
