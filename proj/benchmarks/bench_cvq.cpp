#include <benchmark/benchmark.h>

#include <random>

#include "cvq/baselines.hpp"
#include "cvq/cortex.hpp"
#include "cvq/experiment.hpp"
#include "cvq/pipeline.hpp"
#include "cvq/transform.hpp"

namespace {

// Basic-waves DWPT vectors, window 8, shared by every benchmark.
const cvq::VectorSet& wave_vectors() {
    static const cvq::VectorSet v = [] {
        cvq::DatasetSpec d;
        cvq::FrontEnd fe;
        const auto s = cvq::generate_stream(d, 1, cvq::samples_for_frames(64000, fe));
        return cvq::analyze(s.samples, fe, cvq::resolve_normalization(fe, s), 64000);
    }();
    return v;
}

cvq::VectorSet prefix(const cvq::VectorSet& all, std::size_t n) {
    return cvq::VectorSet(all.dim(), std::vector<double>(all.data().begin(),
                                                          all.data().begin() + std::ptrdiff_t(n * all.dim())));
}

cvq::CortexParams wave_params() {
    cvq::CortexParams p;
    p.r_init = cvq::estimate_r_init(wave_vectors());
    p.r_limit = p.r_init;
    for (double& r : p.r_limit) r *= 0.1;
    p.k_adapt = 0.2;
    p.n_power = 0.8;
    p.maturity_threshold = 20.0;
    p.epsilon_ratio = 1.0;
    return p;
}

void BM_CortexTrain(benchmark::State& state) {
    const auto data = prefix(wave_vectors(), std::size_t(state.range(0)));
    const auto params = wave_params();
    std::size_t k = 0;
    for (auto _ : state) {
        const auto cb = cvq::train_cortex(data, params, 1, {});
        k = cb.size();
        benchmark::DoNotOptimize(k);
    }
    state.counters["K"] = double(k);
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CortexTrain)->Arg(8000)->Arg(16000)->Arg(32000)->Arg(64000)->Unit(benchmark::kMillisecond)->Complexity();

void BM_CortexEncode(benchmark::State& state) {
    const auto& data = wave_vectors();
    const auto cb = cvq::train_cortex(data, wave_params(), 1, {});
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cb.encode(data.row(i)));
        i = (i + 1) % data.size();
    }
    state.counters["K"] = double(cb.size());
}
BENCHMARK(BM_CortexEncode);

void BM_CentroidEncode(benchmark::State& state) {
    const auto& data = wave_vectors();
    const auto km = cvq::kmeans(prefix(data, 16000), 330, 1, {5, 1});
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(km.codebook.encode(data.row(i)));
        i = (i + 1) % data.size();
    }
}
BENCHMARK(BM_CentroidEncode);

void BM_DwptForward(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(std::size_t(state.range(0)));
    for (double& v : x) v = u(rng);
    for (auto _ : state) benchmark::DoNotOptimize(cvq::dwpt_forward(x));
}
BENCHMARK(BM_DwptForward)->Arg(8)->Arg(16)->Arg(64);

void BM_DwptInverse(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(std::size_t(state.range(0)));
    for (double& v : x) v = u(rng);
    const auto c = cvq::dwpt_forward(x);
    for (auto _ : state) benchmark::DoNotOptimize(cvq::dwpt_inverse(c));
}
BENCHMARK(BM_DwptInverse)->Arg(8)->Arg(16)->Arg(64);

// One Lloyd iteration (assignment + update) at the 16K -> 330 grid point.
void BM_KMeansIteration(benchmark::State& state) {
    const auto data = prefix(wave_vectors(), 16000);
    for (auto _ : state) benchmark::DoNotOptimize(cvq::kmeans(data, 330, 1, {1, 1}).sse);
}
BENCHMARK(BM_KMeansIteration)->Unit(benchmark::kMillisecond);

void BM_BirchBuild(benchmark::State& state) {
    const auto data = prefix(wave_vectors(), 16000);
    const double threshold = cvq::default_birch_threshold(data, 1);
    for (auto _ : state) benchmark::DoNotOptimize(cvq::birch(data, threshold, 50, 330).leaf_entries);
}
BENCHMARK(BM_BirchBuild)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
