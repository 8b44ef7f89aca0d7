#include <benchmark/benchmark.h>

#include <random>

#include "palcare/cohort.hpp"
#include "palcare/eval.hpp"
#include "palcare/features.hpp"
#include "palcare/model.hpp"
#include "palcare/synth.hpp"

using namespace palcare;

namespace {

SparseVector random_row(std::mt19937_64& rng, size_t dim, size_t nnz) {
    std::uniform_int_distribution<size_t> pick(0, dim - 1);
    std::vector<int32_t> idx;
    while (idx.size() < nnz) {
        idx.push_back(int32_t(pick(rng)));
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    }
    return {idx, std::vector<double>(idx.size(), 1.0)};
}

MLPParams net(size_t input_dim, size_t width, size_t depth) {
    ModelConfig c;
    c.input_dim = input_dim;
    c.hidden_dims.assign(depth, width);
    return init_params(c);
}

struct Cohorted {
    std::vector<CensoredPatient> patients;
    FeatureVocabulary vocab;
};

const Cohorted& cohorted() {
    static const Cohorted data = [] {
        SynthConfig sc;
        sc.n_patients = 2000;
        auto synth = generate_synthetic(sc);
        auto cohort = build_cohort(synth.snapshot, CohortConfig{});
        Cohorted c;
        for (const auto& p : cohort.points) {
            c.patients.push_back(censor(*synth.snapshot.find(p.patient_id), p.prediction_date));
        }
        c.vocab = build_vocabulary(c.patients, 20);
        return c;
    }();
    return data;
}

}  // namespace

static void BM_SparseForward(benchmark::State& state) {
    const size_t dim = 13654, width = size_t(state.range(0)), depth = size_t(state.range(1));
    std::mt19937_64 rng(1);
    auto params = net(dim, width, depth);
    auto x = random_row(rng, dim, 74);
    for (auto _ : state) benchmark::DoNotOptimize(forward(params, x.view()));
}
BENCHMARK(BM_SparseForward)->Args({64, 4})->Args({512, 4})->Args({512, 18});

static void BM_TrainStep(benchmark::State& state) {
    const size_t dim = 13654, width = size_t(state.range(0)), depth = size_t(state.range(1));
    std::mt19937_64 rng(2);
    auto params = net(dim, width, depth);
    std::vector<SparseVector> xs;
    std::vector<SparseRow> rows;
    std::vector<double> ys;
    for (int i = 0; i < 128; ++i) {
        xs.push_back(random_row(rng, dim, 74));
        ys.push_back(double(i % 14 == 0));
    }
    for (const auto& x : xs) rows.push_back(x.view());
    auto adam = AdamState::fresh(params);
    for (auto _ : state) {
        auto lg = loss_and_gradients(params, rows, ys);
        adam_step(params, lg.gradients, adam);
    }
    state.SetItemsProcessed(int64_t(state.iterations()) * 128);
}
BENCHMARK(BM_TrainStep)->Args({64, 4})->Args({512, 4})->Unit(benchmark::kMillisecond);

static void BM_Featurize(benchmark::State& state) {
    const auto& data = cohorted();
    size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(featurize(data.patients[i], data.vocab));
        i = (i + 1) % data.patients.size();
    }
    state.counters["vocab"] = double(data.vocab.size());
}
BENCHMARK(BM_Featurize);

static void BM_AveragePrecision(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<ScoredExample> xs(size_t(state.range(0)));
    for (auto& x : xs) {
        x.score = u(rng);
        x.label = u(rng) < x.score * 0.2;
    }
    for (auto _ : state) benchmark::DoNotOptimize(pr_curve_and_ap(xs).average_precision);
    state.SetItemsProcessed(int64_t(state.iterations()) * state.range(0));
}
BENCHMARK(BM_AveragePrecision)->Arg(2000)->Arg(22134);

BENCHMARK_MAIN();
