// Serial reference kernels against their OpenMP counterparts, at the batch and
// layer sizes the classifier and LSTM actually train with.
#include <benchmark/benchmark.h>

#include "pdm/kernels.hpp"
#include "pdm/random.hpp"

namespace {

using pdm::Matrix;

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    pdm::Rng rng(seed);
    Matrix m(r, c);
    for (auto& v : m.data) v = rng.normal();
    return m;
}

template <auto Kernel>
void affine(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    const auto width = static_cast<std::size_t>(state.range(1));
    const auto in = random_matrix(batch, width, 1);
    const auto w = random_matrix(width, width, 2);
    const std::vector<double> b(width, 0.1);
    Matrix out(batch, width);
    for (auto _ : state) {
        Kernel(in, w, b, out);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch * width * width));
}

template <auto Kernel>
void backproject(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    const auto width = static_cast<std::size_t>(state.range(1));
    const auto delta = random_matrix(batch, width, 3);
    const auto w = random_matrix(width, width, 4);
    Matrix out(batch, width);
    for (auto _ : state) {
        Kernel(delta, w, out);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch * width * width));
}

template <auto Kernel>
void outer(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    const auto width = static_cast<std::size_t>(state.range(1));
    const auto delta = random_matrix(batch, width, 5);
    const auto in = random_matrix(batch, width, 6);
    Matrix gw(width, width);
    std::vector<double> gb(width);
    for (auto _ : state) {
        Kernel(delta, in, 1.0 / static_cast<double>(batch), gw, gb);
        benchmark::DoNotOptimize(gw.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch * width * width));
}

void sizes(benchmark::internal::Benchmark* b) {
    for (int batch : {50, 256})
        for (int width : {64, 256}) b->Args({batch, width});
}

}  // namespace

BENCHMARK(affine<pdm::kernels::serial::affine>)->Name("affine/serial")->Apply(sizes);
BENCHMARK(affine<pdm::kernels::omp::affine>)->Name("affine/omp")->Apply(sizes)->UseRealTime();
BENCHMARK(backproject<pdm::kernels::serial::backproject>)->Name("backproject/serial")->Apply(sizes);
BENCHMARK(backproject<pdm::kernels::omp::backproject>)->Name("backproject/omp")->Apply(sizes)->UseRealTime();
BENCHMARK(outer<pdm::kernels::serial::outer_accumulate>)->Name("outer_accumulate/serial")->Apply(sizes);
BENCHMARK(outer<pdm::kernels::omp::outer_accumulate>)->Name("outer_accumulate/omp")->Apply(sizes)->UseRealTime();

BENCHMARK_MAIN();
