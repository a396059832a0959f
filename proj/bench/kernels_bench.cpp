// Serial reference vs OpenMP grid kernels on a warped state.

#include <cmath>

#include <benchmark/benchmark.h>

#include "hrf/flow.hpp"

namespace {

hrf::WarpedState make_state(std::size_t J) {
    hrf::WarpedState s;
    s.n = 3;
    s.winding = 1;
    s.alpha = 1.0;
    s.a.assign(J, 1.0);
    s.w.resize(J);
    s.phi.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
        const double x = hrf::two_pi * static_cast<double>(j) / static_cast<double>(J);
        s.w[j] = 1.0 + 0.3 * std::cos(x);
        s.phi[j] = x + 0.1 * std::sin(2.0 * x);
    }
    return s;
}

hrf::Exec exec_of(const benchmark::State& st) {
    return st.range(1) ? hrf::Exec::Parallel : hrf::Exec::Serial;
}

void BM_Curvature(benchmark::State& st) {
    const auto s = make_state(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(hrf::curvature_warped(s, 1e-8, exec_of(st)));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_Rhs(benchmark::State& st) {
    const auto s = make_state(static_cast<std::size_t>(st.range(0)));
    const auto p = hrf::curvature_warped(s, 1e-8, exec_of(st));
    for (auto _ : st) benchmark::DoNotOptimize(hrf::warped_rhs(s, p, exec_of(st)));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_Step(benchmark::State& st) {
    const auto s = make_state(static_cast<std::size_t>(st.range(0)));
    const auto sched = hrf::CouplingSchedule::constant(1.0);
    for (auto _ : st) benchmark::DoNotOptimize(hrf::step_warped(s, 0.0, 1e-6, sched, 1e-8, exec_of(st)));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void Args(benchmark::internal::Benchmark* b) {
    for (long J : {256, 4096, 65536})
        for (long par : {0, 1}) b->Args({J, par});
    b->ArgNames({"J", "parallel"});
}

}  // namespace

BENCHMARK(BM_Curvature)->Apply(Args);
BENCHMARK(BM_Rhs)->Apply(Args);
BENCHMARK(BM_Step)->Apply(Args);

BENCHMARK_MAIN();
