// Compares the serial odometer enumeration against the OpenMP-parallel flat
// enumerator and the Monte Carlo estimator on one knowledge-sharing plan.
//
// Run: build/estimator_bench [--benchmark_filter=...]
#include <benchmark/benchmark.h>

#include "ratsim/parallel.hpp"
#include "ratsim/problems.hpp"
#include "ratsim/protocols.hpp"
#include "ratsim/rationality.hpp"

using namespace ratsim;

namespace {

ExecutionPlan ks_plan(std::size_t n, int k) {
    std::vector<AgentId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<AgentId>(i + 1);
    ProtocolConfig cfg;
    cfg.key = "ks";
    cfg.k = k;
    cfg.pad_field = 1;
    ExecutionPlan plan;
    plan.original = build_ring(n, ids);
    plan.honest_factory = make_agent_factory(cfg);
    plan.round_limit = round_limit_hint(cfg.key, n);
    plan.record_messages = false;
    return plan;
}

std::size_t output_bucket(const ExecutionTrace& tr) {
    if (tr.aborted() || !tr.outputs.begin()->second) return 0;
    return static_cast<std::size_t>(tr.outputs.begin()->second->scalar());
}

void BM_SerialEnumeration(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const int k = static_cast<int>(state.range(1));
    ExecutionPlan plan = ks_plan(n, k);
    std::uint64_t branches = 0;
    for (auto _ : state) {
        std::vector<Rat> mass(static_cast<std::size_t>(k), Rat(0));
        branches = 0;
        enumerate_executions(plan, [&](const Rat& p, const ExecutionTrace& tr) {
            mass[output_bucket(tr)] += p;
            ++branches;
        });
        benchmark::DoNotOptimize(mass);
    }
    state.counters["branches"] = static_cast<double>(branches);
}

void BM_ParallelFlatCounts(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const int k = static_cast<int>(state.range(1));
    const int jobs = static_cast<int>(state.range(2));
    ExecutionPlan plan = ks_plan(n, k);
    std::uint64_t branches = 0;
    for (auto _ : state) {
        FlatCounts fc =
            parallel_flat_counts(plan, static_cast<std::size_t>(k), output_bucket, jobs);
        branches = fc.total;
        benchmark::DoNotOptimize(fc);
    }
    state.counters["branches"] = static_cast<double>(branches);
    state.counters["jobs"] = jobs;
}

void BM_MonteCarlo(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const int k = static_cast<int>(state.range(1));
    const auto samples = static_cast<std::size_t>(state.range(2));
    ExecutionPlan plan = ks_plan(n, k);
    ProblemSpec problem = make_problem(ProblemKind::KnowledgeSharing, k);
    Preference pref{1, OutputValue(0)};
    for (auto _ : state) {
        McEstimate est = expected_utility_mc(plan, problem, pref, samples, 0xBE5Cull);
        benchmark::DoNotOptimize(est);
    }
    state.counters["samples"] = static_cast<double>(samples);
}

}  // namespace

BENCHMARK(BM_SerialEnumeration)->Args({5, 3})->Args({6, 3})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ParallelFlatCounts)
    ->Args({5, 3, 1})
    ->Args({5, 3, 4})
    ->Args({6, 3, 1})
    ->Args({6, 3, 4})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarlo)->Args({6, 3, 2000})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
