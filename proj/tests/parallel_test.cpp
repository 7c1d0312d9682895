#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ratsim/parallel.hpp"
#include "ratsim/problems.hpp"
#include "ratsim/protocols.hpp"

using namespace ratsim;

namespace {

ExecutionPlan ks_plan(std::size_t n, int k) {
    std::vector<AgentId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i + 1;
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

}  // namespace

TEST_CASE("parallel flat enumeration matches the serial reference exactly") {
    for (int jobs : {1, 4}) {
        ExecutionPlan plan = ks_plan(4, 3);
        auto bucket = [](const ExecutionTrace& tr) {
            if (tr.aborted()) return std::size_t{3};
            return static_cast<std::size_t>(tr.outputs.begin()->second->scalar());
        };
        FlatCounts fc = parallel_flat_counts(plan, 4, bucket, jobs);
        CHECK(fc.total == 81);
        CHECK(fc.shape == std::vector<std::uint32_t>(4, 3));

        std::vector<Rat> serial(4, Rat(0));
        enumerate_executions(plan, [&](const Rat& p, const ExecutionTrace& tr) {
            serial[bucket(tr)] += p;
        });
        Rat sum = 0;
        for (std::size_t b = 0; b < 4; ++b) {
            Rat frac(static_cast<BigInt>(fc.counts[b]), static_cast<BigInt>(fc.total));
            CHECK(frac == serial[b]);
            sum += frac;
        }
        CHECK(sum == Rat(1));
    }
}

TEST_CASE("worker count does not change the counts") {
    ExecutionPlan plan = ks_plan(4, 2);
    auto bucket = [](const ExecutionTrace& tr) {
        return static_cast<std::size_t>(tr.outputs.begin()->second->scalar());
    };
    FlatCounts a = parallel_flat_counts(plan, 2, bucket, 1);
    FlatCounts b = parallel_flat_counts(plan, 2, bucket, 8);
    CHECK(a.counts == b.counts);
    CHECK(a.total == b.total);
}

TEST_CASE("the explosion cap is enforced") {
    ExecutionPlan plan = ks_plan(4, 4);  // 256 assignments
    auto bucket = [](const ExecutionTrace&) { return std::size_t{0}; };
    CHECK_THROWS_AS(parallel_flat_counts(plan, 1, bucket, 2, 100), Error);
}
