#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ratsim/protocols.hpp"

using namespace ratsim;

static ExecutionPlan plan_for(const std::string& key, std::size_t n, ProtocolConfig& cfg) {
    cfg.key = key;
    ExecutionPlan plan;
    std::vector<AgentId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<AgentId>(i + 1);
    plan.original = build_ring(n, ids);
    plan.honest_factory = make_agent_factory(cfg);
    plan.round_limit = round_limit_hint(key, n);
    return plan;
}

TEST_CASE("honest knowledge sharing on a 4-ring reaches agreement") {
    ProtocolConfig cfg;
    cfg.k = 4;
    cfg.pad_field = 2;
    auto plan = plan_for("ks", 4, cfg);
    SeededSource src(12345);
    auto t = run_execution(plan, src);
    REQUIRE(!t.aborted());
    auto first = t.outputs.begin()->second;
    REQUIRE(first.has_value());
    for (auto& [a, o] : t.outputs) {
        REQUIRE(o.has_value());
        CHECK(o->scalar() == first->scalar());
        CHECK(o->scalar() >= 0);
        CHECK(o->scalar() < 4);
    }
}

TEST_CASE("honest ks exact enumeration sums to probability one") {
    ProtocolConfig cfg;
    cfg.k = 2;
    cfg.pad_field = 1;
    auto plan = plan_for("ks", 4, cfg);
    plan.record_messages = false;
    Rat total = 0;
    std::size_t leaves = 0;
    enumerate_executions(plan, [&](const Rat& p, const ExecutionTrace& t) {
        total += p;
        ++leaves;
        CHECK(!t.aborted());
    });
    CHECK(total == Rat(1));
    CHECK(leaves == 16);  // 4 agents x one input bit, pads degenerate
}

TEST_CASE("orientation protocol produces a legal orientation") {
    ProtocolConfig cfg;
    auto plan = plan_for("orientation", 5, cfg);
    auto problem = make_problem(ProblemKind::Orientation, 2, {});
    SeededSource src(7);
    auto t = run_execution(plan, src);
    REQUIRE(!t.aborted());
    CHECK(classify_output(plan.original, t.outputs, problem) == Verdict::Legal);
}
