#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "ratsim/engine.hpp"

using namespace ratsim;

namespace {

std::vector<AgentId> seq(std::size_t n) {
    std::vector<AgentId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i + 1;
    return ids;
}

// Two-round toy protocol: exchange ids, output the sum of everything heard.
class EchoSum : public AgentProgram {
public:
    explicit EchoSum(AgentId self) : self_(self) {}
    void step(AgentCtx& ctx) override {
        if (ctx.round() == 1) {
            for (std::uint32_t p = 0; p < ctx.num_ports(); ++p)
                ctx.send(p, Payload(Tag::Hello, {static_cast<std::int64_t>(self_)}));
        } else if (ctx.round() == 2) {
            std::int64_t sum = static_cast<std::int64_t>(self_);
            for (const auto& m : ctx.inbox()) sum += m.payload.vals[0];
            ctx.set_output(OutputValue(sum));
        }
    }

private:
    AgentId self_;
};

// Draws one coin; a second coin only on heads (variable-length branches).
class CoinTree : public AgentProgram {
public:
    void step(AgentCtx& ctx) override {
        if (ctx.round() != 1) return;
        std::uint32_t first = ctx.draw(2);
        std::int64_t v = first;
        if (first == 0) v = 10 + ctx.draw(3);
        ctx.set_output(OutputValue(v));
    }
};

}  // namespace

TEST_CASE("seeded draws are deterministic, in range, and skip trivial domains") {
    SeededSource a(99), b(99), c(99);
    for (int i = 0; i < 50; ++i) {
        auto x = a.draw(7, 6);
        CHECK(x < 6);
        CHECK(x == b.draw(7, 6));
    }
    // domain <= 1 consumes nothing from the stream
    SeededSource d(123), e(123);
    (void)d.draw(1, 1);
    CHECK(d.draw(1, 9) == e.draw(1, 9));
}

TEST_CASE("odometer enumerates the full choice tree with exact probabilities") {
    OdometerSource src;
    std::map<std::int64_t, Rat> dist;
    Rat total = 0;
    while (true) {
        src.begin_run();
        std::uint32_t first = src.draw(1, 2);
        std::int64_t v = first;
        if (first == 0) v = 10 + src.draw(1, 3);
        dist[v] += src.branch_probability();
        total += src.branch_probability();
        if (!src.advance()) break;
    }
    CHECK(total == Rat(1));
    CHECK(dist.size() == 4);  // 10, 11, 12, 1
    CHECK(dist[1] == Rat(1, 2));
    CHECK(dist[10] == Rat(1, 6));
    CHECK(dist[12] == Rat(1, 6));
}

TEST_CASE("odometer truncation handles branch-dependent draw counts") {
    // The second domain depends on the first choice; DFS truncation must
    // still cover the tree exactly once with probabilities summing to 1.
    OdometerSource src;
    Rat total = 0;
    std::size_t leaves = 0;
    while (true) {
        src.begin_run();
        auto first = src.draw(1, 2);
        (void)src.draw(1, 3 + first);
        total += src.branch_probability();
        ++leaves;
        if (!src.advance()) break;
    }
    CHECK(total == Rat(1));
    CHECK(leaves == 7);  // 3 branches under heads, 4 under tails
}

TEST_CASE("flat source extracts little-endian mixed-radix digits") {
    std::vector<std::uint32_t> shape{2, 3, 2};
    for (std::uint64_t i = 0; i < 12; ++i) {
        FlatSource src(shape, i);
        CHECK(src.draw(1, 2) == i % 2);
        CHECK(src.draw(1, 3) == (i / 2) % 3);
        CHECK(src.draw(1, 2) == (i / 6) % 2);
        CHECK(!src.overflowed());
        CHECK(src.consumed() == 3);
    }
    FlatSource over(shape, 0);
    for (int j = 0; j < 3; ++j) (void)over.draw(1, shape[j]);
    (void)over.draw(1, 5);
    CHECK(over.overflowed());
}

TEST_CASE("grow source discovers the shape of a run") {
    std::vector<std::uint32_t> shape;
    GrowSource g(shape, 0);
    (void)g.draw(1, 4);
    (void)g.draw(1, 1);  // trivial, not part of the shape
    (void)g.draw(2, 2);
    CHECK(shape == std::vector<std::uint32_t>{4, 2});
}

TEST_CASE("run_execution delivers messages one round later") {
    ExecutionPlan plan;
    plan.original = build_ring(4, seq(4));
    plan.honest_factory = [](AgentId id) { return std::make_unique<EchoSum>(id); };
    SeededSource src(1);
    ExecutionTrace t = run_execution(plan, src);
    REQUIRE(!t.aborted());
    // Each agent hears both ring neighbors.
    CHECK(t.outputs.at(1)->scalar() == 1 + 2 + 4);
    CHECK(t.outputs.at(3)->scalar() == 3 + 2 + 4);
    CHECK(t.message_count == 8);
    CHECK(t.rounds.size() == 2);
}

TEST_CASE("round limit is enforced") {
    ExecutionPlan plan;
    plan.original = build_ring(3, seq(3));
    plan.honest_factory = [](AgentId) {
        // never outputs
        class Silent : public AgentProgram {
            void step(AgentCtx&) override {}
        };
        return std::make_unique<Silent>();
    };
    plan.round_limit = 5;
    SeededSource src(1);
    CHECK_THROWS_AS(run_execution(plan, src), Error);
}

TEST_CASE("enumeration over an execution sums to one and hits the cap") {
    ExecutionPlan plan;
    plan.original = Topology({1}, {});
    plan.honest_factory = [](AgentId) { return std::make_unique<CoinTree>(); };
    plan.record_messages = false;
    Rat total = 0;
    std::size_t leaves = 0;
    enumerate_executions(plan, [&](const Rat& p, const ExecutionTrace&) {
        total += p;
        ++leaves;
    });
    CHECK(total == Rat(1));
    CHECK(leaves == 4);
    CHECK_THROWS_AS(enumerate_executions(plan, [](const Rat&, const ExecutionTrace&) {}, 2), Error);
}

TEST_CASE("draw recording captures agent, domain and choice") {
    ExecutionPlan plan;
    plan.original = Topology({1}, {});
    plan.honest_factory = [](AgentId) { return std::make_unique<CoinTree>(); };
    plan.record_draws = true;
    SeededSource src(5);
    ExecutionTrace t = run_execution(plan, src);
    REQUIRE(!t.rounds.empty());
    REQUIRE(!t.rounds[0].draws.empty());
    CHECK(t.rounds[0].draws[0].agent == 1);
    CHECK(t.rounds[0].draws[0].domain == 2);
}

TEST_CASE("jsonl trace export is parseable and complete") {
    ExecutionPlan plan;
    plan.original = build_ring(3, seq(3));
    plan.honest_factory = [](AgentId id) { return std::make_unique<EchoSum>(id); };
    SeededSource src(1);
    ExecutionTrace t = run_execution(plan, src);
    std::istringstream is(trace_to_jsonl(t));
    std::string line;
    int meta = 0, msg = 0, result = 0;
    while (std::getline(is, line)) {
        auto j = nlohmann::json::parse(line);
        std::string type = j.at("type");
        if (type == "meta") ++meta;
        if (type == "msg") ++msg;
        if (type == "result") {
            ++result;
            CHECK(j.at("outputs").size() == 3);
            CHECK(j.at("abort").is_null());
        }
    }
    CHECK(meta == 1);
    CHECK(msg == 6);
    CHECK(result == 1);
}
