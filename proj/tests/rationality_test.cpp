#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ratsim/rationality.hpp"

using namespace ratsim;

namespace {

Topology ring(std::size_t n) {
    std::vector<AgentId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i + 1;
    return build_ring(n, ids);
}

ProtocolConfig ks_cfg(int k, int pad = 1) {
    ProtocolConfig cfg;
    cfg.key = "ks";
    cfg.k = k;
    cfg.pad_field = pad;
    return cfg;
}

}  // namespace

TEST_CASE("utility scores 1 only on legal vectors matching the preference") {
    Topology t = ring(4);
    auto problem = make_problem(ProblemKind::KnowledgeSharing, 2, {});
    OutputVector all_one;
    for (AgentId a : t.nodes()) all_one[a] = OutputValue(1);
    Preference wants1{2, OutputValue(1)};
    Preference wants0{2, OutputValue(0)};
    CHECK(utility(all_one, wants1, t, problem) == 1);
    CHECK(utility(all_one, wants0, t, problem) == 0);
    // Disagreement is erroneous: nobody scores, even with a matching output.
    OutputVector split = all_one;
    split[3] = OutputValue(0);
    CHECK(utility(split, wants1, t, problem) == 0);
    // Bottom output anywhere is erroneous.
    OutputVector bot = all_one;
    bot[4] = std::nullopt;
    CHECK(utility(bot, wants1, t, problem) == 0);
}

TEST_CASE("honest knowledge sharing gives every agent exactly 1/k") {
    for (int k : {2, 4}) {
        Topology t = ring(4);
        ProtocolConfig cfg = ks_cfg(k);
        ExecutionPlan plan = honest_plan(t, cfg);
        auto problem = problem_for(cfg, nullptr);
        for (AgentId a : t.nodes()) {
            Preference pref{a, OutputValue(k - 1)};
            CHECK(expected_utility_exact(plan, problem, pref) == Rat(1, k));
        }
    }
}

TEST_CASE("monte carlo estimate brackets the exact value") {
    Topology t = ring(4);
    ProtocolConfig cfg = ks_cfg(4, 2);
    ExecutionPlan plan = honest_plan(t, cfg);
    auto problem = problem_for(cfg, nullptr);
    Preference pref{1, OutputValue(0)};
    McEstimate est = expected_utility_mc(plan, problem, pref, 4000, 7, 2);
    CHECK(est.samples == 4000);
    CHECK(est.ci_low <= 0.25);
    CHECK(est.ci_high >= 0.25);
    CHECK(est.ci_high - est.ci_low < 0.06);
    // Same seed, different worker count: identical estimate.
    McEstimate est1 = expected_utility_mc(plan, problem, pref, 4000, 7, 1);
    CHECK(est.mean == est1.mean);
}

TEST_CASE("conditioning on a full trace collapses the expectation to 0 or 1") {
    Topology t = ring(4);
    ProtocolConfig cfg = ks_cfg(2);
    ExecutionPlan plan = honest_plan(t, cfg);
    plan.record_draws = true;
    auto problem = problem_for(cfg, nullptr);
    SeededSource src(3);
    ExecutionTrace ref = run_execution(plan, src);
    REQUIRE(!ref.aborted());
    Preference pref{1, OutputValue(ref.outputs.at(1)->scalar())};
    int last = static_cast<int>(ref.rounds.size());
    CHECK(expected_utility_exact(plan, problem, pref, last, &ref) == Rat(1));
    Preference other{1, OutputValue(1 - ref.outputs.at(1)->scalar())};
    CHECK(expected_utility_exact(plan, problem, other, last, &ref) == Rat(0));
    // Unconditional prior for comparison.
    CHECK(expected_utility_exact(plan, problem, pref) == Rat(1, 2));
}

TEST_CASE("group knowledge grows monotonically along the schedule") {
    Topology t = ring(4);
    ProtocolConfig cfg = ks_cfg(2);
    ExecutionPlan plan = honest_plan(t, cfg);
    plan.record_draws = true;
    auto problem = problem_for(cfg, nullptr);
    SeededSource src(11);
    ExecutionTrace ref = run_execution(plan, src);
    REQUIRE(!ref.aborted());
    Preference pref{1, OutputValue(ref.outputs.at(1)->scalar())};
    // A strict majority group eventually pins the outcome it observed.
    std::set<AgentId> group{1, 2, 3};
    Rat prior = group_expected_utility(plan, problem, group, pref, 0, nullptr);
    CHECK(prior == Rat(1, 2));
    int last = static_cast<int>(ref.rounds.size());
    Rat posterior = group_expected_utility(plan, problem, group, pref, last, &ref);
    CHECK(posterior == Rat(1));
    // Monotone in the round index for a fixed realized trace.
    Rat prev = prior;
    for (int r = 1; r <= last; ++r) {
        Rat cur = group_expected_utility(plan, problem, group, pref, r, &ref);
        CHECK(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("standard catalog covers every position with the expected families") {
    Topology t = ring(4);
    ProtocolConfig cfg = ks_cfg(2);
    auto pref_of = [](AgentId) { return OutputValue(0); };
    auto catalog = standard_catalog(t, cfg, 3, pref_of);
    std::size_t dup = 0, behavioral = 0;
    for (const auto& d : catalog) {
        if (d.name.rfind("dup-", 0) == 0) ++dup;
        else ++behavioral;
        CHECK(!d.scheme.virtual_ids.empty());
    }
    CHECK(dup == 4 * 2);  // d in {2,3} per position
    CHECK(behavioral == 4 * 7);
}

TEST_CASE("no catalog deviation is profitable for 1-bit knowledge sharing") {
    Topology t = ring(4);
    EquilibriumJob job;
    job.scenario_name = "ks4-catalog";
    job.original = t;
    job.cfg = ks_cfg(2);
    job.pref_of = [](AgentId) { return OutputValue(0); };
    job.catalog = standard_catalog(t, job.cfg, 3, job.pref_of);
    EquilibriumReport rep = check_equilibrium(job);
    CHECK(!rep.deviation_found);
    CHECK(rep.honest_eu.at(1) == Rat(1, 2));
    for (const auto& d : rep.deviations) CHECK(d.margin <= 0);
    CHECK(rep.to_json().find("NoProfitableDeviation") != std::string::npos);
}

TEST_CASE("segment emulation with d = n + 1 beats the honest payoff") {
    Topology t = ring(4);
    ProtocolConfig cfg = ks_cfg(4, 2);
    AgentId cheater = 2;
    auto pref_of = [](AgentId) { return OutputValue(3); };
    DeviationSpec dev =
        sybil_emulation_strategy(ProblemKind::KnowledgeSharing, t, cheater, 4, pref_of);
    CHECK(dev.scheme.virtual_ids.size() == 5);
    ExecutionPlan plan = deviation_plan(t, cfg, dev);
    auto problem = problem_for(cfg, &dev.scheme);
    Preference pref{cheater, OutputValue(3)};
    Rat eu = expected_utility_exact(plan, problem, pref);
    CHECK(eu == Rat(1));  // forces q onto the preferred value in every branch
    CHECK(eu - Rat(1, 4) > 0);
}

TEST_CASE("segment emulation is refused outside knowledge sharing") {
    Topology t = ring(4);
    auto pref_of = [](AgentId) { return OutputValue(1); };
    CHECK_THROWS_AS(sybil_emulation_strategy(ProblemKind::Coloring, t, 1, 2, pref_of), Error);
}

TEST_CASE("equilibrium verdicts are invariant under id relabeling") {
    auto run = [](const std::vector<AgentId>& ids) {
        Topology t = build_ring(4, ids);
        EquilibriumJob job;
        job.scenario_name = "relabel";
        job.original = t;
        job.cfg = ks_cfg(2);
        job.pref_of = [](AgentId) { return OutputValue(1); };
        job.catalog = standard_catalog(t, job.cfg, 2, job.pref_of);
        return check_equilibrium(job);
    };
    EquilibriumReport a = run({1, 2, 3, 4});
    EquilibriumReport b = run({40, 10, 20, 30});
    CHECK(a.deviation_found == b.deviation_found);
    REQUIRE(a.deviations.size() == b.deviations.size());
    std::multiset<std::string> ma, mb;
    for (const auto& d : a.deviations) ma.insert(rat_str(d.eu));
    for (const auto& d : b.deviations) mb.insert(rat_str(d.eu));
    CHECK(ma == mb);
}
