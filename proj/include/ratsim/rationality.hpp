#pragma once
#include <functional>
#include <set>
#include <string>

#include "ratsim/engine.hpp"
#include "ratsim/problems.hpp"
#include "ratsim/protocols.hpp"

namespace ratsim {

// ---------------------------------------------------------------------------
// Utility model

// Exactly one preferred output value per agent (Solution Preference is built
// in: erroneous vectors always score 0).
struct Preference {
    AgentId agent = 0;
    OutputValue value;
};

int utility(const OutputVector& o, const Preference& pref, const Topology& original,
            const ProblemSpec& p);

// ---------------------------------------------------------------------------
// Expected utility estimators

// Exact enumeration. `from_round` > 0 conditions on the trace prefix of
// `reference` (messages and draws of rounds 1..from_round); the plan and the
// reference must then both record messages and draws.
Rat expected_utility_exact(const ExecutionPlan& plan, const ProblemSpec& problem,
                           const Preference& pref, int from_round = 0,
                           const ExecutionTrace* reference = nullptr,
                           std::uint64_t cap = 10'000'000);

struct McEstimate {
    double mean = 0;
    double ci_low = 0;   // 95% normal approximation
    double ci_high = 0;
    std::size_t samples = 0;
};

// Sample i uses a seed derived from (seed, i) only, so the estimate is
// reproducible and independent of the worker count.
McEstimate expected_utility_mc(const ExecutionPlan& plan, const ProblemSpec& problem,
                               const Preference& pref, std::size_t samples, std::uint64_t seed,
                               int jobs = 0);

// ---------------------------------------------------------------------------
// Group expected utility

// Serialized joint view of `group` after `round` rounds: every member draw
// and every message a member received, in engine order. Requires a trace
// recorded with messages and draws.
std::string group_view_key(const ExecutionTrace& t, const std::set<AgentId>& group, int round);

// Expectation of the target's utility conditioned on the group's joint view
// at `round` in `reference` (round 0 or null reference = unconditional).
Rat group_expected_utility(const ExecutionPlan& plan, const ProblemSpec& problem,
                           const std::set<AgentId>& group, const Preference& target_pref,
                           int round = 0, const ExecutionTrace* reference = nullptr,
                           std::uint64_t cap = 10'000'000);

// ---------------------------------------------------------------------------
// Deviation catalog and the equilibrium checker

struct DeviationSpec {
    std::string name;  // stable id used in reports
    DuplicationScheme scheme;
    DeviationFactory factory;  // null = honest emulation of the duplicates
};

// Fixed finite families of message-level overrides, instantiated per cheater
// position: honest duplication (1 <= d <= max_d), lie-about-input,
// delay-by-one, withhold, output-override, biased-draw.
std::vector<DeviationSpec> standard_catalog(const Topology& original, const ProtocolConfig& cfg,
                                            int max_d,
                                            const std::function<OutputValue(AgentId)>& pref_of);

// Theorem-1-style segment emulation for knowledge sharing: simulate d = n+1
// virtual agents honestly, then rewrite the last outgoing open record so the
// circulated sum lands on the cheater's preferred value.
DeviationSpec sybil_emulation_strategy(ProblemKind problem, const Topology& original,
                                       AgentId cheater, int k,
                                       const std::function<OutputValue(AgentId)>& pref_of);

enum class EstimationMode { Exact, MonteCarlo };

struct DeviationResult {
    std::string name;
    AgentId cheater = 0;
    int d = 1;
    Rat eu;        // exact mode
    Rat margin;    // eu - honest eu of the cheater (exact mode)
    McEstimate mc; // Monte Carlo mode
    bool profitable = false;
};

struct EquilibriumReport {
    std::string scenario;
    EstimationMode mode = EstimationMode::Exact;
    std::map<AgentId, Rat> honest_eu;
    std::vector<DeviationResult> deviations;
    bool deviation_found = false;
    std::optional<DeviationResult> witness;  // first profitable deviation

    std::string to_json() const;   // stable keys
    std::string to_table() const;  // human-readable
};

struct EquilibriumJob {
    std::string scenario_name;
    Topology original;
    ProtocolConfig cfg;
    std::function<OutputValue(AgentId)> pref_of;
    std::vector<DeviationSpec> catalog;
    EstimationMode mode = EstimationMode::Exact;
    std::size_t trials = 10'000;  // Monte Carlo
    std::uint64_t seed = 1;
    std::uint64_t cap = 10'000'000;
    int jobs = 0;
    bool use_parallel_exact = false;  // flat OpenMP enumerator instead of odometer
};

// Profitability: exact margin > 0, or in Monte Carlo mode a CI lower bound
// strictly above the honest estimate's CI upper bound.
EquilibriumReport check_equilibrium(const EquilibriumJob& job);

// Plan construction shared with the CLI.
ExecutionPlan honest_plan(const Topology& original, const ProtocolConfig& cfg);
ExecutionPlan deviation_plan(const Topology& original, const ProtocolConfig& cfg,
                             const DeviationSpec& dev);
ProblemSpec problem_for(const ProtocolConfig& cfg, const DuplicationScheme* scheme);

}  // namespace ratsim
