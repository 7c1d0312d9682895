#pragma once
#include <optional>
#include <string>

#include "ratsim/bounds.hpp"
#include "ratsim/rationality.hpp"

namespace ratsim {

// One reproducible experiment, parsed from a TOML-subset scenario file:
// [section] headers, key = value lines (integers, booleans, quoted strings,
// integer arrays), '#' comments. Parse failures report the line number.
struct CheaterSpec {
    AgentId position = 0;
    int d = 1;
    std::string strategy;  // "dup", "sybil", or a standard-catalog family name
};

struct Scenario {
    std::string name;
    Topology topology;
    ProtocolConfig cfg;
    std::map<AgentId, std::int64_t> prefs;   // preferred outputs by id
    std::map<AgentId, std::int64_t> inputs;  // scripted inputs by id (ks family)
    std::optional<KnowledgeBound> bound;
    std::optional<CheaterSpec> cheater;
    std::uint64_t seed = 1;
    bool enumerate = false;
    std::size_t trials = 10'000;
    int catalog_max_d = 0;  // 0 = positions only get the d=1 override families
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");

// Preferred output per agent: explicit entry, else a problem-appropriate
// default (0 for ks/partition/leader-style scalars, 1 for coloring).
std::function<OutputValue(AgentId)> scenario_pref_of(const Scenario& s);

// Deviation for the scenario's cheater spec (throws ConfigError for unknown
// strategy names).
DeviationSpec scenario_deviation(const Scenario& s);

}  // namespace ratsim
