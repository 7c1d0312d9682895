#pragma once
#include <functional>
#include <optional>
#include <string>

#include "ratsim/building_blocks.hpp"
#include "ratsim/engine.hpp"
#include "ratsim/problems.hpp"

namespace ratsim {

// Per-protocol configuration shared by every agent of a run. The input field
// F equals k (q = sum mod k); pads for secret transmission are drawn from a
// separate field so that enumeration size can be tuned independently.
struct ProtocolConfig {
    std::string key;  // "ks", "ks2", "color-renaming", "color-orient", "color-ring",
                      // "partition", "orientation", "leader"
    int k = 2;        // output-range / input-field size where meaningful
    int pad_field = 2;
    // Scripted inputs for knowledge sharing (nullopt = draw uniformly).
    std::function<std::optional<std::int64_t>(AgentId)> input_of;
    // Color preferences / preferred group bit, by node id.
    std::function<std::int64_t(AgentId)> pref_of;
    // Knowledge-sharing deviation knob: offset added to the openly circulated
    // input while the secret-committed copies carry the truth.
    int open_lie_delta = 0;
};

ProblemKind problem_of_protocol(const std::string& key);

// Honest per-node program factory for the given protocol.
AgentFactory make_agent_factory(const ProtocolConfig& cfg);

// Generous round bound for plan.round_limit (protocol schedules are exact;
// exceeding this indicates a protocol bug).
int round_limit_hint(const std::string& key, std::size_t n_exec);

// Deviation-facing view of a knowledge-sharing agent's state.
class KsView {
public:
    virtual ~KsView() = default;
    virtual std::int64_t ks_input() const = 0;
    virtual std::optional<std::int64_t> ks_known_input(AgentId origin) const = 0;
    virtual int ks_nprime() const = 0;
    virtual std::vector<AgentId> ks_agents() const = 0;
};

}  // namespace ratsim
