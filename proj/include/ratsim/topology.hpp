#pragma once
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ratsim/error.hpp"

namespace ratsim {

// Agent ids are positive integers from an id space much larger than n.
using AgentId = std::uint64_t;

enum class RingDirection { Clockwise, CounterClockwise };

// Undirected graph of agent slots, optionally with a ring layout.
// If a layout is present, the edges are exactly the consecutive ring pairs.
class Topology {
public:
    Topology() = default;
    Topology(std::vector<AgentId> nodes, std::vector<std::pair<AgentId, AgentId>> edges,
             std::optional<std::vector<AgentId>> layout = std::nullopt);

    const std::vector<AgentId>& nodes() const { return nodes_; }
    const std::vector<std::pair<AgentId, AgentId>>& edges() const { return edges_; }
    const std::optional<std::vector<AgentId>>& layout() const { return layout_; }

    std::size_t size() const { return nodes_.size(); }
    bool has_node(AgentId a) const;
    bool has_edge(AgentId a, AgentId b) const;
    std::vector<AgentId> neighbors(AgentId a) const;
    std::size_t degree(AgentId a) const { return neighbors(a).size(); }

    // Hops from a to b along the ring in the given direction, in [0, n-1].
    std::size_t ring_distance(AgentId a, AgentId b, RingDirection dir) const;

    // Position of a in the ring layout.
    std::size_t ring_position(AgentId a) const;
    AgentId ring_at(std::size_t pos) const;
    AgentId ring_step(AgentId a, RingDirection dir, std::size_t hops = 1) const;

    bool connected() const;
    std::size_t diameter() const;

    // Structured text block: nodes, edges, optional layout.
    std::string serialize() const;
    static Topology deserialize(const std::string& text);

private:
    void validate() const;

    std::vector<AgentId> nodes_;
    std::vector<std::pair<AgentId, AgentId>> edges_;
    std::optional<std::vector<AgentId>> layout_;
};

// A cheater's duplication commitment: the virtual segment replacing it and the
// assignment of its original edges to the two ends of the segment.
struct DuplicationScheme {
    AgentId cheater = 0;
    std::vector<AgentId> virtual_ids;  // ordered segment, length d >= 1
    // wiring[i] = true: the i-th original edge of the cheater (neighbors in
    // sorted order) attaches to the segment front; false: to the segment back.
    std::vector<bool> wiring;

    std::size_t d() const { return virtual_ids.size(); }

    // Identity transform: cheater keeps its single slot under a fresh id.
    static DuplicationScheme honest_shape(AgentId cheater, AgentId fresh_id);

    // Segment of d consecutive nodes splicing into a ring: front edge keeps the
    // counter-clockwise neighbor, back edge the clockwise one.
    static DuplicationScheme ring_segment(const Topology& ring, AgentId cheater,
                                          std::vector<AgentId> virtual_ids);
};

Topology build_ring(std::size_t n, const std::vector<AgentId>& ids);
bool check_two_vertex_connected(const Topology& t);
Topology apply_duplication(const Topology& t, const DuplicationScheme& s);
std::size_t ring_distance(const Topology& t, AgentId a, AgentId b, RingDirection dir);

}  // namespace ratsim
