#pragma once
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ratsim/engine.hpp"
#include "ratsim/topology.hpp"

namespace ratsim {

// ---------------------------------------------------------------------------
// Pure helpers

// Witnessed joint draw: q = (r_own + r_witness) mod |X|; the result is the
// ((q mod |X|) + 1)-th largest element of X. Uniform over X when either
// contribution is uniform. X must be sorted ascending and nonempty.
std::int64_t joint_draw_value(std::int64_t r_own, std::int64_t r_witness,
                              const std::vector<std::int64_t>& x);

// Minimal-id neighbor of `a`; unique since ids are unique.
AgentId witness_of(const Topology& t, AgentId a);

// Deterministic shortest simple path from `from` to `to` avoiding `avoid`:
// BFS with smallest-id tie-breaking; includes both endpoints.
std::vector<AgentId> canonical_prompt_path(const Topology& t, AgentId from, AgentId to,
                                           AgentId avoid);

// Run decomposition for ring coloring: prefs listed by clockwise position.
// Within each maximal run of equal preferences (indexed from the run's
// counter-clockwise end), positions with index parity == b win; isolated
// preferences always win. A single full-cycle run anchors at position 0 and
// demotes the last winner if it would clash with position 0.
std::vector<bool> run_decomposition_winners(const std::vector<std::int64_t>& prefs, int b);

// Greedy completion: winners keep their preference; losers take the minimum
// positive color unused by already-decided ring neighbors, in position order.
std::vector<std::int64_t> greedy_ring_colors(const std::vector<std::int64_t>& prefs,
                                             const std::vector<bool>& winners);

// ---------------------------------------------------------------------------
// Wake-Up phase component

// Flood-based topology discovery: round 1 exchanges ids over every edge,
// round 2 onward floods per-node adjacency records. An agent is done once its
// believed graph is closed and the shared phase length W = diameter + 2 has
// elapsed; protocol phases use relative rounds rho = round - W >= 1.
class WakeUpPhase {
public:
    // Consumes this round's Hello/Rec messages from `inbox` (erasing what it
    // handles) and stages sends. Returns true when the phase is over at the
    // end of the current round. Detection failures call ctx.abort.
    bool step(AgentCtx& ctx, std::vector<AgentCtx::Incoming>& inbox);

    bool closed() const { return closed_; }
    int w() const { return w_; }
    int n_prime() const { return static_cast<int>(believed_.size()); }
    const Topology& believed() const { return believed_; }
    const std::map<std::uint32_t, AgentId>& port_ids() const { return port_ids_; }
    std::uint32_t port_to(AgentId nbr) const;

    // Ring geometry, valid when the believed topology is a ring and the
    // context carries orientation labels.
    bool is_ring() const { return is_ring_; }
    const std::vector<AgentId>& ring_cw() const { return ring_cw_; }  // self first
    std::uint32_t cw_port() const { return cw_port_; }
    std::uint32_t ccw_port() const { return ccw_port_; }

private:
    void try_close(AgentCtx& ctx);

    std::map<std::uint32_t, AgentId> port_ids_;
    std::map<AgentId, std::vector<AgentId>> records_;
    std::vector<AgentId> fresh_;  // learned this round, forwarded this round
    bool closed_ = false;
    int w_ = 0;
    Topology believed_;
    bool is_ring_ = false;
    std::vector<AgentId> ring_cw_;
    std::uint32_t cw_port_ = 0, ccw_port_ = 0;
};

// ---------------------------------------------------------------------------
// Renaming phase component (general graphs, after wake-up)

// Agents draw distinct names 1..n' via witnessed joint draws in descending-id
// order; both participants flood the claimed name, and everyone cross-checks
// the two claims. Subphase length L = diameter + 2 rounds.
class RenamingPhase {
public:
    // rel: 1-based round within the phase. Returns true when complete at the
    // end of this round. Total length = n' * (diameter + 2).
    bool step(AgentCtx& ctx, std::vector<AgentCtx::Incoming>& inbox, const WakeUpPhase& wake,
              int rel);

    const std::map<AgentId, std::int64_t>& names() const { return names_; }
    int length(const WakeUpPhase& wake) const;

private:
    std::map<AgentId, std::int64_t> names_;
    std::int64_t my_r_ = 0;
    // Per-subphase claim tracking: claimant -> claimed name.
    std::map<AgentId, std::int64_t> claims_;
    std::set<std::pair<AgentId, std::int64_t>> forwarded_;
    std::vector<Payload> to_flood_;
};

// Leader draw phase: every agent floods one value in [0, n'); the leader is
// the agent whose name equals (sum mod n') + 1. Length = diameter + 1 rounds.
class LeaderDrawPhase {
public:
    bool step(AgentCtx& ctx, std::vector<AgentCtx::Incoming>& inbox, const WakeUpPhase& wake,
              int rel);
    bool done() const { return done_; }
    std::int64_t leader_name(const WakeUpPhase& wake) const;
    const std::map<AgentId, std::int64_t>& values() const { return values_; }
    int length(const WakeUpPhase& wake) const;

private:
    std::map<AgentId, std::int64_t> values_;
    std::set<AgentId> forwarded_;
    std::vector<Payload> to_flood_;
    bool done_ = false;
};

// Orientation choice derived from an elected leader: the ring direction that
// steps from the leader toward its smaller-id neighbor.
RingDirection leader_direction(const Topology& ring, AgentId leader);

}  // namespace ratsim
