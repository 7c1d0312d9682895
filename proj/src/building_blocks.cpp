#include "ratsim/building_blocks.hpp"

#include <algorithm>
#include <queue>

namespace ratsim {

std::int64_t joint_draw_value(std::int64_t r_own, std::int64_t r_witness,
                              const std::vector<std::int64_t>& x) {
    if (x.empty()) throw Error(ErrorCode::EmptyChoiceSet, "joint draw over empty set");
    auto m = static_cast<std::int64_t>(x.size());
    std::int64_t q = (r_own + r_witness) % m;
    // ((q mod |X|) + 1)-th largest element; x is sorted ascending.
    return x[static_cast<std::size_t>(m - 1 - q)];
}

AgentId witness_of(const Topology& t, AgentId a) {
    auto nbrs = t.neighbors(a);
    if (nbrs.empty()) throw Error(ErrorCode::Precondition, "agent has no neighbor");
    return nbrs.front();
}

std::vector<AgentId> canonical_prompt_path(const Topology& t, AgentId from, AgentId to,
                                           AgentId avoid) {
    if (from == to) return {from};
    auto bfs_dist = [&](bool use_avoid) {
        std::map<AgentId, std::size_t> dist{{to, 0}};
        std::queue<AgentId> q;
        q.push(to);
        while (!q.empty()) {
            AgentId a = q.front();
            q.pop();
            for (AgentId b : t.neighbors(a)) {
                if (use_avoid && b == avoid) continue;
                if (!dist.count(b)) {
                    dist[b] = dist[a] + 1;
                    q.push(b);
                }
            }
        }
        return dist;
    };
    // Prefer the path avoiding the subject; fall back if the graph minus the
    // subject disconnects the pair (possible off the 2-connected core).
    auto dist = bfs_dist(true);
    bool use_avoid = dist.count(from) > 0;
    if (!use_avoid) dist = bfs_dist(false);
    if (!dist.count(from)) throw Error(ErrorCode::Precondition, "no prompt path exists");
    // Walk greedily toward `to`, picking the smallest-id next hop on a
    // shortest path; yields the lexicographically smallest shortest path.
    std::vector<AgentId> path{from};
    AgentId cur = from;
    while (cur != to) {
        std::size_t need = dist.at(cur) - 1;
        AgentId next = 0;
        bool found = false;
        for (AgentId b : t.neighbors(cur)) {
            if (use_avoid && b == avoid) continue;
            auto it = dist.find(b);
            if (it != dist.end() && it->second == need && (!found || b < next)) {
                next = b;
                found = true;
            }
        }
        if (!found) throw Error(ErrorCode::Precondition, "path reconstruction failed");
        path.push_back(next);
        cur = next;
    }
    return path;
}

std::vector<bool> run_decomposition_winners(const std::vector<std::int64_t>& prefs, int b) {
    std::size_t n = prefs.size();
    std::vector<bool> win(n, false);
    bool all_same = std::all_of(prefs.begin(), prefs.end(),
                                [&](std::int64_t p) { return p == prefs[0]; });
    if (all_same) {
        for (std::size_t j = 0; j < n; ++j) win[j] = static_cast<int>(j % 2) == b;
        if (n > 1 && win[0] && win[n - 1]) win[n - 1] = false;
        return win;
    }
    // Find a run boundary to anchor the cyclic scan.
    std::size_t start = 0;
    for (std::size_t j = 0; j < n; ++j)
        if (prefs[j] != prefs[(j + n - 1) % n]) {
            start = j;
            break;
        }
    std::size_t done = 0;
    while (done < n) {
        std::size_t run_start = (start + done) % n;
        std::size_t len = 1;
        while (len < n - done &&
               prefs[(run_start + len) % n] == prefs[run_start])
            ++len;
        for (std::size_t j = 0; j < len; ++j) {
            std::size_t p = (run_start + j) % n;
            win[p] = len == 1 || static_cast<int>(j % 2) == b;
        }
        done += len;
    }
    return win;
}

std::vector<std::int64_t> greedy_ring_colors(const std::vector<std::int64_t>& prefs,
                                             const std::vector<bool>& winners) {
    std::size_t n = prefs.size();
    std::vector<std::int64_t> colors(n, 0);
    std::vector<bool> decided(n, false);
    for (std::size_t j = 0; j < n; ++j)
        if (winners[j]) {
            colors[j] = prefs[j];
            decided[j] = true;
        }
    for (std::size_t j = 0; j < n; ++j) {
        if (decided[j]) continue;
        std::set<std::int64_t> used;
        for (std::size_t nb : {(j + 1) % n, (j + n - 1) % n})
            if (decided[nb]) used.insert(colors[nb]);
        std::int64_t c = 1;
        while (used.count(c)) ++c;
        colors[j] = c;
        decided[j] = true;
    }
    return colors;
}

// ---------------------------------------------------------------------------
// Wake-Up

std::uint32_t WakeUpPhase::port_to(AgentId nbr) const {
    for (const auto& [p, id] : port_ids_)
        if (id == nbr) return p;
    throw Error(ErrorCode::Precondition, "no port toward agent");
}

void WakeUpPhase::try_close(AgentCtx& ctx) {
    // Closed when every id referenced in a neighbor list has its own record.
    std::set<AgentId> referenced;
    for (const auto& [id, nbrs] : records_)
        referenced.insert(nbrs.begin(), nbrs.end());
    for (AgentId id : referenced)
        if (!records_.count(id)) return;
    // Symmetry: u in rec[v] iff v in rec[u].
    for (const auto& [id, nbrs] : records_)
        for (AgentId nb : nbrs) {
            const auto& back = records_.at(nb);
            if (!std::binary_search(back.begin(), back.end(), id)) {
                ctx.abort("wake-up: asymmetric adjacency reports");
                return;
            }
        }
    std::vector<AgentId> nodes;
    std::vector<std::pair<AgentId, AgentId>> edges;
    for (const auto& [id, nbrs] : records_) {
        nodes.push_back(id);
        for (AgentId nb : nbrs)
            if (id < nb) edges.emplace_back(id, nb);
    }
    try {
        believed_ = Topology(nodes, edges);
        if (!believed_.connected()) {
            ctx.abort("wake-up: believed topology disconnected");
            return;
        }
        w_ = static_cast<int>(believed_.diameter()) + 2;
    } catch (const Error& e) {
        ctx.abort(std::string("wake-up: ") + e.what());
        return;
    }
    if (ctx.round() > w_) {
        ctx.abort("wake-up: closure later than the flood horizon");
        return;
    }
    closed_ = true;
    is_ring_ = believed_.size() >= 3;
    for (AgentId a : believed_.nodes())
        if (believed_.degree(a) != 2) is_ring_ = false;
    if (is_ring_ && ctx.num_ports() == 2 && ctx.port_clockwise(0) != -1) {
        cw_port_ = ctx.port_clockwise(0) == 1 ? 0 : 1;
        ccw_port_ = 1 - cw_port_;
        ring_cw_.clear();
        AgentId prev = ctx.self();
        AgentId cur = port_ids_.at(cw_port_);
        ring_cw_.push_back(prev);
        while (cur != ctx.self()) {
            ring_cw_.push_back(cur);
            for (AgentId nb : believed_.neighbors(cur))
                if (nb != prev) {
                    prev = cur;
                    cur = nb;
                    break;
                }
        }
        if (ring_cw_.size() != believed_.size()) is_ring_ = false;
    } else {
        is_ring_ = false;
    }
}

bool WakeUpPhase::step(AgentCtx& ctx, std::vector<AgentCtx::Incoming>& inbox) {
    int r = ctx.round();
    if (r == 1) {
        for (std::uint32_t p = 0; p < ctx.num_ports(); ++p)
            ctx.send(p, Payload(Tag::Hello, {static_cast<std::int64_t>(ctx.self())}));
        return false;
    }
    if (r == 2) {
        std::set<AgentId> seen;
        for (auto it = inbox.begin(); it != inbox.end();) {
            if (it->payload.tag != Tag::Hello || it->payload.vals.size() != 1) {
                ++it;
                continue;
            }
            auto id = static_cast<AgentId>(it->payload.vals[0]);
            if (id == ctx.self() || port_ids_.count(it->port) || !seen.insert(id).second) {
                ctx.abort("wake-up: malformed id exchange");
                return false;
            }
            port_ids_[it->port] = id;
            it = inbox.erase(it);
        }
        if (port_ids_.size() != ctx.num_ports()) {
            ctx.abort("wake-up: missing id exchange on some edge");
            return false;
        }
        std::vector<AgentId> nbrs;
        for (const auto& [p, id] : port_ids_) nbrs.push_back(id);
        std::sort(nbrs.begin(), nbrs.end());
        records_[ctx.self()] = nbrs;
        Payload rec(Tag::Rec, {static_cast<std::int64_t>(ctx.self())});
        for (AgentId nb : nbrs) rec.vals.push_back(static_cast<std::int64_t>(nb));
        for (std::uint32_t p = 0; p < ctx.num_ports(); ++p) ctx.send(p, rec);
        return false;
    }
    // Round >= 3: absorb adjacency records (also tolerated as duplicates after
    // closure, since last-hop forwards may trail into the first phase round).
    std::vector<Payload> fresh;
    for (auto it = inbox.begin(); it != inbox.end();) {
        if (it->payload.tag != Tag::Rec || it->payload.vals.size() < 2) {
            ++it;
            continue;
        }
        auto id = static_cast<AgentId>(it->payload.vals[0]);
        std::vector<AgentId> nbrs;
        for (std::size_t i = 1; i < it->payload.vals.size(); ++i)
            nbrs.push_back(static_cast<AgentId>(it->payload.vals[i]));
        if (!std::is_sorted(nbrs.begin(), nbrs.end()) ||
            std::adjacent_find(nbrs.begin(), nbrs.end()) != nbrs.end()) {
            ctx.abort("wake-up: malformed adjacency record");
            return false;
        }
        auto known = records_.find(id);
        if (known != records_.end()) {
            if (known->second != nbrs) {
                ctx.abort("wake-up: conflicting adjacency reports");
                return false;
            }
        } else {
            if (closed_) {
                ctx.abort("wake-up: record for unknown agent after closure");
                return false;
            }
            records_[id] = nbrs;
            fresh.push_back(it->payload);
        }
        it = inbox.erase(it);
    }
    if (!closed_) try_close(ctx);
    // Forward newly learned records unless the flood horizon has been reached.
    if (!(closed_ && ctx.round() >= w_))
        for (const Payload& p : fresh)
            for (std::uint32_t port = 0; port < ctx.num_ports(); ++port) ctx.send(port, p);
    return closed_ && ctx.round() >= w_;
}

// ---------------------------------------------------------------------------
// Renaming

int RenamingPhase::length(const WakeUpPhase& wake) const {
    return wake.n_prime() * wake.w();  // n' subphases of D+2 rounds each
}

bool RenamingPhase::step(AgentCtx& ctx, std::vector<AgentCtx::Incoming>& inbox,
                         const WakeUpPhase& wake, int rel) {
    const int L = wake.w();  // subphase length = diameter + 2
    const int np = wake.n_prime();
    int i = (rel - 1) / L + 1;    // subphase index, 1-based
    int sub = (rel - 1) % L + 1;  // round within subphase
    std::vector<AgentId> order = wake.believed().nodes();
    std::sort(order.begin(), order.end(), std::greater<>());
    AgentId drawer = order[static_cast<std::size_t>(i - 1)];
    AgentId wit = witness_of(wake.believed(), drawer);
    bool participant = ctx.self() == drawer || ctx.self() == wit;

    std::vector<std::int64_t> x;
    std::set<std::int64_t> taken;
    for (const auto& [id, nm] : names_) taken.insert(nm);
    for (std::int64_t v = 1; v <= np; ++v)
        if (!taken.count(v)) x.push_back(v);

    if (sub == 1) {
        claims_.clear();
        forwarded_.clear();
        if (participant) {
            my_r_ = 1 + ctx.draw(static_cast<std::uint32_t>(x.size()));
            AgentId other = ctx.self() == drawer ? wit : drawer;
            ctx.send(wake.port_to(other),
                     Payload(Tag::DrawR, {static_cast<std::int64_t>(drawer), my_r_}));
        }
    }
    if (sub == 2 && participant) {
        AgentId other = ctx.self() == drawer ? wit : drawer;
        std::uint32_t want = wake.port_to(other);
        std::int64_t r_other = -1;
        for (auto it = inbox.begin(); it != inbox.end();) {
            if (it->payload.tag == Tag::DrawR) {
                if (it->port != want || it->payload.vals.size() != 2 ||
                    static_cast<AgentId>(it->payload.vals[0]) != drawer || r_other != -1) {
                    ctx.abort("renaming: malformed draw exchange");
                    return false;
                }
                r_other = it->payload.vals[1];
                it = inbox.erase(it);
            } else {
                ++it;
            }
        }
        if (r_other < 1 || r_other > static_cast<std::int64_t>(x.size())) {
            ctx.abort("renaming: draw contribution out of range");
            return false;
        }
        std::int64_t s = joint_draw_value(my_r_, r_other, x);
        claims_[ctx.self()] = s;
        Payload claim(Tag::NameClaim, {static_cast<std::int64_t>(drawer), s,
                                       static_cast<std::int64_t>(ctx.self())});
        for (std::uint32_t p = 0; p < ctx.num_ports(); ++p) ctx.send(p, claim);
        forwarded_.insert({ctx.self(), s});
    }
    // Claim flood: consume, cross-check, forward on first receipt.
    for (auto it = inbox.begin(); it != inbox.end();) {
        if (it->payload.tag != Tag::NameClaim) {
            ++it;
            continue;
        }
        if (it->payload.vals.size() != 3 ||
            static_cast<AgentId>(it->payload.vals[0]) != drawer) {
            ctx.abort("renaming: claim outside the current subphase");
            return false;
        }
        std::int64_t s = it->payload.vals[1];
        auto claimant = static_cast<AgentId>(it->payload.vals[2]);
        if (claimant != drawer && claimant != wit) {
            ctx.abort("renaming: claim from a non-participant");
            return false;
        }
        auto known = claims_.find(claimant);
        if (known != claims_.end()) {
            if (known->second != s) {
                ctx.abort("renaming: conflicting name claims");
                return false;
            }
        } else {
            claims_[claimant] = s;
        }
        if (!forwarded_.count({claimant, s}) && sub < L) {
            for (std::uint32_t p = 0; p < ctx.num_ports(); ++p) ctx.send(p, it->payload);
            forwarded_.insert({claimant, s});
        }
        it = inbox.erase(it);
    }
    if (sub == L) {
        auto ca = claims_.find(drawer);
        auto cw = claims_.find(wit);
        if (ca == claims_.end() || cw == claims_.end() || ca->second != cw->second) {
            ctx.abort("renaming: missing or mismatched witness claim");
            return false;
        }
        if (taken.count(ca->second)) {
            ctx.abort("renaming: name already taken");
            return false;
        }
        names_[drawer] = ca->second;
    }
    return rel == np * L;
}

// ---------------------------------------------------------------------------
// Leader draw

int LeaderDrawPhase::length(const WakeUpPhase& wake) const { return wake.w() - 1; }

bool LeaderDrawPhase::step(AgentCtx& ctx, std::vector<AgentCtx::Incoming>& inbox,
                           const WakeUpPhase& wake, int rel) {
    const int L = length(wake);
    const int np = wake.n_prime();
    if (rel == 1) {
        auto v = static_cast<std::int64_t>(ctx.draw(static_cast<std::uint32_t>(np)));
        values_[ctx.self()] = v;
        Payload p(Tag::LeadDraw, {static_cast<std::int64_t>(ctx.self()), v});
        for (std::uint32_t port = 0; port < ctx.num_ports(); ++port) ctx.send(port, p);
        forwarded_.insert(ctx.self());
    }
    for (auto it = inbox.begin(); it != inbox.end();) {
        if (it->payload.tag != Tag::LeadDraw) {
            ++it;
            continue;
        }
        if (it->payload.vals.size() != 2) {
            ctx.abort("leader draw: malformed value");
            return false;
        }
        auto subject = static_cast<AgentId>(it->payload.vals[0]);
        std::int64_t v = it->payload.vals[1];
        if (!wake.believed().has_node(subject) || v < 0 || v >= np) {
            ctx.abort("leader draw: value out of range");
            return false;
        }
        auto known = values_.find(subject);
        if (known != values_.end()) {
            if (known->second != v) {
                ctx.abort("leader draw: conflicting flooded values");
                return false;
            }
        } else {
            values_[subject] = v;
        }
        if (!forwarded_.count(subject) && rel < L) {
            for (std::uint32_t p = 0; p < ctx.num_ports(); ++p) ctx.send(p, it->payload);
            forwarded_.insert(subject);
        }
        it = inbox.erase(it);
    }
    if (rel == L) {
        if (values_.size() != static_cast<std::size_t>(np)) {
            ctx.abort("leader draw: missing contributions");
            return false;
        }
        done_ = true;
    }
    return done_;
}

std::int64_t LeaderDrawPhase::leader_name(const WakeUpPhase& wake) const {
    std::int64_t sum = 0;
    for (const auto& [id, v] : values_) sum += v;
    return sum % wake.n_prime() + 1;
}

RingDirection leader_direction(const Topology& ring, AgentId leader) {
    AgentId low = ring.neighbors(leader).front();
    return ring.ring_step(leader, RingDirection::Clockwise) == low ? RingDirection::Clockwise
                                                                   : RingDirection::CounterClockwise;
}

}  // namespace ratsim
