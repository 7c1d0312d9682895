#include "ratsim/topology.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <sstream>

namespace ratsim {

namespace {

std::pair<AgentId, AgentId> norm_edge(AgentId a, AgentId b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

Topology::Topology(std::vector<AgentId> nodes, std::vector<std::pair<AgentId, AgentId>> edges,
                   std::optional<std::vector<AgentId>> layout)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), layout_(std::move(layout)) {
    for (auto& e : edges_) e = norm_edge(e.first, e.second);
    std::sort(nodes_.begin(), nodes_.end());
    std::sort(edges_.begin(), edges_.end());
    validate();
}

void Topology::validate() const {
    for (std::size_t i = 1; i < nodes_.size(); ++i)
        if (nodes_[i] == nodes_[i - 1]) throw Error(ErrorCode::DuplicateId, "duplicate node id");
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        if (edges_[i].first == edges_[i].second)
            throw Error(ErrorCode::Precondition, "self-loop");
        if (i > 0 && edges_[i] == edges_[i - 1])
            throw Error(ErrorCode::Precondition, "duplicate edge");
        if (!has_node(edges_[i].first) || !has_node(edges_[i].second))
            throw Error(ErrorCode::Precondition, "edge endpoint not a node");
    }
    if (layout_) {
        if (layout_->size() != nodes_.size() || layout_->size() < 3)
            throw Error(ErrorCode::SizeTooSmall, "ring layout needs >= 3 nodes covering all nodes");
        std::set<std::pair<AgentId, AgentId>> ring_edges;
        for (std::size_t i = 0; i < layout_->size(); ++i) {
            AgentId a = (*layout_)[i];
            AgentId b = (*layout_)[(i + 1) % layout_->size()];
            if (!has_node(a)) throw Error(ErrorCode::Precondition, "layout node unknown");
            ring_edges.insert(norm_edge(a, b));
        }
        std::set<std::pair<AgentId, AgentId>> es(edges_.begin(), edges_.end());
        if (es != ring_edges)
            throw Error(ErrorCode::Precondition, "layout edges must be exactly consecutive ring pairs");
    }
}

bool Topology::has_node(AgentId a) const {
    return std::binary_search(nodes_.begin(), nodes_.end(), a);
}

bool Topology::has_edge(AgentId a, AgentId b) const {
    return std::binary_search(edges_.begin(), edges_.end(), norm_edge(a, b));
}

std::vector<AgentId> Topology::neighbors(AgentId a) const {
    std::vector<AgentId> out;
    for (const auto& e : edges_) {
        if (e.first == a) out.push_back(e.second);
        else if (e.second == a) out.push_back(e.first);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t Topology::ring_position(AgentId a) const {
    if (!layout_) throw Error(ErrorCode::NoLayout, "topology has no ring layout");
    for (std::size_t i = 0; i < layout_->size(); ++i)
        if ((*layout_)[i] == a) return i;
    throw Error(ErrorCode::Precondition, "agent not in layout");
}

AgentId Topology::ring_at(std::size_t pos) const {
    if (!layout_) throw Error(ErrorCode::NoLayout, "topology has no ring layout");
    return (*layout_)[pos % layout_->size()];
}

AgentId Topology::ring_step(AgentId a, RingDirection dir, std::size_t hops) const {
    std::size_t n = layout_->size();
    std::size_t p = ring_position(a);
    std::size_t q = dir == RingDirection::Clockwise ? (p + hops) % n : (p + n - hops % n) % n;
    return (*layout_)[q];
}

std::size_t Topology::ring_distance(AgentId a, AgentId b, RingDirection dir) const {
    if (!layout_) throw Error(ErrorCode::NoLayout, "topology has no ring layout");
    std::size_t n = layout_->size();
    std::size_t pa = ring_position(a), pb = ring_position(b);
    std::size_t cw = (pb + n - pa) % n;
    return dir == RingDirection::Clockwise ? cw : (n - cw) % n;
}

bool Topology::connected() const {
    if (nodes_.empty()) return true;
    std::set<AgentId> seen{nodes_[0]};
    std::queue<AgentId> q;
    q.push(nodes_[0]);
    while (!q.empty()) {
        AgentId a = q.front();
        q.pop();
        for (AgentId b : neighbors(a))
            if (seen.insert(b).second) q.push(b);
    }
    return seen.size() == nodes_.size();
}

std::size_t Topology::diameter() const {
    std::size_t best = 0;
    for (AgentId s : nodes_) {
        std::map<AgentId, std::size_t> dist{{s, 0}};
        std::queue<AgentId> q;
        q.push(s);
        while (!q.empty()) {
            AgentId a = q.front();
            q.pop();
            for (AgentId b : neighbors(a))
                if (!dist.count(b)) {
                    dist[b] = dist[a] + 1;
                    best = std::max(best, dist[b]);
                    q.push(b);
                }
        }
        if (dist.size() != nodes_.size()) throw Error(ErrorCode::Precondition, "graph not connected");
    }
    return best;
}

std::string Topology::serialize() const {
    std::ostringstream os;
    os << "nodes:";
    for (AgentId a : nodes_) os << " " << a;
    os << "\nedges:";
    for (const auto& e : edges_) os << " " << e.first << "-" << e.second;
    os << "\n";
    if (layout_) {
        os << "layout:";
        for (AgentId a : *layout_) os << " " << a;
        os << "\n";
    }
    return os.str();
}

Topology Topology::deserialize(const std::string& text) {
    std::vector<AgentId> nodes;
    std::vector<std::pair<AgentId, AgentId>> edges;
    std::optional<std::vector<AgentId>> layout;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "nodes:") {
            AgentId a;
            while (ls >> a) nodes.push_back(a);
        } else if (key == "edges:") {
            std::string tok;
            while (ls >> tok) {
                auto dash = tok.find('-');
                if (dash == std::string::npos) throw Error(ErrorCode::ConfigError, "bad edge token");
                edges.emplace_back(std::stoull(tok.substr(0, dash)), std::stoull(tok.substr(dash + 1)));
            }
        } else if (key == "layout:") {
            layout.emplace();
            AgentId a;
            while (ls >> a) layout->push_back(a);
        } else if (!key.empty()) {
            throw Error(ErrorCode::ConfigError, "unknown topology line: " + key);
        }
    }
    return Topology(std::move(nodes), std::move(edges), std::move(layout));
}

DuplicationScheme DuplicationScheme::honest_shape(AgentId cheater, AgentId fresh_id) {
    DuplicationScheme s;
    s.cheater = cheater;
    s.virtual_ids = {fresh_id};
    return s;
}

DuplicationScheme DuplicationScheme::ring_segment(const Topology& ring, AgentId cheater,
                                                  std::vector<AgentId> virtual_ids) {
    DuplicationScheme s;
    s.cheater = cheater;
    s.virtual_ids = std::move(virtual_ids);
    // Front of the segment takes the counter-clockwise neighbor's edge.
    AgentId ccw = ring.ring_step(cheater, RingDirection::CounterClockwise);
    for (AgentId nbr : ring.neighbors(cheater)) s.wiring.push_back(nbr == ccw);
    return s;
}

Topology build_ring(std::size_t n, const std::vector<AgentId>& ids) {
    if (n < 3) throw Error(ErrorCode::SizeTooSmall, "ring requires n >= 3");
    if (ids.size() != n) throw Error(ErrorCode::Precondition, "|ids| must equal n");
    std::vector<std::pair<AgentId, AgentId>> edges;
    for (std::size_t i = 0; i < n; ++i) edges.emplace_back(ids[i], ids[(i + 1) % n]);
    return Topology(ids, std::move(edges), ids);
}

bool check_two_vertex_connected(const Topology& t) {
    if (t.size() < 3) return false;
    if (!t.connected()) return false;
    for (AgentId removed : t.nodes()) {
        std::vector<AgentId> rest;
        for (AgentId a : t.nodes())
            if (a != removed) rest.push_back(a);
        std::set<AgentId> seen{rest[0]};
        std::queue<AgentId> q;
        q.push(rest[0]);
        while (!q.empty()) {
            AgentId a = q.front();
            q.pop();
            for (AgentId b : t.neighbors(a))
                if (b != removed && seen.insert(b).second) q.push(b);
        }
        if (seen.size() != rest.size()) return false;
    }
    return true;
}

Topology apply_duplication(const Topology& t, const DuplicationScheme& s) {
    if (!t.has_node(s.cheater)) throw Error(ErrorCode::Precondition, "cheater not in topology");
    if (s.virtual_ids.empty()) throw Error(ErrorCode::Precondition, "d >= 1 required");
    for (AgentId v : s.virtual_ids)
        if (t.has_node(v) && v != s.cheater)
            throw Error(ErrorCode::DuplicateId, "virtual id collides with node");
    std::vector<AgentId> cheater_nbrs = t.neighbors(s.cheater);
    if (s.d() > 1 && s.wiring.size() != cheater_nbrs.size())
        throw Error(ErrorCode::InvalidWiring, "wiring must cover all cheater edges");

    std::vector<AgentId> nodes;
    for (AgentId a : t.nodes())
        if (a != s.cheater) nodes.push_back(a);
    nodes.insert(nodes.end(), s.virtual_ids.begin(), s.virtual_ids.end());

    std::vector<std::pair<AgentId, AgentId>> edges;
    for (const auto& e : t.edges())
        if (e.first != s.cheater && e.second != s.cheater) edges.push_back(e);
    AgentId front = s.virtual_ids.front();
    AgentId back = s.virtual_ids.back();
    for (std::size_t i = 0; i < cheater_nbrs.size(); ++i) {
        AgentId end = (s.d() == 1 || s.wiring[i]) ? front : back;
        edges.emplace_back(end, cheater_nbrs[i]);
    }
    // Internal segment wiring is a simple path.
    for (std::size_t i = 0; i + 1 < s.virtual_ids.size(); ++i)
        edges.emplace_back(s.virtual_ids[i], s.virtual_ids[i + 1]);

    std::optional<std::vector<AgentId>> layout;
    if (t.layout()) {
        layout.emplace();
        for (AgentId a : *t.layout()) {
            if (a == s.cheater) {
                // Segment front faces the counter-clockwise neighbor, so the
                // clockwise scan meets front..back in order.
                layout->insert(layout->end(), s.virtual_ids.begin(), s.virtual_ids.end());
            } else {
                layout->push_back(a);
            }
        }
    }
    return Topology(std::move(nodes), std::move(edges), std::move(layout));
}

std::size_t ring_distance(const Topology& t, AgentId a, AgentId b, RingDirection dir) {
    return t.ring_distance(a, b, dir);
}

}  // namespace ratsim
