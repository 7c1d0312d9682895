#include "ratsim/problems.hpp"

#include <algorithm>

namespace ratsim {

const char* problem_kind_name(ProblemKind k) {
    switch (k) {
        case ProblemKind::KnowledgeSharing: return "KnowledgeSharing";
        case ProblemKind::TwoKnowledgeSharing: return "TwoKnowledgeSharing";
        case ProblemKind::Coloring: return "Coloring";
        case ProblemKind::LeaderElection: return "LeaderElection";
        case ProblemKind::RingPartition: return "RingPartition";
        case ProblemKind::Orientation: return "Orientation";
    }
    return "?";
}

std::int64_t q_sum_mod(const std::vector<std::int64_t>& inputs, int k) {
    std::int64_t s = 0;
    for (std::int64_t v : inputs) s = (s + v) % k;
    return (s % k + k) % k;
}

namespace {

bool ks_legal(int k, const Topology&, const OutputVector& o) {
    std::int64_t v = o.begin()->second->scalar();
    if (v < 0 || v >= k) return false;
    for (const auto& [a, out] : o)
        if (out->scalar() != v) return false;
    return true;
}

bool coloring_legal(const Topology& t, const OutputVector& o) {
    for (const auto& [a, out] : o)
        if (out->scalar() < 1) return false;
    for (const auto& [u, v] : t.edges())
        if (o.at(u)->scalar() == o.at(v)->scalar()) return false;
    return true;
}

bool leader_legal(const Topology&, const OutputVector& o) {
    std::size_t ones = 0;
    for (const auto& [a, out] : o) {
        std::int64_t v = out->scalar();
        if (v != 0 && v != 1) return false;
        ones += v == 1;
    }
    return ones == 1;
}

bool partition_legal(const Topology& t, const OutputVector& o) {
    std::size_t zeros = 0;
    for (const auto& [a, out] : o) {
        std::int64_t v = out->scalar();
        if (v != 0 && v != 1) return false;
        zeros += v == 0;
    }
    return 2 * zeros == t.size();
}

// Output value: flattened (neighbor id, directed-toward id) pairs.
bool orientation_legal(const std::map<AgentId, AgentId>& id_map, const Topology& t,
                       const OutputVector& o) {
    auto translate = [&id_map](AgentId a) {
        auto it = id_map.find(a);
        return it == id_map.end() ? a : it->second;
    };
    // toward[{u, v}] = the endpoint u claims the edge (u, v) points at.
    std::map<std::pair<AgentId, AgentId>, AgentId> toward;
    for (const auto& [a, out] : o) {
        if (out->vals.size() % 2 != 0) return false;
        for (std::size_t i = 0; i < out->vals.size(); i += 2) {
            AgentId nbr = translate(static_cast<AgentId>(out->vals[i]));
            AgentId dir = translate(static_cast<AgentId>(out->vals[i + 1]));
            if (toward.count({a, nbr})) return false;  // duplicate entry
            toward[{a, nbr}] = dir;
        }
    }
    for (const auto& [u, v] : t.edges()) {
        auto a = toward.find({u, v});
        auto b = toward.find({v, u});
        if (a == toward.end() || b == toward.end()) return false;
        if (a->second != b->second) return false;
        if (a->second != u && a->second != v) return false;
    }
    // Every listed entry must be a real edge.
    for (const auto& [key, dir] : toward)
        if (!t.has_edge(key.first, key.second)) return false;
    return true;
}

}  // namespace

ProblemSpec make_problem(ProblemKind kind, int k, std::map<AgentId, AgentId> id_map) {
    ProblemSpec p;
    p.name = problem_kind_name(kind);
    p.k = kind == ProblemKind::TwoKnowledgeSharing ? 2 : k;
    switch (kind) {
        case ProblemKind::KnowledgeSharing:
        case ProblemKind::TwoKnowledgeSharing: {
            int kk = p.k;
            p.legal = [kk](const Topology& t, const OutputVector& o) { return ks_legal(kk, t, o); };
            break;
        }
        case ProblemKind::Coloring:
            p.legal = coloring_legal;
            break;
        case ProblemKind::LeaderElection:
            p.legal = leader_legal;
            break;
        case ProblemKind::RingPartition:
            p.legal = partition_legal;
            break;
        case ProblemKind::Orientation:
            p.legal = [m = std::move(id_map)](const Topology& t, const OutputVector& o) {
                return orientation_legal(m, t, o);
            };
            break;
    }
    return p;
}

bool verify_full_knowledge(const std::function<std::int64_t(const std::vector<std::int64_t>&)>& q,
                           int field, int arity, int k) {
    if (k < 2) return false;  // degenerate range
    std::vector<std::int64_t> inputs(arity, 0);
    // For every coordinate j and every fixing of the other inputs, counts of
    // each q value over the free coordinate must be equal.
    for (int j = 0; j < arity; ++j) {
        std::vector<std::int64_t> rest(arity - 1, 0);
        while (true) {
            std::map<std::int64_t, std::int64_t> counts;
            for (int v = 0; v < field; ++v) {
                int idx = 0;
                for (int i = 0; i < arity; ++i) inputs[i] = i == j ? v : rest[idx++];
                std::int64_t y = q(inputs);
                if (y < 0 || y >= k) return false;
                ++counts[y];
            }
            if (counts.size() != static_cast<std::size_t>(k)) return false;
            for (const auto& [y, c] : counts)
                if (c != counts.begin()->second) return false;
            // Next fixing (mixed-radix increment).
            int i = 0;
            for (; i < arity - 1; ++i) {
                if (++rest[i] < field) break;
                rest[i] = 0;
            }
            if (i == arity - 1) break;
        }
    }
    return true;
}

}  // namespace ratsim
