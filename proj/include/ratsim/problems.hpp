#pragma once
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ratsim/engine.hpp"

namespace ratsim {

enum class ProblemKind {
    KnowledgeSharing,
    TwoKnowledgeSharing,
    Coloring,
    LeaderElection,
    RingPartition,
    Orientation,
};

const char* problem_kind_name(ProblemKind k);

// Legality predicates over (original topology, outputs). When the execution ran
// under a duplication scheme, id_map translates virtual ids appearing inside
// output values (orientation lists) back to original ids.
ProblemSpec make_problem(ProblemKind kind, int k,
                         std::map<AgentId, AgentId> id_map = {});

// Shared global function q for knowledge sharing: sum mod k.
std::int64_t q_sum_mod(const std::vector<std::int64_t>& inputs, int k);

// Full Knowledge: for every coordinate and every fixing of the other inputs,
// every value in the range of q is equally possible. Checked by enumeration
// over F^m input vectors; q maps to [0, k).
bool verify_full_knowledge(const std::function<std::int64_t(const std::vector<std::int64_t>&)>& q,
                           int field, int arity, int k);

}  // namespace ratsim
