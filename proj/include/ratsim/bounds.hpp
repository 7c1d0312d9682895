#pragma once
#include <string>
#include <utility>

#include "ratsim/problems.hpp"
#include "ratsim/rational.hpp"

namespace ratsim {

// Common knowledge that the network size n lies in [alpha, beta], uniformly.
struct KnowledgeBound {
    int alpha = 3;
    int beta = 3;
};

void validate_bound(const KnowledgeBound& b);

// Success probability of a d-duplication under the uniform prior on n:
// P[d + n - 1 <= beta] = (beta - d + 2 - alpha) / (beta - alpha + 1), clamped.
Rat duplication_success_probability(const KnowledgeBound& b, int d);

// Closed form for the cheater's expected utility at round 0 when duplicating
// into d agents in knowledge sharing, with payoff X on an oversized success:
//   X * (d - alpha) / (beta - alpha + 1) + (1/k) * (ceil(beta/2) - d + 1) / (beta - alpha + 1)
// Preconditions: alpha <= d <= ceil(beta/2) + 1, k >= 2, 1/k < X <= 1.
Rat ks_dup_expected_utility(const KnowledgeBound& b, int d, int k, const Rat& X);

// Independent oracle: sweep every n in [alpha, beta] and apply the per-case
// payoff (X when n <= d-1; 1/k when n <= ceil(beta/2); else 0), averaged.
Rat ks_dup_payoff_sweep(const KnowledgeBound& b, int d, int k, const Rat& X);

// Maximizing duplication count over the feasible grid alpha..floor(beta/2)+1.
// d_star = 0 when the grid is empty (no duplication can pay off); the payoff
// is then the honest 1/k.
std::pair<int, Rat> ks_optimal_duplication(const KnowledgeBound& b, int k, const Rat& X);

// True iff the optimal duplication strictly beats the honest 1/k.
bool ks_incentive(const KnowledgeBound& b, int k, const Rat& X);

// Expected utility of a single duplication (d=2) in leader election:
// P[d + n - 1 <= beta] * 2 / (n + 1).
Rat leader_dup_expected_utility(const KnowledgeBound& b, int n, int d = 2);

// Deviation condition: dup_eu * P_D > honest_eu, strictly.
bool duplication_decision(const Rat& honest_eu, const Rat& dup_eu, const Rat& P_D);

// Per-problem knowledge-bound classification.
struct BoundClass {
    enum Kind { ExactFunction, InfinityBound, Unbounded } kind = Unbounded;
    std::string formula;               // e.g. "alpha+1" when kind == ExactFunction
    long long a_coef = 0, c = 0;       // f(alpha) = a_coef * alpha + c
    long long f(long long alpha) const;  // ExactFunction only
};

BoundClass classify_bound(ProblemKind p);

// Rendering for the bounds-table subcommand. Includes the raw incentive grid
// and a note where the incentive predicate flips at beta = 2*alpha while the
// classification row says 2*alpha - 2 (the source analysis is inconsistent
// there; we follow the stated bound and expose the predicate separately).
std::string bounds_table_markdown(int alpha_max, int beta_max, const std::vector<int>& ks,
                                  const std::vector<Rat>& xs);
std::string bounds_table_csv(int alpha_max, int beta_max, const std::vector<int>& ks,
                             const std::vector<Rat>& xs);

}  // namespace ratsim
