#pragma once
#include <functional>

#include "ratsim/engine.hpp"

namespace ratsim {

// Flat mixed-radix enumeration of the joint randomness space, suitable for
// protocols whose draw schedule does not depend on drawn values (checked at
// runtime via DomainError). Buckets are aggregated with integer counters, so
// results are exact: each bucket's probability is counts[i] / total.
struct FlatCounts {
    std::vector<std::uint32_t> shape;  // domains in draw order
    std::uint64_t total = 1;           // product of shape
    std::vector<std::uint64_t> counts;
};

// OpenMP-parallel counterpart of enumerate_executions; `jobs` <= 0 uses the
// OpenMP default. The serial odometer enumeration is the reference oracle.
FlatCounts parallel_flat_counts(const ExecutionPlan& plan, std::size_t buckets,
                                const std::function<std::size_t(const ExecutionTrace&)>& bucket_of,
                                int jobs = 0, std::uint64_t cap = 10'000'000);

}  // namespace ratsim
