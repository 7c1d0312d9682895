#include "ratsim/parallel.hpp"

#include <omp.h>

#include <atomic>

namespace ratsim {

FlatCounts parallel_flat_counts(const ExecutionPlan& plan, std::size_t buckets,
                                const std::function<std::size_t(const ExecutionTrace&)>& bucket_of,
                                int jobs, std::uint64_t cap) {
    ExecutionPlan p = plan;
    p.record_messages = false;
    p.record_states = false;

    FlatCounts out;
    out.counts.assign(buckets, 0);
    std::uint64_t grow_index = 0;
    for (int pass = 0;; ++pass) {
        if (pass > 64) throw Error(ErrorCode::ExplosionCap, "flat shape did not stabilize");
        // Discover (or extend) the shape by replaying one run.
        {
            GrowSource grow(out.shape, grow_index);
            run_execution(p, grow);
        }
        out.total = 1;
        for (std::uint32_t dom : out.shape) {
            out.total *= dom;
            if (out.total > cap) throw Error(ErrorCode::ExplosionCap, "enumeration exceeds cap");
        }

        std::atomic<std::uint64_t> overflow_at{out.total};
        std::vector<std::uint64_t> counts(buckets, 0);
        bool failed = false;
        std::string fail_what;
#pragma omp parallel num_threads(jobs > 0 ? jobs : omp_get_max_threads())
        {
            std::vector<std::uint64_t> local(buckets, 0);
#pragma omp for schedule(static)
            for (std::int64_t i = 0; i < static_cast<std::int64_t>(out.total); ++i) {
                try {
                    FlatSource src(out.shape, static_cast<std::uint64_t>(i));
                    ExecutionTrace t = run_execution(p, src);
                    if (src.overflowed()) {
                        std::uint64_t expect = overflow_at.load();
                        while (static_cast<std::uint64_t>(i) < expect &&
                               !overflow_at.compare_exchange_weak(expect,
                                                                  static_cast<std::uint64_t>(i))) {
                        }
                    } else {
                        ++local[bucket_of(t)];
                    }
                } catch (const std::exception& e) {
#pragma omp critical
                    {
                        failed = true;
                        fail_what = e.what();
                    }
                }
            }
#pragma omp critical
            {
                for (std::size_t b = 0; b < buckets; ++b) counts[b] += local[b];
            }
        }
        if (failed) throw Error(ErrorCode::DomainError, fail_what);
        if (overflow_at.load() == out.total) {
            out.counts = std::move(counts);
            return out;
        }
        grow_index = overflow_at.load();  // extend the shape along that branch
    }
}

}  // namespace ratsim
