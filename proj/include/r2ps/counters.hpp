#pragma once

#include <atomic>
#include <cstdint>

namespace r2ps {

/// Encoder forward-pass counters, the assertable form of the frameworks'
/// asymptotic search costs. Increments are atomic so totals stay exact under
/// concurrent queries; counts only grow between resets.
struct ForwardCounters {
    std::atomic<std::uint64_t> dual_query{0};
    std::atomic<std::uint64_t> dual_code{0};
    std::atomic<std::uint64_t> cross{0};

    struct Snapshot {
        std::uint64_t dual_query = 0;
        std::uint64_t dual_code = 0;
        std::uint64_t cross = 0;

        Snapshot operator-(const Snapshot& o) const {
            return {dual_query - o.dual_query, dual_code - o.dual_code, cross - o.cross};
        }
        bool operator==(const Snapshot& o) const = default;
    };

    Snapshot snapshot() const { return {dual_query.load(), dual_code.load(), cross.load()}; }

    void reset() {
        dual_query.store(0);
        dual_code.store(0);
        cross.store(0);
    }

    void add(const Snapshot& s) {
        dual_query.fetch_add(s.dual_query);
        dual_code.fetch_add(s.dual_code);
        cross.fetch_add(s.cross);
    }
};

} // namespace r2ps
