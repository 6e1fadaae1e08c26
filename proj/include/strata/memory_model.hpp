#pragma once

#include <cstdint>

/// The single home of every constant feeding Table::estimate_memory().
///
/// The estimate covers segment payloads plus the fixed per-chunk and
/// per-segment overheads below. It deliberately excludes MVCC row metadata
/// and other bookkeeping: the estimate is the metric the memory benchmarks
/// sample, and it should move only when data storage moves.
///
/// Value segments charge their full pre-allocated capacity (a mutable chunk
/// reserves all slots up front); dictionary segments charge the dictionary
/// plus the id array exactly, with no slack.
namespace strata::memory_model {

/// Flat bookkeeping charge per chunk (headers, stats, constraint metadata).
inline constexpr uint64_t kChunkOverheadBytes = 64;

/// Flat bookkeeping charge per segment (vtable, size fields).
inline constexpr uint64_t kSegmentOverheadBytes = 48;

/// Per-slot charge for the fixed-width part of a stored string
/// (pointer/length header); actual character bytes are charged on top.
inline constexpr uint64_t kStringSlotBytes = 16;

/// Per-slot charge for the null marker of a nullable value segment, and per
/// row for a dictionary segment's null map when the segment contains nulls.
inline constexpr uint64_t kNullMapSlotBytes = 1;

}  // namespace strata::memory_model
