#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "strata/chunk.hpp"
#include "strata/table.hpp"

namespace strata {

// The qualifying rows of one chunk. Two representations exist:
//   - dense:  rows [0, dense_size) all qualify, no offset list is stored
//   - sparse: `offsets` lists the qualifying rows, strictly increasing
// Dense selections mean "this operator still works on the base chunk", which
// is what makes the first scan of a pipeline cheaper than later scans that
// walk an offset indirection. The chunk pointer pins the storage so physical
// cleanup cannot pull it out from under a running query.
struct ChunkSelection {
  ChunkId chunk_id{0};
  std::shared_ptr<Chunk> chunk;
  bool dense{false};
  uint32_t dense_size{0};
  std::vector<ChunkOffset> offsets;

  uint32_t row_count() const {
    return dense ? dense_size : static_cast<uint32_t>(offsets.size());
  }
};

// Qualifying rows across a table: at most one level of indirection into base
// chunks (the position-list analogue of reference segments).
struct RowSelection {
  Table* table{nullptr};
  std::vector<ChunkSelection> chunks;  // ascending chunk_id

  uint64_t row_count() const {
    uint64_t total = 0;
    for (const auto& chunk : chunks) total += chunk.row_count();
    return total;
  }

  uint32_t chunk_count() const { return static_cast<uint32_t>(chunks.size()); }

  // True when no selected chunk carries an offset indirection, i.e. every
  // operator input is still a contiguous prefix of a base chunk. Scans on
  // such input report on_reference_input=false and may binary-search sorted
  // chunks.
  bool all_dense() const {
    for (const auto& chunk : chunks) {
      if (!chunk.dense) return false;
    }
    return true;
  }
};

}  // namespace strata
