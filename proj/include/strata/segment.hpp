#pragma once

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "strata/types.hpp"

namespace strata {

/// Typed backing store shared by both segment kinds: exactly one vector is
/// active, selected by the column's physical representation.
using TypedVector =
    std::variant<std::vector<int64_t>, std::vector<double>, std::vector<std::string>>;

/// A segment is the portion of one column inside one chunk.
class Segment {
 public:
  virtual ~Segment() = default;

  virtual DataType data_type() const = 0;
  virtual bool is_encoded() const = 0;

  /// NULL check for a row slot; valid for offsets below the chunk's row count.
  virtual bool is_null(ChunkOffset offset) const = 0;

  /// Decodes the value at a row slot (NULL as monostate).
  virtual Value value_at(ChunkOffset offset) const = 0;

  /// Byte estimate per the documented model in memory_model.hpp.
  virtual uint64_t estimate_bytes() const = 0;
};

/// Unencoded segment with all row slots pre-allocated to the chunk capacity.
/// Slots at or above the chunk's published row count are uninitialized from a
/// reader's point of view and must not be accessed.
class ValueSegment : public Segment {
 public:
  ValueSegment(DataType type, uint32_t capacity, bool nullable);

  DataType data_type() const override { return type_; }
  bool is_encoded() const override { return false; }
  bool is_null(ChunkOffset offset) const override;
  Value value_at(ChunkOffset offset) const override;
  uint64_t estimate_bytes() const override;

  uint32_t capacity() const { return capacity_; }
  bool nullable() const { return nullable_; }

  /// Writes a value into a reserved slot. NULL requires a nullable column.
  void write(ChunkOffset offset, const Value& value);

  const TypedVector& data() const { return data_; }

 private:
  DataType type_;
  uint32_t capacity_;
  bool nullable_;
  TypedVector data_;
  std::vector<uint8_t> null_map_;  // sized to capacity when nullable
};

/// Dictionary-encoded segment: sorted unique dictionary plus per-row value
/// ids in the smallest integer width that can index every dictionary entry.
class DictionarySegment : public Segment {
 public:
  /// Value-id arrays, by width tier.
  using IdVector =
      std::variant<std::vector<uint8_t>, std::vector<uint16_t>, std::vector<uint32_t>>;

  /// Encodes the first `row_count` rows of a value segment.
  DictionarySegment(const ValueSegment& source, uint32_t row_count);

  DataType data_type() const override { return type_; }
  bool is_encoded() const override { return true; }
  bool is_null(ChunkOffset offset) const override;
  Value value_at(ChunkOffset offset) const override;
  uint64_t estimate_bytes() const override;

  uint32_t size() const { return row_count_; }
  uint8_t id_width() const;  // 8, 16, or 32
  size_t dictionary_size() const;

  const TypedVector& dictionary() const { return dictionary_; }
  const IdVector& ids() const { return ids_; }
  bool has_nulls() const { return !null_map_.empty(); }

  /// Dictionary position of the row's value; meaningless for null rows.
  uint32_t id_at(ChunkOffset offset) const;

 private:
  DataType type_;
  uint32_t row_count_;
  TypedVector dictionary_;
  IdVector ids_;
  std::vector<uint8_t> null_map_;  // empty when the segment holds no nulls
};

}  // namespace strata
