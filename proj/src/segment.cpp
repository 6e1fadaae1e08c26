#include "strata/segment.hpp"

#include <algorithm>
#include <stdexcept>

#include "strata/memory_model.hpp"

namespace strata {

namespace {

TypedVector make_typed_vector(DataType type, size_t size) {
  if (is_string_type(type)) return std::vector<std::string>(size);
  if (type == DataType::Float64) return std::vector<double>(size);
  return std::vector<int64_t>(size);
}

uint64_t typed_vector_bytes(const TypedVector& data) {
  return std::visit(
      [](const auto& vec) -> uint64_t {
        using T = typename std::decay_t<decltype(vec)>::value_type;
        if constexpr (std::is_same_v<T, std::string>) {
          uint64_t bytes = vec.size() * memory_model::kStringSlotBytes;
          for (const auto& s : vec) bytes += s.size();
          return bytes;
        } else {
          return vec.size() * sizeof(T);
        }
      },
      data);
}

}  // namespace

ValueSegment::ValueSegment(DataType type, uint32_t capacity, bool nullable)
    : type_(type),
      capacity_(capacity),
      nullable_(nullable),
      data_(make_typed_vector(type, capacity)) {
  if (nullable_) null_map_.assign(capacity_, 0);
}

bool ValueSegment::is_null(ChunkOffset offset) const {
  return nullable_ && null_map_[offset] != 0;
}

Value ValueSegment::value_at(ChunkOffset offset) const {
  if (is_null(offset)) return Value{};
  return std::visit([&](const auto& vec) { return Value{vec[offset]}; }, data_);
}

uint64_t ValueSegment::estimate_bytes() const {
  uint64_t bytes = memory_model::kSegmentOverheadBytes + typed_vector_bytes(data_);
  if (nullable_) bytes += uint64_t{capacity_} * memory_model::kNullMapSlotBytes;
  return bytes;
}

void ValueSegment::write(ChunkOffset offset, const Value& value) {
  if (offset >= capacity_) throw std::out_of_range("ValueSegment::write past capacity");
  if (strata::is_null(value)) {
    if (!nullable_) throw std::invalid_argument("NULL written to non-nullable column");
    null_map_[offset] = 1;
    return;
  }
  if (nullable_) null_map_[offset] = 0;
  std::visit(
      [&](auto& vec) {
        using T = typename std::decay_t<decltype(vec)>::value_type;
        const T* typed = std::get_if<T>(&value);
        if (!typed) throw std::invalid_argument("value type does not match column type");
        vec[offset] = *typed;
      },
      data_);
}

DictionarySegment::DictionarySegment(const ValueSegment& source, uint32_t row_count)
    : type_(source.data_type()), row_count_(row_count) {
  bool any_null = false;
  for (ChunkOffset row = 0; row < row_count_; ++row) {
    if (source.is_null(row)) {
      any_null = true;
      break;
    }
  }
  if (any_null) null_map_.assign(row_count_, 0);

  std::visit(
      [&](const auto& values) {
        using T = typename std::decay_t<decltype(values)>::value_type;

        std::vector<T> dictionary;
        dictionary.reserve(row_count_);
        for (ChunkOffset row = 0; row < row_count_; ++row) {
          if (source.is_null(row)) continue;
          dictionary.push_back(values[row]);
        }
        std::sort(dictionary.begin(), dictionary.end());
        dictionary.erase(std::unique(dictionary.begin(), dictionary.end()), dictionary.end());

        const auto id_of = [&](ChunkOffset row) -> uint32_t {
          if (source.is_null(row)) {
            null_map_[row] = 1;
            return 0;
          }
          const auto it = std::lower_bound(dictionary.begin(), dictionary.end(), values[row]);
          return static_cast<uint32_t>(it - dictionary.begin());
        };

        // Smallest id width that indexes every dictionary entry.
        if (dictionary.size() <= (1u << 8)) {
          std::vector<uint8_t> ids(row_count_);
          for (ChunkOffset row = 0; row < row_count_; ++row) {
            ids[row] = static_cast<uint8_t>(id_of(row));
          }
          ids_ = std::move(ids);
        } else if (dictionary.size() <= (1u << 16)) {
          std::vector<uint16_t> ids(row_count_);
          for (ChunkOffset row = 0; row < row_count_; ++row) {
            ids[row] = static_cast<uint16_t>(id_of(row));
          }
          ids_ = std::move(ids);
        } else {
          std::vector<uint32_t> ids(row_count_);
          for (ChunkOffset row = 0; row < row_count_; ++row) ids[row] = id_of(row);
          ids_ = std::move(ids);
        }
        dictionary_ = std::move(dictionary);
      },
      source.data());
}

bool DictionarySegment::is_null(ChunkOffset offset) const {
  return !null_map_.empty() && null_map_[offset] != 0;
}

uint32_t DictionarySegment::id_at(ChunkOffset offset) const {
  return std::visit([&](const auto& ids) { return static_cast<uint32_t>(ids[offset]); }, ids_);
}

Value DictionarySegment::value_at(ChunkOffset offset) const {
  if (is_null(offset)) return Value{};
  const uint32_t id = id_at(offset);
  return std::visit([&](const auto& dict) { return Value{dict[id]}; }, dictionary_);
}

uint8_t DictionarySegment::id_width() const {
  return std::visit(
      [](const auto& ids) -> uint8_t {
        using T = typename std::decay_t<decltype(ids)>::value_type;
        return sizeof(T) * 8;
      },
      ids_);
}

size_t DictionarySegment::dictionary_size() const {
  return std::visit([](const auto& dict) { return dict.size(); }, dictionary_);
}

uint64_t DictionarySegment::estimate_bytes() const {
  uint64_t bytes = memory_model::kSegmentOverheadBytes + typed_vector_bytes(dictionary_);
  bytes += uint64_t{row_count_} * (id_width() / 8);
  if (has_nulls()) bytes += uint64_t{row_count_} * memory_model::kNullMapSlotBytes;
  return bytes;
}

}  // namespace strata
