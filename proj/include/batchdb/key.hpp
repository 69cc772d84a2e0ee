#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

#include "batchdb/util.hpp"

namespace batchdb {

// (table, pk) uniquely addresses a record. The total order below (table
// major, pk minor) is the global acquisition order used by LockOrdered.
struct Key {
  uint32_t table = 0;
  uint64_t pk = 0;

  auto operator<=>(const Key&) const = default;

  std::string str() const {
    return std::to_string(table) + ":" + std::to_string(pk);
  }
};

inline uint64_t key_hash(const Key& k) {
  return splitmix64(k.pk ^ (static_cast<uint64_t>(k.table) << 56));
}

struct KeyHash {
  size_t operator()(const Key& k) const {
    return static_cast<size_t>(key_hash(k));
  }
};

}  // namespace batchdb
