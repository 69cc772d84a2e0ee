#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "batchdb/key.hpp"
#include "batchdb/record.hpp"

namespace batchdb {

struct KeyNotFound : std::runtime_error {
  explicit KeyNotFound(const Key& k)
      : std::runtime_error("key not found: " + k.str()) {}
};

struct DuplicateKey : std::runtime_error {
  DuplicateKey(const std::string& table, uint64_t pk)
      : std::runtime_error("duplicate key in " + table + ": " +
                           std::to_string(pk)) {}
};

// A table is a collection of in-memory pages holding sequentially placed
// records, plus a hash index from primary key to record. The index is a
// black box with linearizable point operations: insert and find are safe
// under arbitrary interleaving (sharded maps, one spinlock per shard).
// Records are placement-new'd into pages and never move, so Record* stays
// valid for the process lifetime.
//
// seal() freezes the loaded keys into an immutable open-addressed view that
// reads probe without locking; keys inserted later are still found through
// the sharded maps. Loaders seal once bulk loading finishes.
class Table {
 public:
  Table(std::string name, uint32_t payload_size);
  ~Table();

  Table(const Table&) = delete;
  Table& operator=(const Table&) = delete;

  const std::string& name() const { return name_; }
  uint32_t payload_size() const { return payload_size_; }
  size_t size() const;

  // Load-time insert; thread-safe. Throws DuplicateKey.
  Record& insert(uint64_t pk);

  // Returns nullptr when absent.
  Record* find(uint64_t pk) const;

  // Builds the read-optimized view; no concurrent inserts may be running.
  void seal();

 private:
  struct Shard;
  struct FlatSlot {
    uint64_t pk;
    Record* rec;  // nullptr = empty slot
  };

  Record* allocate_record();
  Record* find_slow(uint64_t pk) const;

  static constexpr size_t kShardBits = 8;
  static constexpr size_t kShardCount = 1ULL << kShardBits;
  static constexpr size_t kPageBytes = 1ULL << 18;

  std::string name_;
  uint32_t payload_size_;
  size_t record_stride_;
  size_t records_per_page_;
  std::unique_ptr<Shard[]> shards_;

  std::atomic<bool> sealed_{false};
  uint64_t flat_mask_ = 0;
  std::vector<FlatSlot> flat_;

  mutable std::mutex page_mu_;
  std::vector<std::unique_ptr<uint8_t[]>> pages_;
  size_t page_fill_ = 0;  // records placed in the last page
};

}  // namespace batchdb
