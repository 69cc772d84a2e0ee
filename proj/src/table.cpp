#include "batchdb/table.hpp"

#include <atomic>
#include <new>

namespace batchdb {

namespace {

class Spinlock {
 public:
  void lock() {
    while (flag_.test_and_set(std::memory_order_acquire)) cpu_pause();
  }
  void unlock() { flag_.clear(std::memory_order_release); }

 private:
  std::atomic_flag flag_ = ATOMIC_FLAG_INIT;
};

constexpr size_t align_up(size_t v, size_t a) { return (v + a - 1) & ~(a - 1); }

}  // namespace

struct Table::Shard {
  Spinlock mu;
  std::unordered_map<uint64_t, Record*> map;
};

Table::Table(std::string name, uint32_t payload_size)
    : name_(std::move(name)),
      payload_size_(payload_size),
      record_stride_(align_up(sizeof(Record) + payload_size, 64)),
      records_per_page_(kPageBytes / record_stride_),
      shards_(new Shard[kShardCount]) {
  if (records_per_page_ == 0) records_per_page_ = 1;
}

Table::~Table() = default;

size_t Table::size() const {
  size_t n = 0;
  for (size_t s = 0; s < kShardCount; ++s) {
    std::lock_guard lk(shards_[s].mu);
    n += shards_[s].map.size();
  }
  return n;
}

Record* Table::allocate_record() {
  std::lock_guard lk(page_mu_);
  if (pages_.empty() || page_fill_ == records_per_page_) {
    size_t bytes = records_per_page_ * record_stride_;
    if (bytes < record_stride_) bytes = record_stride_;
    pages_.emplace_back(new uint8_t[bytes]);
    page_fill_ = 0;
  }
  uint8_t* slot = pages_.back().get() + page_fill_ * record_stride_;
  ++page_fill_;
  return new (slot) Record(payload_size_);
}

Record& Table::insert(uint64_t pk) {
  Shard& sh = shards_[splitmix64(pk) & (kShardCount - 1)];
  Record* rec = allocate_record();
  std::lock_guard lk(sh.mu);
  auto [it, fresh] = sh.map.emplace(pk, rec);
  if (!fresh) throw DuplicateKey(name_, pk);
  return *rec;
}

Record* Table::find_slow(uint64_t pk) const {
  Shard& sh = shards_[splitmix64(pk) & (kShardCount - 1)];
  std::lock_guard lk(sh.mu);
  auto it = sh.map.find(pk);
  return it == sh.map.end() ? nullptr : it->second;
}

Record* Table::find(uint64_t pk) const {
  if (sealed_.load(std::memory_order_acquire)) {
    uint64_t h = splitmix64(pk) & flat_mask_;
    while (flat_[h].rec != nullptr) {
      if (flat_[h].pk == pk) return flat_[h].rec;
      h = (h + 1) & flat_mask_;
    }
    // Sealed view misses keys inserted after seal(); fall through.
  }
  return find_slow(pk);
}

void Table::seal() {
  size_t n = size();
  size_t cap = 16;
  while (cap < 2 * n) cap <<= 1;
  flat_.assign(cap, FlatSlot{0, nullptr});
  flat_mask_ = cap - 1;
  for (size_t s = 0; s < kShardCount; ++s) {
    std::lock_guard lk(shards_[s].mu);
    for (const auto& [pk, rec] : shards_[s].map) {
      uint64_t h = splitmix64(pk) & flat_mask_;
      while (flat_[h].rec != nullptr) h = (h + 1) & flat_mask_;
      flat_[h] = FlatSlot{pk, rec};
    }
  }
  sealed_.store(true, std::memory_order_release);
}

}  // namespace batchdb
