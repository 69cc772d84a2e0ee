#pragma once

#include <atomic>
#include <cstdint>
#include <cstring>

namespace batchdb {

using ClusterId = uint32_t;
inline constexpr ClusterId kNoCluster = 0xFFFFFFFFu;

// Lock word layout: bit 63 = exclusive, low 32 bits = shared count.
inline constexpr uint64_t kLockExclusive = 1ULL << 63;

// Record = fixed-size payload co-located with concurrency metadata.
// Constructed by placement-new into table pages; the payload bytes live
// immediately after the struct. Records never move or die during a run.
//
// sched_word packs (batch_epoch << 32 | cluster_tag). The tag is only
// meaningful when the epoch half matches the current batch, so stale tags
// need no clearing between batches. Within one epoch a tag is write-once:
// preprocessing stamps (epoch, kNoCluster) on every written record, and the
// partitioner only ever CASes kNoCluster -> cluster.
class Record {
 public:
  explicit Record(uint32_t payload_size) : payload_size_(payload_size) {
    std::memset(payload(), 0, payload_size_);
  }

  Record(const Record&) = delete;
  Record& operator=(const Record&) = delete;

  uint8_t* payload() { return reinterpret_cast<uint8_t*>(this + 1); }
  const uint8_t* payload() const {
    return reinterpret_cast<const uint8_t*>(this + 1);
  }
  uint32_t payload_size() const { return payload_size_; }

  // --- scheduling metadata ---

  static uint64_t pack_sched(uint32_t epoch, ClusterId tag) {
    return (static_cast<uint64_t>(epoch) << 32) | tag;
  }

  void stamp_epoch(uint32_t epoch) {
    sched_word_.store(pack_sched(epoch, kNoCluster), std::memory_order_relaxed);
  }

  bool written_in(uint32_t epoch) const {
    return (sched_word_.load(std::memory_order_relaxed) >> 32) == epoch;
  }

  ClusterId cluster_tag(uint32_t epoch) const {
    uint64_t w = sched_word_.load(std::memory_order_acquire);
    if ((w >> 32) != epoch) return kNoCluster;
    return static_cast<ClusterId>(w);
  }

  // Tags an untagged record. Returns true on success or if someone already
  // installed the same tag; on failure *observed holds the competing tag.
  bool try_tag(uint32_t epoch, ClusterId tag, ClusterId* observed) {
    uint64_t expected = pack_sched(epoch, kNoCluster);
    uint64_t desired = pack_sched(epoch, tag);
    if (sched_word_.compare_exchange_strong(expected, desired,
                                            std::memory_order_acq_rel)) {
      return true;
    }
    ClusterId cur = static_cast<ClusterId>(expected);
    if ((expected >> 32) == epoch && cur == tag) return true;
    *observed = ((expected >> 32) == epoch) ? cur : kNoCluster;
    return false;
  }

  // --- lock word (2PL protocols and residual phase) ---

  bool try_lock_shared() {
    uint64_t w = lock_word_.load(std::memory_order_relaxed);
    for (;;) {
      if (w & kLockExclusive) return false;
      if (lock_word_.compare_exchange_weak(w, w + 1,
                                           std::memory_order_acquire,
                                           std::memory_order_relaxed)) {
        return true;
      }
    }
  }

  bool try_lock_exclusive() {
    uint64_t expected = 0;
    return lock_word_.compare_exchange_strong(expected, kLockExclusive,
                                              std::memory_order_acquire,
                                              std::memory_order_relaxed);
  }

  void unlock_shared() { lock_word_.fetch_sub(1, std::memory_order_release); }

  void unlock_exclusive() { lock_word_.store(0, std::memory_order_release); }

  bool lock_free_now() const {
    return lock_word_.load(std::memory_order_relaxed) == 0;
  }

  uint64_t lock_word_raw() const {
    return lock_word_.load(std::memory_order_relaxed);
  }

  // Min owner timestamp hint while held (WaitDie).
  std::atomic<uint64_t>& owner_ts() { return owner_ts_; }

 private:
  std::atomic<uint64_t> lock_word_{0};
  std::atomic<uint64_t> owner_ts_{0};
  // Epoch 0 is reserved for load; batches use epochs >= 1.
  std::atomic<uint64_t> sched_word_{pack_sched(0, kNoCluster)};
  uint32_t payload_size_;
};

}  // namespace batchdb
