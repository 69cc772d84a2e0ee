#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

#include "batchdb/key.hpp"

namespace batchdb {

enum class AccessMode : uint8_t { Read, Write };

struct Access {
  Key key;
  AccessMode mode;
};

enum class TxnStatus : uint8_t { Committed, CCAborted, LogicalAborted };

// A transaction is its declared access set plus a deterministic
// read-modify-write program over exactly those keys. The access list is
// duplicate-free on Key; a key both read and written is recorded once as
// Write. The program folds every value it reads into a running accumulator
// and writes order-sensitive digests, so lost updates or non-serializable
// interleavings diverge from any serial replay with high probability.
struct Transaction {
  uint64_t id = 0;
  std::vector<Access> accesses;
  // Logical abort predicate: aborts after executing this many accesses
  // (-1 = commits). Evaluated mid-program; buffered writes are discarded.
  int32_t abort_after = -1;

  // Deduplicating append; Write wins over Read for the same key.
  void add_access(const Key& k, AccessMode m) {
    for (auto& a : accesses) {
      if (a.key == k) {
        if (m == AccessMode::Write) a.mode = AccessMode::Write;
        return;
      }
    }
    accesses.push_back(Access{k, m});
  }

  bool writes_anything() const {
    for (const auto& a : accesses)
      if (a.mode == AccessMode::Write) return true;
    return false;
  }
};

struct Batch {
  uint32_t epoch = 1;  // 0 is reserved for load
  std::vector<Transaction> txns;

  size_t size() const { return txns.size(); }
};

inline uint64_t load_u64le(const uint8_t* p) {
  uint64_t v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline void store_u64le(uint8_t* p, uint64_t v) {
  std::memcpy(p, &v, sizeof(v));
}

// Payloads carry the program digest in bytes [0,8) and the last writer's
// txn id in [8,16); payload size must be >= 16.
inline constexpr uint32_t kMinPayload = 16;

// Runs a transaction's program against a key-value context. Ctx provides
//   const uint8_t* read(size_t i, const Key&)   -> committed bytes,
//                                                  null = cc-abort
//   uint8_t*       write(size_t i, const Key&)  -> staged buffer preloaded
//                                                  with the current bytes,
//                                                  null = cc-abort
// where i is the ordinal of the access in the declared list (contexts that
// pre-resolved the records index by it; others ignore it). Writes must not
// become visible until the caller applies them; on any non-committed
// return the caller discards the stage.
template <typename Ctx>
TxnStatus run_program(const Transaction& t, Ctx& ctx) {
  uint64_t acc = splitmix64(t.id);
  int32_t idx = 0;
  for (const Access& a : t.accesses) {
    if (t.abort_after == idx) return TxnStatus::LogicalAborted;
    if (a.mode == AccessMode::Read) {
      const uint8_t* p = ctx.read(idx, a.key);
      if (p == nullptr) return TxnStatus::CCAborted;
      acc = mix64(acc, load_u64le(p));
    } else {
      uint8_t* p = ctx.write(idx, a.key);
      if (p == nullptr) return TxnStatus::CCAborted;
      acc = mix64(acc, load_u64le(p));
      store_u64le(p, mix64(acc, key_hash(a.key)));
      store_u64le(p + 8, t.id);
      acc = mix64(acc, load_u64le(p));
    }
    ++idx;
  }
  if (t.abort_after == idx) return TxnStatus::LogicalAborted;
  return TxnStatus::Committed;
}

}  // namespace batchdb
