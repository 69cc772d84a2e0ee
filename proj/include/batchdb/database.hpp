#pragma once

#include <cstring>
#include <memory>
#include <span>
#include <vector>

#include "batchdb/table.hpp"

namespace batchdb {

// In-memory database: tables addressed by dense table id, records by Key.
// Point get/put only; the workloads generate existing keys exclusively, so
// a missing key is a hard error.
class Database {
 public:
  explicit Database(uint32_t payload_size = 128)
      : payload_size_(payload_size) {}

  uint32_t payload_size() const { return payload_size_; }

  uint32_t add_table(const std::string& name) {
    tables_.push_back(std::make_unique<Table>(name, payload_size_));
    return static_cast<uint32_t>(tables_.size() - 1);
  }

  Table& table(uint32_t id) { return *tables_.at(id); }

  // Freezes all indexes into their read-optimized form; loaders call this
  // once bulk loading is done.
  void seal_all() {
    for (auto& t : tables_) t->seal();
  }

  const Table& table(uint32_t id) const { return *tables_.at(id); }
  size_t table_count() const { return tables_.size(); }

  Record& get(const Key& k) const {
    Record* r = tables_.at(k.table)->find(k.pk);
    if (r == nullptr) throw KeyNotFound(k);
    return *r;
  }

  Record* find(const Key& k) const {
    if (k.table >= tables_.size()) return nullptr;
    return tables_[k.table]->find(k.pk);
  }

  // Caller holds whatever protection the active protocol requires.
  void put(const Key& k, std::span<const uint8_t> payload) {
    Record& r = get(k);
    std::memcpy(r.payload(), payload.data(),
                std::min<size_t>(payload.size(), r.payload_size()));
  }

 private:
  uint32_t payload_size_;
  std::vector<std::unique_ptr<Table>> tables_;
};

}  // namespace batchdb
