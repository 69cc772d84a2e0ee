#pragma once

#include <iosfwd>
#include <string>

#include "batchdb/txn.hpp"

namespace batchdb {

// Line-oriented batch text format for replay/debugging, one transaction per
// line: `txn <id> R <table>:<pk>... W <table>:<pk>...`. Either section may
// be empty. Round-trips bit-exactly: parse(print(b)) prints the same text.
void print_batch(std::ostream& os, const Batch& b);
std::string batch_to_string(const Batch& b);
Batch parse_batch(std::istream& is, uint32_t epoch = 1);
Batch parse_batch_string(const std::string& text, uint32_t epoch = 1);

}  // namespace batchdb
