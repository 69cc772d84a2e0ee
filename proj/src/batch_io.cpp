#include "batchdb/batch_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace batchdb {

void print_batch(std::ostream& os, const Batch& b) {
  for (const Transaction& t : b.txns) {
    os << "txn " << t.id;
    os << " R";
    for (const Access& a : t.accesses)
      if (a.mode == AccessMode::Read) os << ' ' << a.key.str();
    os << " W";
    for (const Access& a : t.accesses)
      if (a.mode == AccessMode::Write) os << ' ' << a.key.str();
    os << '\n';
  }
}

std::string batch_to_string(const Batch& b) {
  std::ostringstream ss;
  print_batch(ss, b);
  return ss.str();
}

namespace {

Key parse_key(const std::string& tok) {
  size_t colon = tok.find(':');
  if (colon == std::string::npos)
    throw std::runtime_error("malformed key token: " + tok);
  Key k;
  k.table = static_cast<uint32_t>(std::stoul(tok.substr(0, colon)));
  k.pk = std::stoull(tok.substr(colon + 1));
  return k;
}

}  // namespace

Batch parse_batch(std::istream& is, uint32_t epoch) {
  Batch b;
  b.epoch = epoch;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok != "txn") throw std::runtime_error("expected 'txn': " + line);
    Transaction t;
    ls >> t.id;
    AccessMode mode = AccessMode::Read;
    bool in_section = false;
    while (ls >> tok) {
      if (tok == "R") {
        mode = AccessMode::Read;
        in_section = true;
      } else if (tok == "W") {
        mode = AccessMode::Write;
        in_section = true;
      } else {
        if (!in_section)
          throw std::runtime_error("key before R/W marker: " + line);
        t.add_access(parse_key(tok), mode);
      }
    }
    b.txns.push_back(std::move(t));
  }
  return b;
}

Batch parse_batch_string(const std::string& text, uint32_t epoch) {
  std::istringstream ss(text);
  return parse_batch(ss, epoch);
}

}  // namespace batchdb
