#pragma once

// Payload attached to summary classes: what is recorded about the vertices a
// class summarizes, beyond the class itself.

#include <cstdint>
#include <map>
#include <string>

#include "fluidsum/graph.hpp"

namespace fluidsum {

enum class PayloadKind : uint8_t {
  count,       // number of summarized vertices
  source_set,  // named graphs the summarized vertices belong to
  vertex_set,  // the summarized vertex terms themselves
};

const char* payload_kind_name(PayloadKind k);
PayloadKind payload_kind_from_name(const std::string& s);

// One class's payload. Items carry multiplicities internally so that the
// contribution of a single vertex can be subtracted exactly when it moves to
// another class; exports collapse to set semantics.
struct PayloadElement {
  PayloadKind kind = PayloadKind::count;
  uint64_t count = 0;
  std::map<std::string, uint64_t> items;

  bool empty() const { return count == 0 && items.empty(); }

  // Both throw IntegrityError on kind mismatch; unmerge additionally throws
  // when asked to remove more than is present (count or any multiplicity).
  void merge(const PayloadElement& other);
  void unmerge(const PayloadElement& other);

  // Deterministic byte form (set semantics: multiplicities are not encoded,
  // so payloads assembled in different merge orders or split differently
  // across workers compare equal once they describe the same vertices).
  std::string canonical_bytes() const;

  // Exact byte form including multiplicities; round-trips the full state so
  // later unmerges still balance. Used by the persistent containers.
  std::string store_bytes() const;
  static PayloadElement from_store_bytes(std::string_view bytes);

  // {"kind": .., "count": .., "items": [..]} with items as a sorted array.
  std::string to_json() const;
  static PayloadElement from_json(const std::string& text);

  bool operator==(const PayloadElement& other) const {
    return canonical_bytes() == other.canonical_bytes();
  }
};

// The payload contribution of one vertex: count 1, plus the vertex term or
// its member graph names depending on kind. Vertices outside any named graph
// contribute an empty source set.
PayloadElement vertex_payload(PayloadKind kind, const GraphDatabase& g, Symbol v);

}  // namespace fluidsum
