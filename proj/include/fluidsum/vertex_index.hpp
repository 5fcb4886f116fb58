#pragma once

// Index connecting graph vertices to the summary classes they were last
// filed under. Three logical layers:
//
//   1. summary hash -> linked vertices   (who is in this class?)
//   2. vertex       -> summary hash      (where was this vertex filed?)
//   3. vertex       -> payload contribution as merged into that class
//
// Layers 2 and 3 always change together and share one map. The index is what
// makes updates cheap: an unchanged vertex is recognized by comparing its
// recomputed hash and contribution against layers 2/3 without touching the
// store, and layer 1 answers whether a class lost its last member.
//
// Thread safety: one shared_mutex per direction (layer 1, layers 2/3); link
// mutations take both in that order, reads take the one they need shared.
// Callers holding any lock of this index must not call into the summary
// store (store locks rank first).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fluidsum/digest.hpp"
#include "fluidsum/interner.hpp"
#include "fluidsum/payload.hpp"

namespace fluidsum {

struct VertexLink {
  Hash128 link;
  PayloadElement contribution;
};

struct VertexIndexStats {
  uint64_t num_vertices = 0;
  uint64_t num_classes = 0;
  uint64_t approx_bytes = 0;
};

class VertexHashIndex {
 public:
  VertexHashIndex() = default;
  VertexHashIndex(const VertexHashIndex&) = delete;
  VertexHashIndex& operator=(const VertexHashIndex&) = delete;

  bool contains(Symbol v) const;
  std::optional<VertexLink> get(Symbol v) const;

  bool has_links(Hash128 h) const;
  uint64_t link_count(Hash128 h) const;
  std::vector<Symbol> linked_vertices(Hash128 h) const;  // sorted by symbol

  // Files v under h. Throws ConflictError if v is already linked (callers
  // move vertices with remove_link + add_link so orphan checks stay exact).
  void add_link(Symbol v, Hash128 h, PayloadElement contribution);

  // Unfiles v and reports whether its class just lost its last member. The
  // caller decides between dropping the vertex's contribution from the class
  // payload and removing the class altogether. Throws NotFoundError.
  struct RemoveResult {
    Hash128 link;
    PayloadElement contribution;
    bool orphaned = false;
  };
  RemoveResult remove_link(Symbol v);

  // Replaces the stored contribution of a vertex whose class did not change,
  // returning the previous one. Throws NotFoundError.
  PayloadElement set_contribution(Symbol v, PayloadElement contribution);

  std::vector<Symbol> all_vertices() const;  // sorted by symbol
  size_t size() const;
  bool empty() const { return size() == 0; }
  void clear();

  VertexIndexStats stats() const;

  // Deterministic byte form: records sorted by external vertex term, each
  // carrying term, link hash and exact contribution state.
  std::string canonical_bytes(const Interner& interner) const;

  void export_json(std::ostream& out, const Interner& interner) const;

  // Versioned gzip container keyed by external terms; layer 1 is rebuilt on
  // load. load requires an empty index and interns all terms.
  void save(std::ostream& out, const Interner& interner) const;
  void load(std::istream& in, Interner& interner);

  // Cross-checks layer 1 against layers 2/3; throws IntegrityError.
  void validate() const;

 private:
  struct Entry {
    Hash128 link;
    PayloadElement contribution;
  };

  mutable std::shared_mutex l1_mu_;
  std::unordered_map<Hash128, std::unordered_set<Symbol>> by_hash_;
  mutable std::shared_mutex l2_mu_;
  std::unordered_map<Symbol, Entry> by_vertex_;
};

}  // namespace fluidsum
