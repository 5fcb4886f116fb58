#pragma once

// Shared store of summary classes. Each element couples one canonical vertex
// summary, kept as a tree of nodes deduplicated across elements, with the
// payload accumulated from every vertex of that class. Elements are keyed by
// the root digest of their tree.
//
// Thread safety: elements are sharded by hash across a fixed set of mutexes;
// the node pool and its reference counts sit behind one further mutex. Lock
// order is always element shard first, then pool. remove_element_if runs its
// caller-supplied predicate while holding the shard lock; the predicate may
// acquire locks that rank below shard locks (the vertex index does) but must
// never call back into this store.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "fluidsum/digest.hpp"
#include "fluidsum/payload.hpp"
#include "fluidsum/summary_model.hpp"

namespace fluidsum {

struct SummaryGraphStats {
  uint64_t num_classes = 0;        // stored elements (tree roots)
  uint64_t num_support_nodes = 0;  // pooled nodes that are not element roots
  uint64_t num_tree_edges = 0;     // edges over all pooled nodes
  uint64_t payload_count_total = 0;
  uint64_t payload_items_total = 0;  // distinct payload items (set semantics)
};

class SummaryGraph {
 public:
  SummaryGraph() = default;
  SummaryGraph(const SummaryGraph&) = delete;
  SummaryGraph& operator=(const SummaryGraph&) = delete;

  bool contains(Hash128 h) const;

  // Inserts the class if it is new (interning its tree) and merges the
  // contribution into its payload either way. Returns true when the class was
  // created by this call. Throws IntegrityError for an empty summary or a
  // payload kind mismatch.
  bool add_element(const VertexSummary& vs, const PayloadElement& contribution);

  // Payload-only updates for classes that must already exist; both throw
  // NotFoundError otherwise, unmerge_payload throws IntegrityError on
  // underflow.
  void merge_payload(Hash128 h, const PayloadElement& contribution);
  void unmerge_payload(Hash128 h, const PayloadElement& contribution);

  // Removes the element and releases its tree if it exists and `confirm`
  // returns true under the shard lock (callers re-check their own index
  // there to close the gap against concurrent re-links). Returns whether the
  // element was removed.
  bool remove_element_if(Hash128 h, const std::function<bool()>& confirm);

  PayloadElement payload_of(Hash128 h) const;  // throws NotFoundError

  // Rebuilds the stored tree in vector form (root first, shared subtrees
  // once). Throws NotFoundError.
  VertexSummary materialize(Hash128 h) const;

  std::vector<Hash128> element_hashes() const;  // sorted
  size_t size() const;
  bool empty() const { return size() == 0; }
  void clear();

  SummaryGraphStats stats() const;
  uint64_t approx_bytes() const;

  // Deterministic byte form of the whole store: elements sorted by hash with
  // exact payload state, then pooled nodes sorted by digest. Equal stores
  // produce equal bytes regardless of insertion order or thread count.
  std::string canonical_bytes() const;

  void export_json(std::ostream& out, bool include_trees = false) const;

  // Versioned gzip container. load requires an empty store, recomputes all
  // reference counts from the records and throws IntegrityError on digest
  // mismatches, dangling children or unreferenced nodes.
  void save(std::ostream& out) const;
  void load(std::istream& in);

  // Recounts references from the element roots and compares against the
  // stored counts; throws IntegrityError on any disagreement.
  void validate() const;

 private:
  static constexpr size_t kShards = 16;

  struct Shard {
    mutable std::mutex mu;
    std::unordered_map<Hash128, PayloadElement> elems;
  };

  struct PoolNode {
    NodeLayout layout;
    uint64_t refs = 0;
  };

  Shard& shard_of(Hash128 h) const { return shards_[h.lo % kShards]; }
  void intern_tree_locked(const VertexSummary& vs);
  void release_tree_locked(Hash128 root);

  mutable std::array<Shard, kShards> shards_;
  mutable std::mutex pool_mu_;
  std::unordered_map<Hash128, PoolNode> pool_;
};

}  // namespace fluidsum
