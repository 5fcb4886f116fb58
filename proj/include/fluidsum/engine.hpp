#pragma once

// Whole-graph summarization runs. A run reads one graph snapshot and brings a
// summary store plus vertex index in line with it:
//
//   batch        requires an empty store/index pair and fills them
//   incremental  reconciles an existing pair against the snapshot, touching
//                the store only for vertices whose class or contribution
//                actually changed, and unfiling vertices that disappeared
//
// Both modes run the same three phases: hash-partitioning the work, a
// pull-based round evaluation that computes every needed summary bottom-up
// (round r summarizes what is reachable in r steps, so k rounds settle a
// chaining-k model), and a merge phase that files vertices per partition in
// parallel. Incremental runs end with a deletion sweep over indexed vertices
// missing from the snapshot.
//
// The per-vertex reconcile orders its store and index writes so that any
// interleaving across workers converges to the same final state: payload
// contributions are subtracted while the vertex is still filed (the class
// cannot vanish underneath), links are added before the class payload is
// merged, and class removal re-checks the index under the store's shard lock.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "fluidsum/graph.hpp"
#include "fluidsum/payload.hpp"
#include "fluidsum/summary_graph.hpp"
#include "fluidsum/summary_model.hpp"
#include "fluidsum/vertex_index.hpp"

namespace fluidsum {

enum class RunMode : uint8_t { batch, incremental };

struct RunConfig {
  SchemaElement model = schemex_model();
  PayloadKind payload = PayloadKind::count;
  RunMode mode = RunMode::batch;
  int workers = 1;
  int partitions = 0;  // 0: four per worker
  // Retries around one vertex's reconcile, with a bounded backoff drawn from
  // [retry_delay_min_ms, retry_delay_max_ms]. The write ordering above makes
  // conflicts unobservable in the flows this engine drives itself; the guard
  // exists for callers sharing an index with concurrent writers of their own.
  int max_retries = 32;
  int retry_delay_min_ms = 0;
  int retry_delay_max_ms = 10;
  // Re-derive each reconciled summary through the recursive builder and
  // compare deep canonical bytes (collision guard; roughly doubles the cost).
  bool paranoid = false;
  // Incremental runs: cross-check index layers and store membership before
  // touching anything.
  bool validate_inputs = true;
};

struct PhaseTimings {
  double partition_ms = 0;
  double rounds_ms = 0;
  double merge_ms = 0;
  double delete_ms = 0;
};

// Per-vertex classification counters of one run. Every reconciled vertex
// lands in exactly one of the first five buckets; every unfiled vertex in one
// of the del buckets. Sums are identical across worker counts: in incremental
// mode the add split is decided against the pre-run store (two new vertices
// sharing a brand-new class both count add_schema); in batch mode exactly one
// vertex creates each class and counts add_schema for it.
struct ChangeReport {
  uint64_t add_schema = 0;    // new vertex, class not in the prior store
  uint64_t add_instance = 0;  // new vertex filed under a known class
  uint64_t mod_schema = 0;    // vertex moved between classes
  uint64_t mod_instance = 0;  // class kept, payload contribution changed
  uint64_t unchanged = 0;     // fast path: class and contribution kept
  uint64_t del_schema = 0;    // vertex gone, class emptied with it
  uint64_t del_instance = 0;  // vertex gone, class survives
  uint64_t store_ops = 0;     // store mutations performed
  uint64_t vertices_seen = 0;
  uint64_t num_vertices = 0;  // snapshot size after any instance merging
  uint64_t num_edges = 0;
  PhaseTimings timings;

  uint64_t total_changed() const {
    return add_schema + add_instance + mod_schema + mod_instance + del_schema + del_instance;
  }
  std::string to_json() const;
};

// Full-scan run over the snapshot. Batch mode throws IntegrityError unless
// store and index are empty; incremental mode reconciles every vertex (the
// fast path keeps that cheap) and sweeps deletions.
ChangeReport summarize(const RunConfig& cfg, const GraphDatabase& g, SummaryGraph& sg,
                       VertexHashIndex& index);

// Change-driven incremental run: reconciles only vertices whose summary may
// depend on the recorded changes (a conservative superset), plus the deletion
// sweep. `before` and `after` must share one interner; `after` must be
// `before.apply(changes)` or the classification is meaningless. Models with
// instance merging fall back to a full reconcile, since merging remaps
// vertex identities.
ChangeReport summarize_update(const RunConfig& cfg, const GraphDatabase& before,
                              const GraphDatabase& after, const ChangeSet& changes,
                              SummaryGraph& sg, VertexHashIndex& index);

// The dirty-set computation behind summarize_update: seed symbols touched by
// the changes, expanded k levels against the reverse instance relation of
// both snapshots. Ignores label filters, so the result is a superset of the
// vertices whose summary can differ. Sorted, may contain non-vertex symbols.
std::vector<Symbol> affected_vertices(const CompiledModel& m, const GraphDatabase& before,
                                      const GraphDatabase& after, const ChangeSet& changes);

// The round-based evaluation route, exposed so tests can pit it against
// build_vertex_summary: computes the summary digest of every target plus the
// node closure to materialize their trees.
struct RoundsResult {
  std::unordered_map<Symbol, Hash128> roots;
  std::unordered_map<Hash128, NodeLayout> nodes;
};
RoundsResult message_rounds(const CompiledModel& m, const GraphDatabase& g,
                            const std::vector<Symbol>& targets, int workers, int partitions);

}  // namespace fluidsum
