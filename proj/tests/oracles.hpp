#pragma once

// Independent reference implementations the tests compare the library
// against. Everything here is deliberately brute force and works from the
// pairwise definitions of the equivalence relations rather than from
// canonical encodings: partitions come from quadratic feature comparison,
// change counters from whole-snapshot reclassification, payloads from
// recount scans. Being slow is fine; agreeing with the fast paths is the
// point.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fluidsum/graph.hpp"
#include "fluidsum/payload.hpp"
#include "fluidsum/rdf_io.hpp"
#include "fluidsum/summary_model.hpp"
#include "fluidsum/vertex_index.hpp"

namespace fluidsum::test {

struct OracleFilter {
  bool exclude = true;  // default: empty exclusion set, passes everything
  std::set<std::string> labels;
  bool passes(const std::string& l) const {
    return exclude ? labels.count(l) == 0 : labels.count(l) > 0;
  }
};

struct OracleParams {
  OracleFilter label;  // which edge labels are considered at all
  OracleFilter set;    // which symbols the features may mention
  Direction direction = Direction::out;
  std::string rdf_type = kRdfTypeIri;
};

// Feature strings for the three one-hop element kinds, labeled-property
// form: the own label set is compared only when the type predicate passes
// the label filter (types ride on virtual type edges), neighbor sets and
// per-neighbor label sets come from edges with at least one passing label,
// and a vertex used as a label by others sees those uses as incoming
// virtual type instances. Two vertices are equivalent iff their strings
// compare equal.
std::string oracle_oc_features(const GraphDatabase& g, Symbol v, const OracleParams& p);
std::string oracle_pc_features(const GraphDatabase& g, Symbol v, const OracleParams& p);
std::string oracle_poc_features(const GraphDatabase& g, Symbol v, const OracleParams& p);

using Partition = std::set<std::vector<std::string>>;

// Groups g.vertices() by the feature string of the given one-hop kind.
Partition oracle_partition_simple(const GraphDatabase& g, ElemKind kind, const OracleParams& p);

// Chained equivalence with label-set subject/object comparison (the "same
// types" relation on both ends) and exact predicate comparison, recursively
// to depth k: level-0 classes are the object features, level-j classes pair
// the subject features with the set of (direction, predicate, level-(j-1)
// class of the target) triples over passing instances. Instances are real
// (edge, label) pairs plus virtual type instances whose targets are label
// symbols; `pred_filter` gates them. With `pred_universal`, predicates
// collapse to one class. Set filters are not modeled here.
Partition oracle_partition_chained(const GraphDatabase& g, const OracleParams& ends,
                                   const OracleFilter& pred_filter, bool pred_universal, int k);

// ---------------------------------------------------------------------------
// change classification
// ---------------------------------------------------------------------------

struct OracleCounts {
  uint64_t add_schema = 0;
  uint64_t add_instance = 0;
  uint64_t mod_schema = 0;
  uint64_t mod_instance = 0;
  uint64_t unchanged = 0;
  uint64_t del_schema = 0;
  uint64_t del_instance = 0;
};

// Reclassifies every vertex of two snapshots sharing one interner: new
// vertices split by whether their class hash existed among `before`'s
// classes, surviving vertices by hash then payload-contribution change, and
// deleted vertices by whether their old class still has members in `after`
// (one schema death per vanished class; remaining deletions of the same
// class count as instance removals, matching the engine's per-vertex
// accounting).
OracleCounts oracle_classify(const SchemaElement& model, PayloadKind kind,
                             const GraphDatabase& before, const GraphDatabase& after);

// Batch expectation: one schema per distinct class, the rest instances.
OracleCounts oracle_batch_counts(const SchemaElement& model, const GraphDatabase& g);

// ---------------------------------------------------------------------------
// payload and structure checks
// ---------------------------------------------------------------------------

// Expected payload of every class given the final index state: a recount
// of vertex_payload over each class's linked vertices.
std::map<Hash128, PayloadElement> oracle_recount(const GraphDatabase& g, PayloadKind kind,
                                                 const VertexHashIndex& index);

// Branching bound for tree-size checks: the maximum, over vertices, of the
// number of distinct (direction, neighbor-or-label) instance targets.
size_t oracle_max_fanout(const GraphDatabase& g, Direction dir);

}  // namespace fluidsum::test
