#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fluidsum/interner.hpp"

namespace fluidsum {

// Packed key for a directed edge (src, dst). Edges are directed: (v, w) and
// (w, v) are distinct keys.
using EdgeKey = uint64_t;

inline EdgeKey edge_key(Symbol src, Symbol dst) {
  return (static_cast<uint64_t>(src) << 32) | dst;
}
inline Symbol edge_src(EdgeKey k) { return static_cast<Symbol>(k >> 32); }
inline Symbol edge_dst(EdgeKey k) { return static_cast<Symbol>(k & 0xffffffffu); }

enum class Direction : uint8_t { out, in, both };

struct PropKV {
  Symbol key;
  Symbol value;
  bool operator==(const PropKV&) const = default;
  auto operator<=>(const PropKV&) const = default;
};

// One named member graph: a label plus the subsets of vertices and edges it
// contains. Membership is closed: every edge member implies both endpoint
// vertices are members.
struct NamedGraph {
  Symbol name = kNoSymbol;
  std::unordered_set<Symbol> vertices;
  std::unordered_set<EdgeKey> edges;
};

// Batch of term-level mutations applied to a snapshot. Removals are applied
// before additions; each list is processed in order. Removing a vertex
// cascades to its incident edges, labels, properties and graph memberships.
// Removals of absent items are no-ops; duplicate additions are idempotent.
// Adding an edge whose endpoint is absent (and not added by the same change
// set) raises IntegrityError.
struct ChangeSet {
  std::vector<std::string> add_vertices;
  std::vector<std::string> remove_vertices;
  std::vector<std::pair<std::string, std::string>> add_edges;       // (src, dst)
  std::vector<std::pair<std::string, std::string>> remove_edges;
  std::vector<std::pair<std::string, std::string>> add_vertex_labels;     // (term, label)
  std::vector<std::pair<std::string, std::string>> remove_vertex_labels;
  std::vector<std::tuple<std::string, std::string, std::string>> add_edge_labels;  // (src, dst, label)
  std::vector<std::tuple<std::string, std::string, std::string>> remove_edge_labels;
  std::vector<std::tuple<std::string, std::string, std::string>> add_vertex_props;  // (term, key, value)
  std::vector<std::tuple<std::string, std::string, std::string>> remove_vertex_props;
  std::vector<std::pair<std::string, std::string>> add_vertex_memberships;  // (graph, term)
  std::vector<std::pair<std::string, std::string>> remove_vertex_memberships;
  std::vector<std::tuple<std::string, std::string, std::string>> add_edge_memberships;  // (graph, src, dst)
  std::vector<std::tuple<std::string, std::string, std::string>> remove_edge_memberships;

  bool empty() const;
};

class GraphBuilder;

// Immutable snapshot of a labeled property graph with named member graphs.
// All mutation goes through GraphBuilder or apply(), which produce new
// snapshots; existing snapshots are never touched, so worker threads can read
// them freely. Vertex identity is the interned term symbol.
class GraphDatabase {
public:
  GraphDatabase() : interner_(std::make_shared<Interner>()) {}

  const InternerPtr& interner() const { return interner_; }

  // ---- vertices and edges -------------------------------------------------

  bool has_vertex(Symbol v) const { return vertex_set_.count(v) > 0; }
  bool has_vertex(std::string_view term) const;
  bool has_edge(Symbol src, Symbol dst) const { return edge_labels_.count(edge_key(src, dst)) > 0; }

  size_t num_vertices() const { return vertices_.size(); }
  size_t num_edges() const { return edge_labels_.size(); }

  // All vertices, sorted by symbol id (deterministic for a given build order).
  const std::vector<Symbol>& vertices() const { return vertices_; }

  // All edges as (src, dst), sorted by key; materialized on demand.
  std::vector<std::pair<Symbol, Symbol>> edge_list() const;

  // Adjacent vertex symbols under the given direction. Lists are sorted and
  // deduplicated; `both` merges out- and in-neighbors into one sorted set.
  // Throws NotFoundError for unknown vertices.
  std::vector<Symbol> neighbors(Symbol v, Direction dir = Direction::out) const;

  // Number of adjacent edges under the given direction (`both` counts out-
  // plus in-edges, so a self-loop contributes twice).
  size_t degree(Symbol v, Direction dir = Direction::both) const;

  // Maximum degree(v, both) over all vertices; 0 for an empty graph.
  size_t max_degree() const { return max_degree_; }

  const std::vector<Symbol>& out_neighbors(Symbol v) const;
  const std::vector<Symbol>& in_neighbors(Symbol v) const;

  // ---- labels, properties, membership -------------------------------------

  // Sorted label symbols; empty for unlabeled or unknown vertices.
  const std::vector<Symbol>& labels(Symbol v) const;

  // Sorted label symbols of edge (src, dst); empty if the edge is absent.
  const std::vector<Symbol>& edge_labels(Symbol src, Symbol dst) const;

  const std::vector<PropKV>& properties(Symbol v) const;
  const std::vector<PropKV>& edge_properties(Symbol src, Symbol dst) const;

  // Sorted names of the member graphs containing v (resp. the edge).
  const std::vector<Symbol>& graphs_of(Symbol v) const;
  std::vector<Symbol> graphs_of_edge(Symbol src, Symbol dst) const;

  const std::vector<NamedGraph>& member_graphs() const { return graphs_; }

  // Vertices carrying a given label, sorted; empty for unknown labels.
  const std::vector<Symbol>& label_extent(Symbol label) const;

  // ---- evolution -----------------------------------------------------------

  // Applies a change set and returns the next snapshot (this one is left
  // untouched). Membership closure is re-established: removed vertices leave
  // every member graph together with their incident edges.
  GraphDatabase apply(const ChangeSet& changes) const;

  // ---- accounting ----------------------------------------------------------

  // Deterministic memory model of this snapshot: interned string storage is
  // charged in full plus per-entry container costs (documented in the
  // implementation). Used for the index-overhead comparison, not a precise
  // allocator measurement.
  uint64_t approx_bytes() const;

  std::string term(Symbol v) const { return interner_->str(v); }

private:
  friend class GraphBuilder;

  void rebuild_derived();

  InternerPtr interner_;
  std::vector<Symbol> vertices_;
  std::unordered_set<Symbol> vertex_set_;
  std::unordered_map<Symbol, std::vector<Symbol>> out_;
  std::unordered_map<Symbol, std::vector<Symbol>> in_;
  std::unordered_map<EdgeKey, std::vector<Symbol>> edge_labels_;
  std::unordered_map<Symbol, std::vector<Symbol>> vertex_labels_;
  std::unordered_map<Symbol, std::vector<PropKV>> vertex_props_;
  std::unordered_map<EdgeKey, std::vector<PropKV>> edge_props_;
  std::vector<NamedGraph> graphs_;

  // derived at snapshot construction
  std::unordered_map<Symbol, std::vector<Symbol>> vertex_graphs_;
  std::unordered_map<Symbol, std::vector<Symbol>> label_extent_;
  size_t max_degree_ = 0;
};

// Single-writer accumulator producing GraphDatabase snapshots. add_* methods
// are idempotent; finish() sorts the adjacency structures, derives the
// membership and label indexes and returns the immutable snapshot.
class GraphBuilder {
public:
  explicit GraphBuilder(InternerPtr interner = nullptr)
      : g_() {
    if (interner) g_.interner_ = std::move(interner);
  }

  Symbol add_vertex(std::string_view term);
  void add_vertex_label(std::string_view term, std::string_view label);
  // Adds both endpoints as vertices if absent.
  void add_edge(std::string_view src, std::string_view dst);
  void add_edge_label(std::string_view src, std::string_view dst, std::string_view label);
  void add_vertex_property(std::string_view term, std::string_view key, std::string_view value);
  void add_edge_property(std::string_view src, std::string_view dst, std::string_view key,
                         std::string_view value);
  void add_vertex_to_graph(std::string_view graph, std::string_view term);
  // Adds the edge (and endpoints) if absent, then records edge + endpoint
  // membership, keeping the closure invariant by construction.
  void add_edge_to_graph(std::string_view graph, std::string_view src, std::string_view dst);

  GraphDatabase finish();

private:
  Symbol intern(std::string_view s) { return g_.interner_->intern(s); }
  NamedGraph& graph_slot(Symbol name);

  GraphDatabase g_;
  std::unordered_map<Symbol, size_t> graph_index_;
  bool finished_ = false;
};

// Canonical equality of two snapshots over the same interner: identical
// vertex sets, labels, properties, edges and memberships. Used by tests.
bool graphs_equal(const GraphDatabase& a, const GraphDatabase& b);

// Change set that transforms `from` into `to` (apply(diff(from, to)) on
// `from` equals `to`). Both snapshots must share one interner. Cascades are
// exploited: items lost with a removed vertex are not listed again. Edge
// property differences between surviving edges are not expressible as a
// ChangeSet and raise IntegrityError.
ChangeSet diff_graphs(const GraphDatabase& from, const GraphDatabase& to);

}  // namespace fluidsum
