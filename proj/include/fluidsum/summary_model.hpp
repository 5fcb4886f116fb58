#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "fluidsum/digest.hpp"
#include "fluidsum/graph.hpp"
#include "fluidsum/rdf_io.hpp"  // kRdfTypeIri

namespace fluidsum {

// ===========================================================================
// Schema elements (model configuration)
// ===========================================================================
//
// A summary model is a schema element: either one of the simple relations
// over a vertex's own neighborhood, or a complex element combining a subject
// relation, a predicate relation and an object relation with a chaining
// depth k. Two vertices are equivalent under the model iff their canonical
// vertex summaries (below) are byte-equal.
//
// The property-graph view erases rdf:type edges into vertex labels, so label
// information re-enters the relations as *virtual type instances*: a vertex's
// labels act like outgoing edges labeled with the type IRI, gated by the same
// label filters as real edges. That single rule gives the classic behaviors:
// an include-filter on the type IRI compares label sets only (class
// collection), an exclude-filter ignores labels entirely (attribute
// collection), and an unfiltered complex element sees both.

enum class ElemKind : uint8_t { top, identity, oc, pc, poc, cse };

// Include- or exclude-filter over edge labels (predicates). An instance is
// considered iff its label passes every active filter on the traversal path.
struct LabelFilterSpec {
  bool exclude = false;
  std::vector<std::string> labels;
};

struct ElemParamsSpec {
  std::optional<LabelFilterSpec> label_filter;
  // Restriction set S: label entries (and neighbor-id entries) of extracted
  // feature sets are intersected with S. Ignored by top/identity.
  std::optional<std::vector<std::string>> set_filter;
  Direction direction = Direction::out;
  int chaining_k = 1;  // cse only; depth of object-position nesting
};

struct SchemaElement {
  ElemKind kind = ElemKind::top;
  ElemParamsSpec params;
  // cse components; predicate position admits only identity/top
  std::shared_ptr<SchemaElement> subject, predicate, object;
  // root-level settings
  std::string rdf_type_iri = kRdfTypeIri;
  std::vector<std::string> instance_merge;  // merge-edge labels, e.g. owl:sameAs

  // Stable byte form; equal specs produce equal strings. Feeds elem ids,
  // so changing the format changes every summary hash.
  std::string canonical_spec() const;

  // Structural validation (filter non-emptiness, predicate-position grammar,
  // chaining bounds). Throws IntegrityError.
  void validate() const;
};

// Predefined models. `rdf_type` is the IRI whose statements were folded into
// vertex labels when the graph was built.
SchemaElement schemex_model(int k = 1, const std::string& rdf_type = kRdfTypeIri);
SchemaElement attrcoll_model(const std::string& rdf_type = kRdfTypeIri);
SchemaElement classcoll_model(const std::string& rdf_type = kRdfTypeIri);

// Looks up a predefined model by name ("schemex" | "attrcoll" | "classcoll").
SchemaElement predefined_model(const std::string& name, int k = 1,
                               const std::string& rdf_type = kRdfTypeIri);

// JSON model configuration: either {"model": "<predefined>", "k": ..} or a
// structural form {"variant": "cse"|"oc"|"pc"|"poc"|"id"|"top", ...} with
// nested "subject"/"predicate"/"object", "labels": {"include"|"exclude":
// [...]}, "set": [...], "direction", "k", "rdf_type", "instance_merge".
SchemaElement parse_model_json(const std::string& text);
std::string model_to_json(const SchemaElement& m);

// ===========================================================================
// Canonical vertex summaries
// ===========================================================================
//
// A vertex summary is a rooted tree (parallel edges allowed). The root is the
// subject-position class of the vertex; each child is the class of a set of
// reachable neighbors under the object relation; each edge carries one
// predicate class. Nodes store their local features as tagged sections of
// sorted byte strings, all in external (string) form, so canonical bytes are
// independent of interner state, platform and worker interleavings.
//
// Section tags: 'L' vertex labels, 'N' out-neighbor ids, 'M' in-neighbor ids,
// 'E' out-edge labels, 'F' in-edge labels, 'P'/'Q' per-neighbor (target,
// label-set) pairs, 'i' identity term.

struct Section {
  char tag;
  std::vector<std::string> entries;  // sorted, deduplicated
  bool operator==(const Section&) const = default;
};

struct SummaryEdge {
  uint8_t dir = 0;       // 0 out, 1 in (distinct classes under both-direction)
  bool universal = false;  // predicate relation is top
  std::string label;       // single predicate (predicate relation is identity)
  uint32_t child = 0;      // index into VertexSummary::nodes

  // Serialized edge-class prefix, the primary sort key of edges.
  std::string class_bytes() const;
};

struct SummaryNode {
  uint64_t elem_id = 0;  // identifies (relation, depth); classes of different
                         // relations never compare equal
  std::vector<Section> sections;
  std::vector<SummaryEdge> edges;  // sorted by (class bytes, child hash)
};

struct VertexSummary {
  std::vector<SummaryNode> nodes;  // nodes[0] is the root. Diamonds through a
                                   // shared neighbor are memoized; equal
                                   // subtrees reached through different
                                   // neighbors may occupy separate slots, so
                                   // nodes are identified by digest.
  std::vector<Hash128> hashes;     // per-node digests, computed bottom-up

  Hash128 hash() const { return hashes.empty() ? Hash128{} : hashes[0]; }
  bool empty() const { return nodes.empty(); }

  // Number of vertices of the logical tree, counting shared subtrees once
  // per distinct child reference (parallel edges to one child count once).
  uint64_t tree_vertex_count() const;

  // Canonical serialization of the root node. With deep=false children are
  // referenced by digest (the form that is hashed and stored); deep=true
  // embeds child encodings recursively (paranoid comparisons, exports).
  std::string canonical_bytes(bool deep = false) const;
};

// Encoding of one node from its parts, edges given as (class bytes, child
// digest) pairs in canonical order; shared by the store so persisted nodes
// hash identically to built ones.
std::string encode_node_layout(uint64_t elem_id, const std::vector<Section>& sections,
                               const std::vector<std::pair<std::string, Hash128>>& edges);

// Serialized edge-class prefix shared by the in-memory and persisted forms.
std::string edge_class_bytes(uint8_t dir, bool universal, std::string_view label);

// A node in store form: children referenced by digest rather than index.
struct LayoutEdge {
  uint8_t dir = 0;
  bool universal = false;
  std::string label;
  Hash128 child;

  std::string class_bytes() const { return edge_class_bytes(dir, universal, label); }
};

struct NodeLayout {
  uint64_t elem_id = 0;
  std::vector<Section> sections;
  std::vector<LayoutEdge> edges;

  std::string encode() const;
};

// Inverse of NodeLayout::encode / encode_node_layout. Throws IntegrityError
// on malformed input.
NodeLayout decode_node_layout(std::string_view bytes);

// ===========================================================================
// Compiled models and summary construction
// ===========================================================================

struct CompiledFilter {
  bool exclude = false;
  std::unordered_set<Symbol> labels;
  bool passes(Symbol l) const { return exclude ? !labels.count(l) : labels.count(l) > 0; }
};

struct CompiledElement {
  ElemKind kind = ElemKind::top;
  Direction direction = Direction::out;
  std::optional<CompiledFilter> label_filter;
  std::optional<std::unordered_set<Symbol>> set_filter;
  int chaining_k = 1;
  uint64_t elem_id = 0;
  std::unique_ptr<CompiledElement> subject, predicate, object;

  bool label_passes(Symbol l) const { return !label_filter || label_filter->passes(l); }
};

// A schema element bound to an interner: filter labels and the type IRI are
// resolved to symbols, and every (sub)element gets its digest-derived id.
class CompiledModel {
public:
  CompiledModel(const SchemaElement& spec, Interner& interner);

  const CompiledElement& root() const { return root_; }
  const SchemaElement& spec() const { return spec_; }
  Symbol rdf_type() const { return rdf_type_; }
  // 0 for simple-element models, the chaining depth for complex ones.
  int rounds() const { return root_.kind == ElemKind::cse ? root_.chaining_k : 0; }
  const Interner& interner() const { return *interner_; }

  // elem id of the complex element with j levels of chaining left (j >= 1);
  // used by both construction routes so internal nodes agree byte-for-byte.
  uint64_t depth_elem_id(int j) const { return depth_ids_.at(static_cast<size_t>(j)); }

private:
  SchemaElement spec_;
  CompiledElement root_;
  Symbol rdf_type_;
  std::vector<uint64_t> depth_ids_;
  const Interner* interner_;
};

// Local feature fragment of v under the subject position of the model (the
// whole summary for simple-element models). Throws NotFoundError if v is not
// a vertex of g.
VertexSummary extract_vertex_schema(const CompiledModel& m, const GraphDatabase& g, Symbol v);

// The building blocks of summary construction, shared by the recursive
// builder below and the round-based evaluation in the engine, which must
// agree byte for byte.

// Local features of `sym` under a position relation (subject position for
// internal tree nodes, object position for leaves). `sym` may be a label
// symbol rather than a vertex; every feature set is then empty.
std::vector<Section> extract_position_sections(const CompiledElement& el, const GraphDatabase& g,
                                               Symbol sym, Symbol rdf_type);

// One traversable predicate instance of a vertex: a real edge under one of
// its passing labels, or a virtual type instance whose target is a label.
struct PredicateInstance {
  uint8_t dir;  // 0 out, 1 in
  Symbol label;
  Symbol target;
};

// All instances of `sym` admitted by the model's complex element and its
// predicate relation (label and set filters of both apply).
std::vector<PredicateInstance> collect_predicate_instances(const CompiledModel& m,
                                                           const GraphDatabase& g, Symbol sym);

// Rebuilds the vector form of a summary from nodes keyed by digest (root
// first, shared subtrees once). `node_of` must cover the closure of `root`
// and may return nullptr only for digests outside it; a nullptr inside the
// closure raises IntegrityError.
VertexSummary materialize_summary(Hash128 root,
                                  const std::function<const NodeLayout*(Hash128)>& node_of);

// Full summary of v under the model: the subject fragment plus k levels of
// object-position subtrees, canonically sorted. Throws NotFoundError if v is
// not a vertex of g.
VertexSummary build_vertex_summary(const CompiledModel& m, const GraphDatabase& g, Symbol v);

inline Hash128 canonical_hash(const VertexSummary& vs) { return vs.hash(); }

bool equivalent(const CompiledModel& m, const GraphDatabase& g, Symbol v, Symbol w);

// Collapses vertices connected by edges carrying any of the given labels
// (transitively, to a fixpoint) into one vertex per component, represented by
// the lexicographically smallest member term. Labels, properties and
// memberships are unioned; merge labels are dropped from resulting
// self-loops, and self-loops whose label set empties out disappear.
GraphDatabase instance_merge(const GraphDatabase& g,
                             const std::vector<std::string>& merge_labels);

}  // namespace fluidsum
