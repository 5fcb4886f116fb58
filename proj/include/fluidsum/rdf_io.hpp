#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fluidsum/graph.hpp"

namespace fluidsum {

inline constexpr const char* kRdfTypeIri = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

enum class RdfFormat : uint8_t { ntriples, nquads };

enum class TermKind : uint8_t { iri, blank, literal };

// One RDF term. For blanks, `value` holds the skolemized label
// "<scope>#<label>" so blank nodes from different files never collide; the
// serializer emits only the part after the final '#', which restores the
// original label for same-scope round trips. For literals, `value` holds the
// unescaped lexical form and `datatype`/`lang` the optional qualifiers.
struct RdfTerm {
  TermKind kind = TermKind::iri;
  std::string value;
  std::string datatype;
  std::string lang;

  bool operator==(const RdfTerm&) const = default;

  // The vertex term used in the property-graph view. The three kinds live in
  // disjoint string spaces: IRIs verbatim, blanks prefixed "_:", literals as
  // their canonical N-Triples serialization (so "1"^^xsd:int and "1" are
  // distinct vertices while term-equal literals are one vertex).
  std::string lpg_term() const;

  // Parses an lpg_term back into a term (inverse of the above).
  static RdfTerm from_lpg_term(const std::string& term);
};

struct RdfStatement {
  RdfTerm subject;
  std::string predicate;
  RdfTerm object;
  std::optional<std::string> graph;  // lpg_term form of the graph name

  bool operator==(const RdfStatement&) const = default;
};

struct ParseOptions {
  // Abort on the first malformed line (with its line number) unless lenient,
  // in which case bad lines are counted and skipped.
  bool lenient = false;
  // Scope string baked into skolemized blank labels; callers pass the file
  // path (or any stable per-source tag).
  std::string blank_scope;
  // Statements without an explicit graph get this one (manifests use it to
  // tag whole files as one source).
  std::optional<std::string> default_graph;
};

struct ParseStats {
  uint64_t statements = 0;
  uint64_t skipped = 0;
};

using StatementSink = std::function<void(const RdfStatement&)>;

// Single-pass streaming parse; memory use is bounded by the longest line.
// Throws ParseError (with 1-based line number) in strict mode.
ParseStats parse_rdf(std::istream& in, RdfFormat format, const ParseOptions& opts,
                     const StatementSink& sink);

// Opens `path`, transparently unwrapping a trailing ".gz", and sniffs the
// format from the extension (.nt/.ntriples vs .nq/.nquads) unless `format`
// is given. blank_scope defaults to the path.
ParseStats parse_rdf_file(const std::string& path, std::optional<RdfFormat> format,
                          ParseOptions opts, const StatementSink& sink);

std::string serialize_statement(const RdfStatement& st, RdfFormat format);
void serialize_rdf(const std::vector<RdfStatement>& statements, RdfFormat format,
                   std::ostream& out);

struct LpgOptions {
  std::string rdf_type_iri = kRdfTypeIri;
};

// Builds the property-graph view of a statement stream:
//  - (s, rdf:type, o) makes o a label of vertex s; o itself is not
//    materialized (it becomes a vertex only through non-type occurrences)
//  - literal objects become vertices carrying a ("literal", lexical) property
//  - every other statement accumulates predicate p in the label set of the
//    single edge (s, o)
//  - a statement's graph makes s (and for edges o plus the edge) members of
//    that named graph
// The returned snapshot never contains an edge labeled with the type IRI.
GraphDatabase rdf_to_lpg(const std::vector<RdfStatement>& statements, const LpgOptions& opts = {},
                         InternerPtr interner = nullptr);

// Incremental accumulation variant used by the CLI: statements are folded
// into a GraphBuilder as they stream off the parser.
void fold_statement_into_builder(GraphBuilder& b, const RdfStatement& st, const LpgOptions& opts);

// Inverse rendering of a property graph as RDF:
//  - vertex labels become type statements (one per member graph of the
//    vertex, or a plain triple when it belongs to none)
//  - edge labels become statements; objects holding a ("literal", s) property
//    are rendered as literals via their term
//  - other vertex properties (k, v) become (vertex, k, "v") statements
//  - edge properties are factored through a fresh blank vertex z:
//    (s, p, z), (z, p, o) and (z, k, "v") for each property
// Vertices with no label, no incident edge and no property are inexpressible
// and are silently omitted; a literal-termed vertex with outgoing edges
// raises IntegrityError (literals cannot be subjects).
std::vector<RdfStatement> lpg_to_rdf(const GraphDatabase& g, const LpgOptions& opts = {});

}  // namespace fluidsum
