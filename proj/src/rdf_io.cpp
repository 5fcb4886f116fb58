#include "fluidsum/rdf_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>

#include "fluidsum/errors.hpp"
#include "fluidsum/gzip_io.hpp"
#include "fluidsum/log.hpp"

namespace fluidsum {

namespace {

void encode_utf8(uint32_t cp, std::string& out) {
  if (cp <= 0x7f) {
    out.push_back(static_cast<char>(cp));
  } else if (cp <= 0x7ff) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp <= 0xffff) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

void escape_string(const std::string& s, std::string& out) {
  static const char* hex = "0123456789ABCDEF";
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          out += "\\u00";
          out.push_back(hex[c >> 4]);
          out.push_back(hex[c & 0xf]);
        } else {
          out.push_back(static_cast<char>(c));
        }
    }
  }
}

void serialize_term(const RdfTerm& t, std::string& out) {
  switch (t.kind) {
    case TermKind::iri:
      out.push_back('<');
      out += t.value;
      out.push_back('>');
      break;
    case TermKind::blank: {
      // emit the original label: everything after the final '#' of the
      // skolemized value (labels themselves cannot contain '#')
      auto pos = t.value.rfind('#');
      out += "_:";
      out += pos == std::string::npos ? t.value : t.value.substr(pos + 1);
      break;
    }
    case TermKind::literal:
      out.push_back('"');
      escape_string(t.value, out);
      out.push_back('"');
      if (!t.lang.empty()) {
        out.push_back('@');
        out += t.lang;
      } else if (!t.datatype.empty()) {
        out += "^^<";
        out += t.datatype;
        out.push_back('>');
      }
      break;
  }
}

// Per-line recursive-descent scanner for the N-Triples / N-Quads grammar.
struct LineScanner {
  const std::string& line;
  uint64_t lineno;
  size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(lineno, msg); }

  bool eof() const { return pos >= line.size(); }
  char peek() const { return eof() ? '\0' : line[pos]; }

  void skip_ws() {
    while (!eof() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  }

  uint32_t hex_quad(int n) {
    uint32_t cp = 0;
    for (int i = 0; i < n; ++i) {
      if (eof()) fail("truncated \\u escape");
      char c = line[pos++];
      cp <<= 4;
      if (c >= '0' && c <= '9') cp |= static_cast<uint32_t>(c - '0');
      else if (c >= 'a' && c <= 'f') cp |= static_cast<uint32_t>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') cp |= static_cast<uint32_t>(c - 'A' + 10);
      else fail("bad hex digit in escape");
    }
    return cp;
  }

  std::string parse_iri() {
    if (peek() != '<') fail("expected IRI");
    ++pos;
    std::string iri;
    while (true) {
      if (eof()) fail("unterminated IRI");
      char c = line[pos++];
      if (c == '>') break;
      if (c == '\\') {
        if (eof()) fail("truncated escape in IRI");
        char e = line[pos++];
        if (e == 'u') encode_utf8(hex_quad(4), iri);
        else if (e == 'U') encode_utf8(hex_quad(8), iri);
        else fail("invalid escape in IRI");
      } else if (static_cast<unsigned char>(c) < 0x20 || c == ' ') {
        fail("control character or space in IRI");
      } else {
        iri.push_back(c);
      }
    }
    if (iri.empty()) fail("empty IRI");
    return iri;
  }

  std::string parse_blank_label() {
    // caller consumed "_:"
    std::string label;
    while (!eof()) {
      char c = line[pos];
      if (c == ' ' || c == '\t' || c == '.') break;
      if (c == '#') fail("'#' not allowed in blank node label");
      label.push_back(c);
      ++pos;
    }
    if (label.empty()) fail("empty blank node label");
    return label;
  }

  RdfTerm parse_literal() {
    // caller consumed the opening quote
    RdfTerm t;
    t.kind = TermKind::literal;
    while (true) {
      if (eof()) fail("unterminated literal");
      char c = line[pos++];
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) fail("truncated escape in literal");
        char e = line[pos++];
        switch (e) {
          case 't': t.value.push_back('\t'); break;
          case 'b': t.value.push_back('\b'); break;
          case 'n': t.value.push_back('\n'); break;
          case 'r': t.value.push_back('\r'); break;
          case 'f': t.value.push_back('\f'); break;
          case '"': t.value.push_back('"'); break;
          case '\'': t.value.push_back('\''); break;
          case '\\': t.value.push_back('\\'); break;
          case 'u': encode_utf8(hex_quad(4), t.value); break;
          case 'U': encode_utf8(hex_quad(8), t.value); break;
          default: fail("invalid escape in literal");
        }
      } else {
        t.value.push_back(c);
      }
    }
    if (peek() == '@') {
      ++pos;
      while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '-'))
        t.lang.push_back(line[pos++]);
      if (t.lang.empty()) fail("empty language tag");
    } else if (peek() == '^') {
      ++pos;
      if (peek() != '^') fail("expected '^^' before datatype");
      ++pos;
      t.datatype = parse_iri();
    }
    return t;
  }

  RdfTerm parse_term(const char* role, bool allow_literal, bool allow_blank,
                     const std::string& blank_scope) {
    skip_ws();
    char c = peek();
    if (c == '<') return RdfTerm{TermKind::iri, parse_iri(), {}, {}};
    if (c == '_') {
      if (!allow_blank) fail(std::string(role) + " must not be a blank node");
      ++pos;
      if (peek() != ':') fail("expected ':' after '_'");
      ++pos;
      std::string label = parse_blank_label();
      std::string value = blank_scope.empty() ? label : blank_scope + "#" + label;
      return RdfTerm{TermKind::blank, std::move(value), {}, {}};
    }
    if (c == '"') {
      if (!allow_literal) fail(std::string(role) + " must not be a literal");
      ++pos;
      return parse_literal();
    }
    fail(std::string("expected ") + role + " term");
  }

  void expect_end_of_statement() {
    skip_ws();
    if (peek() != '.') fail("expected '.' terminating the statement");
    ++pos;
    skip_ws();
    if (!eof() && peek() != '#') fail("unexpected trailing content after '.'");
  }
};

RdfFormat sniff_format(const std::string& path) {
  std::string p = path;
  if (p.size() > 3 && p.compare(p.size() - 3, 3, ".gz") == 0) p.resize(p.size() - 3);
  auto ends_with = [&](const char* suf) {
    size_t n = strlen(suf);
    return p.size() >= n && p.compare(p.size() - n, n, suf) == 0;
  };
  if (ends_with(".nq") || ends_with(".nquads")) return RdfFormat::nquads;
  if (ends_with(".nt") || ends_with(".ntriples")) return RdfFormat::ntriples;
  // quads are a superset, so default to the permissive reading
  return RdfFormat::nquads;
}

}  // namespace

// ---------------------------------------------------------------------------
// terms
// ---------------------------------------------------------------------------

std::string RdfTerm::lpg_term() const {
  switch (kind) {
    case TermKind::iri: return value;
    case TermKind::blank: return "_:" + value;
    case TermKind::literal: {
      std::string out;
      serialize_term(*this, out);
      return out;
    }
  }
  return value;
}

RdfTerm RdfTerm::from_lpg_term(const std::string& term) {
  if (term.size() >= 2 && term[0] == '_' && term[1] == ':')
    return RdfTerm{TermKind::blank, term.substr(2), {}, {}};
  if (!term.empty() && term[0] == '"') {
    std::string line = term;
    LineScanner sc{line, 0, 1};
    RdfTerm t = sc.parse_literal();
    if (!sc.eof()) throw IntegrityError("malformed literal term: " + term);
    return t;
  }
  return RdfTerm{TermKind::iri, term, {}, {}};
}

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

ParseStats parse_rdf(std::istream& in, RdfFormat format, const ParseOptions& opts,
                     const StatementSink& sink) {
  ParseStats stats;
  std::string line;
  uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    try {
      LineScanner sc{line, lineno, first};
      RdfStatement st;
      st.subject = sc.parse_term("subject", false, true, opts.blank_scope);
      sc.skip_ws();
      st.predicate = sc.parse_iri();
      st.object = sc.parse_term("object", true, true, opts.blank_scope);
      sc.skip_ws();
      if (sc.peek() == '<' || sc.peek() == '_') {
        if (format == RdfFormat::ntriples)
          sc.fail("graph term not allowed in N-Triples input");
        RdfTerm g = sc.parse_term("graph", false, true, opts.blank_scope);
        st.graph = g.lpg_term();
      }
      sc.expect_end_of_statement();
      if (!st.graph && opts.default_graph) st.graph = *opts.default_graph;
      sink(st);
      ++stats.statements;
    } catch (const ParseError& e) {
      if (!opts.lenient) throw;
      ++stats.skipped;
      LOG_DEBUG("skipping malformed line %llu: %s", (unsigned long long)lineno, e.what());
    }
  }
  return stats;
}

ParseStats parse_rdf_file(const std::string& path, std::optional<RdfFormat> format,
                          ParseOptions opts, const StatementSink& sink) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw NotFoundError("cannot open '" + path + "'");
  if (opts.blank_scope.empty()) opts.blank_scope = path;
  RdfFormat fmt = format.value_or(sniff_format(path));
  bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  if (gz) {
    GzipInputStream unzipped(file);
    return parse_rdf(unzipped, fmt, opts, sink);
  }
  return parse_rdf(file, fmt, opts, sink);
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

std::string serialize_statement(const RdfStatement& st, RdfFormat format) {
  std::string out;
  serialize_term(st.subject, out);
  out.push_back(' ');
  out.push_back('<');
  out += st.predicate;
  out.push_back('>');
  out.push_back(' ');
  serialize_term(st.object, out);
  if (format == RdfFormat::nquads && st.graph) {
    out.push_back(' ');
    serialize_term(RdfTerm::from_lpg_term(*st.graph), out);
  }
  out += " .";
  return out;
}

void serialize_rdf(const std::vector<RdfStatement>& statements, RdfFormat format,
                   std::ostream& out) {
  for (const auto& st : statements) out << serialize_statement(st, format) << '\n';
}

// ---------------------------------------------------------------------------
// property-graph view
// ---------------------------------------------------------------------------

void fold_statement_into_builder(GraphBuilder& b, const RdfStatement& st,
                                 const LpgOptions& opts) {
  std::string s_term = st.subject.lpg_term();
  if (st.predicate == opts.rdf_type_iri) {
    // types become vertex labels; the object is not materialized
    b.add_vertex_label(s_term, st.object.lpg_term());
    if (st.graph) b.add_vertex_to_graph(*st.graph, s_term);
    return;
  }
  std::string o_term = st.object.lpg_term();
  if (st.object.kind == TermKind::literal)
    b.add_vertex_property(o_term, "literal", st.object.value);
  b.add_edge_label(s_term, o_term, st.predicate);
  if (st.graph) b.add_edge_to_graph(*st.graph, s_term, o_term);
}

GraphDatabase rdf_to_lpg(const std::vector<RdfStatement>& statements, const LpgOptions& opts,
                         InternerPtr interner) {
  GraphBuilder b(std::move(interner));
  for (const auto& st : statements) fold_statement_into_builder(b, st, opts);
  return b.finish();
}

std::vector<RdfStatement> lpg_to_rdf(const GraphDatabase& g, const LpgOptions& opts) {
  std::vector<RdfStatement> out;
  const Interner& in = *g.interner();

  auto by_term = [&](Symbol a, Symbol b) { return in.str(a) < in.str(b); };

  std::vector<Symbol> verts = g.vertices();
  std::sort(verts.begin(), verts.end(), by_term);

  auto graph_terms = [&](const std::vector<Symbol>& names) {
    std::vector<std::optional<std::string>> gs;
    if (names.empty()) {
      gs.push_back(std::nullopt);
    } else {
      std::vector<Symbol> sorted = names;
      std::sort(sorted.begin(), sorted.end(), by_term);
      for (Symbol n : sorted) gs.emplace_back(in.str(n));
    }
    return gs;
  };

  uint64_t reified = 0;
  for (Symbol v : verts) {
    const std::string& term = in.str(v);
    RdfTerm subject = RdfTerm::from_lpg_term(term);
    bool is_literal_vertex = subject.kind == TermKind::literal;

    std::vector<Symbol> labels = g.labels(v);
    std::sort(labels.begin(), labels.end(), by_term);
    if (is_literal_vertex && (!labels.empty() || !g.out_neighbors(v).empty()))
      throw IntegrityError("literal vertex '" + term + "' cannot act as a subject");

    for (Symbol c : labels)
      for (const auto& gr : graph_terms(g.graphs_of(v)))
        out.push_back({subject, opts.rdf_type_iri, RdfTerm::from_lpg_term(in.str(c)), gr});

    for (const PropKV& p : g.properties(v)) {
      // the ("literal", s) marker of a literal vertex is carried by the term
      if (is_literal_vertex && in.str(p.key) == "literal") continue;
      RdfTerm value{TermKind::literal, in.str(p.value), {}, {}};
      for (const auto& gr : graph_terms(g.graphs_of(v)))
        out.push_back({subject, in.str(p.key), value, gr});
    }

    std::vector<Symbol> targets = g.out_neighbors(v);
    std::sort(targets.begin(), targets.end(), by_term);
    for (Symbol w : targets) {
      RdfTerm object = RdfTerm::from_lpg_term(in.str(w));
      std::vector<Symbol> elabels = g.edge_labels(v, w);
      std::sort(elabels.begin(), elabels.end(), by_term);
      const auto& eprops = g.edge_properties(v, w);
      auto edge_graphs = graph_terms(g.graphs_of_edge(v, w));
      if (elabels.empty()) {
        if (!eprops.empty())
          throw IntegrityError("edge with properties but no label cannot be rendered");
        LOG_DEBUG("omitting unlabeled edge (%s, %s)", term.c_str(), in.str(w).c_str());
        continue;
      }
      if (eprops.empty()) {
        for (Symbol p : elabels)
          for (const auto& gr : edge_graphs) out.push_back({subject, in.str(p), object, gr});
      } else {
        // factor the edge through a fresh vertex carrying the properties
        RdfTerm z{TermKind::blank, "reify#e" + std::to_string(reified++), {}, {}};
        for (Symbol p : elabels)
          for (const auto& gr : edge_graphs) {
            out.push_back({subject, in.str(p), z, gr});
            out.push_back({z, in.str(p), object, gr});
          }
        for (const PropKV& kv : eprops) {
          RdfTerm value{TermKind::literal, in.str(kv.value), {}, {}};
          for (const auto& gr : edge_graphs) out.push_back({z, in.str(kv.key), value, gr});
        }
      }
    }
  }
  return out;
}

}  // namespace fluidsum
