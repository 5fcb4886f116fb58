#include "fluidsum/summary_model.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <nlohmann/json.hpp>
#include <unordered_map>

#include "fluidsum/errors.hpp"

namespace fluidsum {

namespace {

// --------------------------------------------------------------------------
// canonical byte writer (little-endian, length-prefixed strings)
// --------------------------------------------------------------------------

struct ByteWriter {
  std::string buf;
  void u8(uint8_t v) { buf.push_back(static_cast<char>(v)); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void lp(std::string_view s) {
    u32(static_cast<uint32_t>(s.size()));
    buf.append(s.data(), s.size());
  }
};

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

const char* kind_name(ElemKind k) {
  switch (k) {
    case ElemKind::top: return "top";
    case ElemKind::identity: return "id";
    case ElemKind::oc: return "oc";
    case ElemKind::pc: return "pc";
    case ElemKind::poc: return "poc";
    case ElemKind::cse: return "cse";
  }
  return "?";
}

ElemKind kind_from_name(const std::string& s) {
  if (s == "top") return ElemKind::top;
  if (s == "id" || s == "identity") return ElemKind::identity;
  if (s == "oc") return ElemKind::oc;
  if (s == "pc") return ElemKind::pc;
  if (s == "poc") return ElemKind::poc;
  if (s == "cse") return ElemKind::cse;
  throw IntegrityError("unknown schema element variant '" + s + "'");
}

void spec_bytes(const SchemaElement& e, ByteWriter& w) {
  w.u8(static_cast<uint8_t>(e.kind));
  w.u8(static_cast<uint8_t>(e.params.direction));
  if (e.params.label_filter) {
    w.u8(e.params.label_filter->exclude ? 2 : 1);
    auto labels = sorted_unique(e.params.label_filter->labels);
    w.u32(static_cast<uint32_t>(labels.size()));
    for (const auto& l : labels) w.lp(l);
  } else {
    w.u8(0);
  }
  if (e.params.set_filter) {
    w.u8(1);
    auto set = sorted_unique(*e.params.set_filter);
    w.u32(static_cast<uint32_t>(set.size()));
    for (const auto& s : set) w.lp(s);
  } else {
    w.u8(0);
  }
  if (e.kind == ElemKind::cse) {
    w.u32(static_cast<uint32_t>(e.params.chaining_k));
    spec_bytes(*e.subject, w);
    spec_bytes(*e.predicate, w);
    spec_bytes(*e.object, w);
  }
}

uint64_t elem_id_for(const SchemaElement& e, const std::string& rdf_type) {
  ByteWriter w;
  spec_bytes(e, w);
  w.lp(rdf_type);
  Hash128 h = digest(w.buf);
  return h.hi ^ h.lo;
}

}  // namespace

// ---------------------------------------------------------------------------
// schema element specs
// ---------------------------------------------------------------------------

std::string SchemaElement::canonical_spec() const {
  ByteWriter w;
  spec_bytes(*this, w);
  w.lp(rdf_type_iri);
  auto merged = sorted_unique(instance_merge);
  w.u32(static_cast<uint32_t>(merged.size()));
  for (const auto& l : merged) w.lp(l);
  return std::move(w.buf);
}

void SchemaElement::validate() const {
  if (params.label_filter && params.label_filter->labels.empty())
    throw IntegrityError("label filter must name at least one label");
  if (params.set_filter && params.set_filter->empty())
    throw IntegrityError("set filter must name at least one symbol");
  if (kind == ElemKind::cse) {
    if (!subject || !predicate || !object)
      throw IntegrityError("complex element needs subject, predicate and object relations");
    if (predicate->kind != ElemKind::identity && predicate->kind != ElemKind::top)
      throw IntegrityError("predicate position admits only identity or top");
    if (subject->kind == ElemKind::cse || object->kind == ElemKind::cse)
      throw IntegrityError("nest complex elements via chaining_k, not via positions");
    if (params.chaining_k < 1 || params.chaining_k > 16)
      throw IntegrityError("chaining_k out of range [1, 16]");
    subject->validate();
    predicate->validate();
    object->validate();
  } else if (subject || predicate || object) {
    throw IntegrityError("simple elements take no position relations");
  }
  if (rdf_type_iri.empty()) throw IntegrityError("rdf_type_iri must be non-empty");
}

SchemaElement classcoll_model(const std::string& rdf_type) {
  SchemaElement m;
  m.kind = ElemKind::oc;
  m.params.label_filter = LabelFilterSpec{false, {rdf_type}};
  m.rdf_type_iri = rdf_type;
  return m;
}

SchemaElement attrcoll_model(const std::string& rdf_type) {
  SchemaElement m;
  m.kind = ElemKind::pc;
  m.params.label_filter = LabelFilterSpec{true, {rdf_type}};
  m.rdf_type_iri = rdf_type;
  return m;
}

SchemaElement schemex_model(int k, const std::string& rdf_type) {
  SchemaElement m;
  m.kind = ElemKind::cse;
  m.params.chaining_k = k;
  m.rdf_type_iri = rdf_type;
  m.subject = std::make_shared<SchemaElement>(classcoll_model(rdf_type));
  m.object = std::make_shared<SchemaElement>(classcoll_model(rdf_type));
  auto pred = std::make_shared<SchemaElement>();
  pred->kind = ElemKind::identity;
  pred->params.label_filter = LabelFilterSpec{true, {rdf_type}};
  pred->rdf_type_iri = rdf_type;
  m.predicate = std::move(pred);
  return m;
}

SchemaElement predefined_model(const std::string& name, int k, const std::string& rdf_type) {
  if (name == "schemex") return schemex_model(k, rdf_type);
  if (name == "attrcoll") return attrcoll_model(rdf_type);
  if (name == "classcoll") return classcoll_model(rdf_type);
  throw IntegrityError("unknown model '" + name + "' (expected schemex|attrcoll|classcoll)");
}

// ---------------------------------------------------------------------------
// JSON model configuration
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

Direction direction_from(const std::string& s) {
  if (s == "out") return Direction::out;
  if (s == "in") return Direction::in;
  if (s == "both") return Direction::both;
  throw IntegrityError("unknown direction '" + s + "'");
}

const char* direction_name(Direction d) {
  switch (d) {
    case Direction::out: return "out";
    case Direction::in: return "in";
    default: return "both";
  }
}

SchemaElement element_from_json(const json& j, const std::string& rdf_type) {
  if (!j.is_object()) throw IntegrityError("schema element must be a JSON object");
  SchemaElement e;
  e.rdf_type_iri = rdf_type;
  e.kind = kind_from_name(j.at("variant").get<std::string>());
  if (j.contains("direction")) e.params.direction = direction_from(j["direction"].get<std::string>());
  if (j.contains("labels")) {
    const json& lf = j["labels"];
    LabelFilterSpec f;
    if (lf.contains("include")) {
      f.labels = lf["include"].get<std::vector<std::string>>();
    } else if (lf.contains("exclude")) {
      f.exclude = true;
      f.labels = lf["exclude"].get<std::vector<std::string>>();
    } else {
      throw IntegrityError("labels filter needs 'include' or 'exclude'");
    }
    e.params.label_filter = std::move(f);
  }
  if (j.contains("set")) e.params.set_filter = j["set"].get<std::vector<std::string>>();
  if (e.kind == ElemKind::cse) {
    e.params.chaining_k = j.value("k", 1);
    e.subject = std::make_shared<SchemaElement>(element_from_json(j.at("subject"), rdf_type));
    e.predicate = std::make_shared<SchemaElement>(element_from_json(j.at("predicate"), rdf_type));
    e.object = std::make_shared<SchemaElement>(element_from_json(j.at("object"), rdf_type));
  }
  return e;
}

json element_to_json(const SchemaElement& e) {
  json j;
  j["variant"] = kind_name(e.kind);
  if (e.params.direction != Direction::out) j["direction"] = direction_name(e.params.direction);
  if (e.params.label_filter)
    j["labels"][e.params.label_filter->exclude ? "exclude" : "include"] =
        sorted_unique(e.params.label_filter->labels);
  if (e.params.set_filter) j["set"] = sorted_unique(*e.params.set_filter);
  if (e.kind == ElemKind::cse) {
    j["k"] = e.params.chaining_k;
    j["subject"] = element_to_json(*e.subject);
    j["predicate"] = element_to_json(*e.predicate);
    j["object"] = element_to_json(*e.object);
  }
  return j;
}

}  // namespace

SchemaElement parse_model_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("model configuration is not valid JSON: ") + e.what());
  }
  if (j.is_string()) return predefined_model(j.get<std::string>());
  if (!j.is_object()) throw IntegrityError("model configuration must be a JSON object or name");

  std::string rdf_type = j.value("rdf_type", std::string(kRdfTypeIri));
  SchemaElement m;
  if (j.contains("model")) {
    m = predefined_model(j["model"].get<std::string>(), j.value("k", 1), rdf_type);
  } else {
    m = element_from_json(j, rdf_type);
  }
  if (j.contains("instance_merge"))
    m.instance_merge = j["instance_merge"].get<std::vector<std::string>>();
  m.validate();
  return m;
}

std::string model_to_json(const SchemaElement& m) {
  json j = element_to_json(m);
  j["rdf_type"] = m.rdf_type_iri;
  if (!m.instance_merge.empty()) j["instance_merge"] = sorted_unique(m.instance_merge);
  return j.dump();
}

// ---------------------------------------------------------------------------
// compilation
// ---------------------------------------------------------------------------

namespace {

CompiledElement compile_element(const SchemaElement& e, Interner& interner,
                                const std::string& rdf_type) {
  CompiledElement c;
  c.kind = e.kind;
  c.direction = e.params.direction;
  c.chaining_k = e.params.chaining_k;
  c.elem_id = elem_id_for(e, rdf_type);
  if (e.params.label_filter) {
    CompiledFilter f;
    f.exclude = e.params.label_filter->exclude;
    for (const auto& l : e.params.label_filter->labels) f.labels.insert(interner.intern(l));
    c.label_filter = std::move(f);
  }
  if (e.params.set_filter) {
    std::unordered_set<Symbol> s;
    for (const auto& x : *e.params.set_filter) s.insert(interner.intern(x));
    c.set_filter = std::move(s);
  }
  if (e.kind == ElemKind::cse) {
    c.subject = std::make_unique<CompiledElement>(compile_element(*e.subject, interner, rdf_type));
    c.predicate =
        std::make_unique<CompiledElement>(compile_element(*e.predicate, interner, rdf_type));
    c.object = std::make_unique<CompiledElement>(compile_element(*e.object, interner, rdf_type));
  }
  return c;
}

}  // namespace

CompiledModel::CompiledModel(const SchemaElement& spec, Interner& interner)
    : spec_(spec), interner_(&interner) {
  spec_.validate();
  rdf_type_ = interner.intern(spec_.rdf_type_iri);
  root_ = compile_element(spec_, interner, spec_.rdf_type_iri);
  if (spec_.kind == ElemKind::cse) {
    // ids for the element with j chaining levels left; internal tree nodes at
    // depth j are classes of that element
    depth_ids_.resize(static_cast<size_t>(spec_.params.chaining_k) + 1, 0);
    for (int j = 1; j <= spec_.params.chaining_k; ++j) {
      SchemaElement sub = spec_;
      sub.params.chaining_k = j;
      sub.instance_merge.clear();
      depth_ids_[static_cast<size_t>(j)] = elem_id_for(sub, spec_.rdf_type_iri);
    }
  }
}

// ---------------------------------------------------------------------------
// feature extraction
// ---------------------------------------------------------------------------

namespace {

bool set_keeps(const CompiledElement& el, Symbol s) {
  return !el.set_filter || el.set_filter->count(s) > 0;
}

}  // namespace

// `sym` may be a virtual target that is not a materialized vertex; all
// accessors degrade to empty sets for those, which is exactly the feature
// set of a bare vertex.
std::vector<Section> extract_position_sections(const CompiledElement& el, const GraphDatabase& g,
                                                Symbol sym, Symbol rdf_type) {
  const Interner& in = *g.interner();
  std::vector<Section> sections;
  auto add_section = [&](char tag) -> Section& {
    sections.push_back(Section{tag, {}});
    return sections.back();
  };

  bool want_out = el.direction != Direction::in;
  bool want_in = el.direction != Direction::out;
  bool type_passes = el.label_passes(rdf_type);

  switch (el.kind) {
    case ElemKind::top:
      break;
    case ElemKind::identity: {
      add_section('i').entries.push_back(in.str(sym));
      break;
    }
    case ElemKind::oc:
    case ElemKind::poc: {
      bool pairs = el.kind == ElemKind::poc;
      // A neighbor is reachable when some edge label passes the label filter;
      // the set filter then prunes the emitted symbols (neighbors, labels)
      // without affecting reachability. A neighbor reachable both by real
      // edges and by a virtual type instance contributes one entry.
      using NeighborLabels = std::map<Symbol, std::vector<std::string>>;
      auto collect = [&](Symbol from, Symbol to, NeighborLabels& acc) {
        bool reachable = false;
        std::vector<std::string> labs;
        for (Symbol p : g.edge_labels(from, to))
          if (el.label_passes(p)) {
            reachable = true;
            if (set_keeps(el, p)) labs.push_back(in.str(p));
          }
        Symbol nbr = from == sym ? to : from;
        if (!reachable || !set_keeps(el, nbr)) return;
        auto& slot = acc[nbr];
        slot.insert(slot.end(), labs.begin(), labs.end());
      };
      // built locally: add_section may reallocate `sections`, so references
      // into it must not outlive a second call
      auto emit = [&](char nbr_tag, char pair_tag, const NeighborLabels& by_neighbor) {
        Section N{nbr_tag, {}};
        Section P{pair_tag, {}};
        for (const auto& [w, labels] : by_neighbor) {
          N.entries.push_back(in.str(w));
          if (pairs) {
            auto sorted = sorted_unique(labels);
            ByteWriter pw;
            pw.lp(in.str(w));
            pw.u32(static_cast<uint32_t>(sorted.size()));
            for (const auto& s : sorted) pw.lp(s);
            P.entries.push_back(std::move(pw.buf));
          }
        }
        sections.push_back(std::move(N));
        if (pairs) sections.push_back(std::move(P));
      };
      if (want_out) {
        Section& L = add_section('L');
        if (type_passes)
          for (Symbol l : g.labels(sym))
            if (set_keeps(el, l)) L.entries.push_back(in.str(l));
        NeighborLabels out_nbrs;
        for (Symbol w : g.out_neighbors(sym)) collect(sym, w, out_nbrs);
        emit('N', 'P', out_nbrs);
      }
      if (want_in) {
        NeighborLabels in_nbrs;
        for (Symbol w : g.in_neighbors(sym)) collect(w, sym, in_nbrs);
        if (type_passes) {
          // incoming virtual type instances: sym used as a label
          for (Symbol s : g.label_extent(sym)) {
            if (!set_keeps(el, s)) continue;
            auto& slot = in_nbrs[s];
            if (set_keeps(el, rdf_type)) slot.push_back(in.str(rdf_type));
          }
        }
        emit('M', 'Q', in_nbrs);
      }
      break;
    }
    case ElemKind::pc: {
      if (want_out) {
        Section& E = add_section('E');
        for (Symbol w : g.out_neighbors(sym))
          for (Symbol p : g.edge_labels(sym, w))
            if (el.label_passes(p) && set_keeps(el, p)) E.entries.push_back(in.str(p));
        // virtual rdf:type instance doubles as the label-emptiness flag
        if (type_passes && !g.labels(sym).empty() && set_keeps(el, rdf_type))
          E.entries.push_back(in.str(rdf_type));
      }
      if (want_in) {
        Section& F = add_section('F');
        for (Symbol w : g.in_neighbors(sym))
          for (Symbol p : g.edge_labels(w, sym))
            if (el.label_passes(p) && set_keeps(el, p)) F.entries.push_back(in.str(p));
        if (type_passes && !g.label_extent(sym).empty() && set_keeps(el, rdf_type))
          F.entries.push_back(in.str(rdf_type));
      }
      break;
    }
    case ElemKind::cse:
      throw IntegrityError("extract_position_sections: complex element is not a position");
  }

  for (auto& s : sections) {
    std::sort(s.entries.begin(), s.entries.end());
    s.entries.erase(std::unique(s.entries.begin(), s.entries.end()), s.entries.end());
  }
  std::sort(sections.begin(), sections.end(),
            [](const Section& a, const Section& b) { return a.tag < b.tag; });
  return sections;
}

// ---------------------------------------------------------------------------
// canonical node encoding
// ---------------------------------------------------------------------------

std::string edge_class_bytes(uint8_t dir, bool universal, std::string_view label) {
  ByteWriter w;
  w.u8(dir);
  w.u8(universal ? 'u' : 'l');
  if (!universal) w.lp(label);
  return std::move(w.buf);
}

std::string SummaryEdge::class_bytes() const { return edge_class_bytes(dir, universal, label); }

std::string encode_node_layout(uint64_t elem_id, const std::vector<Section>& sections,
                               const std::vector<std::pair<std::string, Hash128>>& edges) {
  ByteWriter w;
  w.u8('n');
  w.u64(elem_id);
  w.u8(static_cast<uint8_t>(sections.size()));
  for (const auto& s : sections) {
    w.u8(static_cast<uint8_t>(s.tag));
    w.u32(static_cast<uint32_t>(s.entries.size()));
    for (const auto& e : s.entries) w.lp(e);
  }
  w.u32(static_cast<uint32_t>(edges.size()));
  for (const auto& [cls, h] : edges) {
    w.buf += cls;
    uint8_t raw[16];
    h.to_bytes(raw);
    w.buf.append(reinterpret_cast<const char*>(raw), 16);
  }
  return std::move(w.buf);
}

std::string NodeLayout::encode() const {
  std::vector<std::pair<std::string, Hash128>> pairs;
  pairs.reserve(edges.size());
  for (const auto& e : edges) pairs.emplace_back(e.class_bytes(), e.child);
  return encode_node_layout(elem_id, sections, pairs);
}

NodeLayout decode_node_layout(std::string_view bytes) {
  size_t pos = 0;
  auto need = [&](size_t n) {
    if (pos + n > bytes.size()) throw IntegrityError("summary node record truncated");
  };
  auto u8 = [&]() -> uint8_t {
    need(1);
    return static_cast<uint8_t>(bytes[pos++]);
  };
  auto u32 = [&]() -> uint32_t {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(u8()) << (8 * i);
    return v;
  };
  auto u64 = [&]() -> uint64_t {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(u8()) << (8 * i);
    return v;
  };
  auto str = [&]() -> std::string {
    uint32_t len = u32();
    need(len);
    std::string s(bytes.substr(pos, len));
    pos += len;
    return s;
  };

  if (u8() != 'n') throw IntegrityError("summary node record has a bad leading byte");
  NodeLayout n;
  n.elem_id = u64();
  uint8_t nsections = u8();
  for (uint8_t i = 0; i < nsections; ++i) {
    Section s;
    s.tag = static_cast<char>(u8());
    uint32_t count = u32();
    s.entries.reserve(count);
    for (uint32_t j = 0; j < count; ++j) s.entries.push_back(str());
    n.sections.push_back(std::move(s));
  }
  uint32_t nedges = u32();
  for (uint32_t i = 0; i < nedges; ++i) {
    LayoutEdge e;
    e.dir = u8();
    uint8_t tag = u8();
    if (tag == 'l') {
      e.label = str();
    } else if (tag == 'u') {
      e.universal = true;
    } else {
      throw IntegrityError("summary node record has an unknown edge class tag");
    }
    need(16);
    e.child = Hash128::from_bytes(reinterpret_cast<const uint8_t*>(bytes.data() + pos));
    pos += 16;
    n.edges.push_back(std::move(e));
  }
  if (pos != bytes.size()) throw IntegrityError("summary node record has trailing bytes");
  return n;
}

namespace {

std::string encode_summary_node(const SummaryNode& node, const std::vector<Hash128>& hashes) {
  std::vector<std::pair<std::string, Hash128>> edges;
  edges.reserve(node.edges.size());
  for (const auto& e : node.edges) edges.emplace_back(e.class_bytes(), hashes[e.child]);
  return encode_node_layout(node.elem_id, node.sections, edges);
}

void canonicalize_edges(SummaryNode& node, const std::vector<Hash128>& hashes) {
  std::vector<std::string> cls(node.edges.size());
  for (size_t i = 0; i < node.edges.size(); ++i) cls[i] = node.edges[i].class_bytes();
  std::vector<size_t> order(node.edges.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (cls[a] != cls[b]) return cls[a] < cls[b];
    return hashes[node.edges[a].child] < hashes[node.edges[b].child];
  });
  // identical (class, child digest) references collapse into one edge; the
  // comparison is on digests, not indices, so structurally equal subtrees
  // reached through different symbols still merge
  std::vector<SummaryEdge> dedup;
  dedup.reserve(node.edges.size());
  size_t last_kept = 0;
  for (size_t idx : order) {
    if (!dedup.empty() && cls[idx] == cls[last_kept] &&
        hashes[node.edges[idx].child] == hashes[node.edges[last_kept].child])
      continue;
    dedup.push_back(node.edges[idx]);
    last_kept = idx;
  }
  node.edges = std::move(dedup);
}

}  // namespace

uint64_t VertexSummary::tree_vertex_count() const {
  // Children are counted once per distinct class: equal subtrees reached
  // through different neighbors may occupy separate slots (and materialized
  // trees share one slot across parents), so dedup goes by digest. No index
  // ordering is assumed; subtree sizes are resolved with an explicit stack.
  if (nodes.empty()) return 0;
  std::vector<uint64_t> size(nodes.size(), 0);  // 0: not yet computed
  std::vector<uint32_t> stack{0};
  while (!stack.empty()) {
    uint32_t i = stack.back();
    if (size[i] != 0) {
      stack.pop_back();
      continue;
    }
    bool ready = true;
    for (const auto& e : nodes[i].edges)
      if (size[e.child] == 0) {
        stack.push_back(e.child);
        ready = false;
      }
    if (!ready) continue;
    uint64_t s = 1;
    std::set<Hash128> seen;
    for (const auto& e : nodes[i].edges)
      if (seen.insert(hashes[e.child]).second) s += size[e.child];
    size[i] = s;
    stack.pop_back();
  }
  return size[0];
}

std::string VertexSummary::canonical_bytes(bool deep) const {
  if (nodes.empty()) return {};
  if (!deep) return encode_summary_node(nodes[0], hashes);
  std::vector<std::string> memo(nodes.size());
  std::function<const std::string&(uint32_t)> deep_bytes = [&](uint32_t i) -> const std::string& {
    if (!memo[i].empty()) return memo[i];
    const SummaryNode& n = nodes[i];
    ByteWriter w;
    w.u8('D');
    w.u64(n.elem_id);
    w.u8(static_cast<uint8_t>(n.sections.size()));
    for (const auto& s : n.sections) {
      w.u8(static_cast<uint8_t>(s.tag));
      w.u32(static_cast<uint32_t>(s.entries.size()));
      for (const auto& e : s.entries) w.lp(e);
    }
    w.u32(static_cast<uint32_t>(n.edges.size()));
    for (const auto& e : n.edges) {
      w.buf += e.class_bytes();
      w.lp(deep_bytes(e.child));
    }
    memo[i] = std::move(w.buf);
    return memo[i];
  };
  return deep_bytes(0);
}

// ---------------------------------------------------------------------------
// summary construction
// ---------------------------------------------------------------------------

// One entry per (edge, passing label) plus virtual type instances, all gated
// by the complex element's and the predicate relation's filters.
std::vector<PredicateInstance> collect_predicate_instances(const CompiledModel& m,
                                                           const GraphDatabase& g, Symbol sym) {
  const CompiledElement& cse = m.root();
  if (cse.kind != ElemKind::cse)
    throw IntegrityError("collect_predicate_instances: model has no predicate relation");
  Symbol rdf_type = m.rdf_type();
  const CompiledElement* pred = cse.predicate.get();
  auto passes = [&](Symbol p) {
    if (!cse.label_passes(p) || !set_keeps(cse, p)) return false;
    if (pred && (!pred->label_passes(p) || !set_keeps(*pred, p))) return false;
    return true;
  };
  std::vector<PredicateInstance> out;
  if (cse.direction != Direction::in) {
    for (Symbol w : g.out_neighbors(sym))
      for (Symbol p : g.edge_labels(sym, w))
        if (passes(p)) out.push_back({0, p, w});
    if (passes(rdf_type))
      for (Symbol l : g.labels(sym)) out.push_back({0, rdf_type, l});
  }
  if (cse.direction != Direction::out) {
    for (Symbol w : g.in_neighbors(sym))
      for (Symbol p : g.edge_labels(w, sym))
        if (passes(p)) out.push_back({1, p, w});
    if (passes(rdf_type))
      for (Symbol s : g.label_extent(sym)) out.push_back({1, rdf_type, s});
  }
  return out;
}

namespace {

struct TreeBuilder {
  const CompiledModel& m;
  const GraphDatabase& g;
  VertexSummary vs;
  std::unordered_map<uint64_t, uint32_t> memo;  // (symbol << 8 | depth) -> node index

  uint32_t build(Symbol sym, int depth) {
    uint64_t key = (static_cast<uint64_t>(sym) << 8) | static_cast<uint8_t>(depth);
    if (auto it = memo.find(key); it != memo.end()) return it->second;

    SummaryNode node;
    if (depth == 0) {
      const CompiledElement& obj = *m.root().object;
      node.elem_id = obj.elem_id;
      node.sections = extract_position_sections(obj, g, sym, m.rdf_type());
    } else {
      node.elem_id = m.depth_elem_id(depth);
      node.sections = extract_position_sections(*m.root().subject, g, sym, m.rdf_type());
      bool universal = m.root().predicate->kind == ElemKind::top;
      for (const PredicateInstance& inst : collect_predicate_instances(m, g, sym)) {
        uint32_t child = build(inst.target, depth - 1);
        SummaryEdge e;
        e.dir = inst.dir;
        e.universal = universal;
        if (!universal) e.label = g.interner()->str(inst.label);
        e.child = child;
        node.edges.push_back(std::move(e));
      }
      canonicalize_edges(node, vs.hashes);
    }
    vs.nodes.push_back(std::move(node));
    vs.hashes.push_back(digest(encode_summary_node(vs.nodes.back(), vs.hashes)));
    uint32_t idx = static_cast<uint32_t>(vs.nodes.size() - 1);
    memo.emplace(key, idx);
    return idx;
  }
};

// post-order construction leaves the root at the back; flip indices so the
// root sits at 0 and children always follow their parents
void reindex_root_first(VertexSummary& vs) {
  size_t n = vs.nodes.size();
  if (n <= 1) return;
  std::vector<SummaryNode> nodes(n);
  std::vector<Hash128> hashes(n);
  for (size_t i = 0; i < n; ++i) {
    nodes[n - 1 - i] = std::move(vs.nodes[i]);
    hashes[n - 1 - i] = vs.hashes[i];
  }
  for (auto& node : nodes)
    for (auto& e : node.edges) e.child = static_cast<uint32_t>(n - 1 - e.child);
  vs.nodes = std::move(nodes);
  vs.hashes = std::move(hashes);
}

VertexSummary single_node_summary(const CompiledElement& el, const CompiledModel& m,
                                  const GraphDatabase& g, Symbol v) {
  VertexSummary vs;
  SummaryNode node;
  node.elem_id = el.elem_id;
  node.sections = extract_position_sections(el, g, v, m.rdf_type());
  vs.nodes.push_back(std::move(node));
  vs.hashes.push_back(digest(encode_summary_node(vs.nodes[0], vs.hashes)));
  return vs;
}

}  // namespace

VertexSummary extract_vertex_schema(const CompiledModel& m, const GraphDatabase& g, Symbol v) {
  if (!g.has_vertex(v))
    throw NotFoundError("extract_vertex_schema: unknown vertex " + std::to_string(v));
  const CompiledElement& el =
      m.root().kind == ElemKind::cse ? *m.root().subject : m.root();
  return single_node_summary(el, m, g, v);
}

VertexSummary build_vertex_summary(const CompiledModel& m, const GraphDatabase& g, Symbol v) {
  if (!g.has_vertex(v))
    throw NotFoundError("build_vertex_summary: unknown vertex " + std::to_string(v));
  if (m.root().kind != ElemKind::cse) return single_node_summary(m.root(), m, g, v);
  TreeBuilder tb{m, g, {}, {}};
  tb.build(v, m.root().chaining_k);
  reindex_root_first(tb.vs);
  return std::move(tb.vs);
}

bool equivalent(const CompiledModel& m, const GraphDatabase& g, Symbol v, Symbol w) {
  return build_vertex_summary(m, g, v).hash() == build_vertex_summary(m, g, w).hash();
}

VertexSummary materialize_summary(Hash128 root,
                                  const std::function<const NodeLayout*(Hash128)>& node_of) {
  VertexSummary vs;
  std::unordered_map<Hash128, uint32_t> index;
  std::function<uint32_t(Hash128)> visit = [&](Hash128 nh) -> uint32_t {
    if (auto it = index.find(nh); it != index.end()) return it->second;
    const NodeLayout* layout = node_of(nh);
    if (!layout) throw IntegrityError("summary tree is missing node " + nh.hex());
    uint32_t my = static_cast<uint32_t>(vs.nodes.size());
    vs.nodes.push_back(SummaryNode{layout->elem_id, layout->sections, {}});
    vs.hashes.push_back(nh);
    index.emplace(nh, my);
    for (const auto& e : layout->edges) {
      uint32_t c = visit(e.child);
      vs.nodes[my].edges.push_back(SummaryEdge{e.dir, e.universal, e.label, c});
    }
    return my;
  };
  visit(root);
  return vs;
}

// ---------------------------------------------------------------------------
// instance merge
// ---------------------------------------------------------------------------

namespace {

struct UnionFind {
  std::unordered_map<Symbol, Symbol> parent;
  Symbol find(Symbol x) {
    auto it = parent.find(x);
    if (it == parent.end()) return x;
    Symbol root = find(it->second);
    parent[x] = root;
    return root;
  }
  void unite(Symbol a, Symbol b) {
    Symbol ra = find(a), rb = find(b);
    if (ra != rb) parent[ra] = rb;
  }
};

}  // namespace

GraphDatabase instance_merge(const GraphDatabase& g,
                             const std::vector<std::string>& merge_labels) {
  if (merge_labels.empty()) return g;
  const Interner& in = *g.interner();
  std::unordered_set<Symbol> mls;
  for (const auto& l : merge_labels)
    if (auto s = in.find(l)) mls.insert(*s);
  if (mls.empty()) return g;

  UnionFind uf;
  auto edges = g.edge_list();
  for (const auto& [u, w] : edges) {
    for (Symbol p : g.edge_labels(u, w))
      if (mls.count(p)) {
        uf.unite(u, w);
        break;
      }
  }

  // representative: lexicographically smallest term of the component
  std::unordered_map<Symbol, Symbol> rep;
  for (Symbol v : g.vertices()) {
    Symbol root = uf.find(v);
    auto it = rep.find(root);
    if (it == rep.end() || in.str(v) < in.str(it->second)) rep[root] = v;
  }
  auto resolve = [&](Symbol v) { return rep.at(uf.find(v)); };

  GraphBuilder b(g.interner());
  for (Symbol v : g.vertices()) {
    const std::string& rterm = in.str(resolve(v));
    b.add_vertex(rterm);
    for (Symbol l : g.labels(v)) b.add_vertex_label(rterm, in.str(l));
    for (const PropKV& p : g.properties(v)) b.add_vertex_property(rterm, in.str(p.key), in.str(p.value));
    for (Symbol gr : g.graphs_of(v)) b.add_vertex_to_graph(in.str(gr), rterm);
  }
  for (const auto& [u, w] : edges) {
    Symbol ru = resolve(u), rw = resolve(w);
    const std::string& su = in.str(ru);
    const std::string& sw = in.str(rw);
    bool self_loop = ru == rw;
    std::vector<Symbol> kept;
    for (Symbol p : g.edge_labels(u, w))
      if (!self_loop || !mls.count(p)) kept.push_back(p);
    const auto& props = g.edge_properties(u, w);
    if (self_loop && kept.empty() && props.empty()) continue;
    b.add_edge(su, sw);
    for (Symbol p : kept) b.add_edge_label(su, sw, in.str(p));
    for (const PropKV& p : props) b.add_edge_property(su, sw, in.str(p.key), in.str(p.value));
    for (Symbol gr : g.graphs_of_edge(u, w)) b.add_edge_to_graph(in.str(gr), su, sw);
  }
  return b.finish();
}

}  // namespace fluidsum
