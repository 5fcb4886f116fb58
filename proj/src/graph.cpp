#include "fluidsum/graph.hpp"

#include <algorithm>

#include "fluidsum/errors.hpp"

namespace fluidsum {

namespace {

const std::vector<Symbol> kEmptySymbols;
const std::vector<PropKV> kEmptyProps;

template <typename T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

template <typename T>
bool erase_value(std::vector<T>& v, const T& x) {
  auto it = std::find(v.begin(), v.end(), x);
  if (it == v.end()) return false;
  v.erase(it);
  return true;
}

}  // namespace

bool ChangeSet::empty() const {
  return add_vertices.empty() && remove_vertices.empty() && add_edges.empty() &&
         remove_edges.empty() && add_vertex_labels.empty() && remove_vertex_labels.empty() &&
         add_edge_labels.empty() && remove_edge_labels.empty() && add_vertex_props.empty() &&
         remove_vertex_props.empty() && add_vertex_memberships.empty() &&
         remove_vertex_memberships.empty() && add_edge_memberships.empty() &&
         remove_edge_memberships.empty();
}

// ---------------------------------------------------------------------------
// GraphDatabase accessors
// ---------------------------------------------------------------------------

bool GraphDatabase::has_vertex(std::string_view term) const {
  auto sym = interner_->find(term);
  return sym && vertex_set_.count(*sym) > 0;
}

std::vector<std::pair<Symbol, Symbol>> GraphDatabase::edge_list() const {
  std::vector<std::pair<Symbol, Symbol>> out;
  out.reserve(edge_labels_.size());
  for (const auto& [key, _] : edge_labels_) out.emplace_back(edge_src(key), edge_dst(key));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Symbol> GraphDatabase::neighbors(Symbol v, Direction dir) const {
  if (!has_vertex(v)) throw NotFoundError("neighbors: unknown vertex " + std::to_string(v));
  if (dir == Direction::out) return out_neighbors(v);
  if (dir == Direction::in) return in_neighbors(v);
  std::vector<Symbol> merged = out_neighbors(v);
  const auto& in = in_neighbors(v);
  merged.insert(merged.end(), in.begin(), in.end());
  sort_unique(merged);
  return merged;
}

size_t GraphDatabase::degree(Symbol v, Direction dir) const {
  if (!has_vertex(v)) throw NotFoundError("degree: unknown vertex " + std::to_string(v));
  size_t out = 0, in = 0;
  if (auto it = out_.find(v); it != out_.end()) out = it->second.size();
  if (auto it = in_.find(v); it != in_.end()) in = it->second.size();
  switch (dir) {
    case Direction::out: return out;
    case Direction::in: return in;
    default: return out + in;
  }
}

const std::vector<Symbol>& GraphDatabase::out_neighbors(Symbol v) const {
  auto it = out_.find(v);
  return it == out_.end() ? kEmptySymbols : it->second;
}

const std::vector<Symbol>& GraphDatabase::in_neighbors(Symbol v) const {
  auto it = in_.find(v);
  return it == in_.end() ? kEmptySymbols : it->second;
}

const std::vector<Symbol>& GraphDatabase::labels(Symbol v) const {
  auto it = vertex_labels_.find(v);
  return it == vertex_labels_.end() ? kEmptySymbols : it->second;
}

const std::vector<Symbol>& GraphDatabase::edge_labels(Symbol src, Symbol dst) const {
  auto it = edge_labels_.find(edge_key(src, dst));
  return it == edge_labels_.end() ? kEmptySymbols : it->second;
}

const std::vector<PropKV>& GraphDatabase::properties(Symbol v) const {
  auto it = vertex_props_.find(v);
  return it == vertex_props_.end() ? kEmptyProps : it->second;
}

const std::vector<PropKV>& GraphDatabase::edge_properties(Symbol src, Symbol dst) const {
  auto it = edge_props_.find(edge_key(src, dst));
  return it == edge_props_.end() ? kEmptyProps : it->second;
}

const std::vector<Symbol>& GraphDatabase::graphs_of(Symbol v) const {
  auto it = vertex_graphs_.find(v);
  return it == vertex_graphs_.end() ? kEmptySymbols : it->second;
}

std::vector<Symbol> GraphDatabase::graphs_of_edge(Symbol src, Symbol dst) const {
  std::vector<Symbol> names;
  EdgeKey key = edge_key(src, dst);
  for (const auto& g : graphs_)
    if (g.edges.count(key)) names.push_back(g.name);
  sort_unique(names);
  return names;
}

const std::vector<Symbol>& GraphDatabase::label_extent(Symbol label) const {
  auto it = label_extent_.find(label);
  return it == label_extent_.end() ? kEmptySymbols : it->second;
}

// ---------------------------------------------------------------------------
// derived structures
// ---------------------------------------------------------------------------

void GraphDatabase::rebuild_derived() {
  vertices_.assign(vertex_set_.begin(), vertex_set_.end());
  std::sort(vertices_.begin(), vertices_.end());

  out_.clear();
  in_.clear();
  for (const auto& [key, _] : edge_labels_) {
    out_[edge_src(key)].push_back(edge_dst(key));
    in_[edge_dst(key)].push_back(edge_src(key));
  }
  for (auto& [_, v] : out_) sort_unique(v);
  for (auto& [_, v] : in_) sort_unique(v);

  for (auto& [_, v] : vertex_labels_) sort_unique(v);
  for (auto& [_, v] : edge_labels_) sort_unique(v);
  for (auto& [_, v] : vertex_props_) sort_unique(v);
  for (auto& [_, v] : edge_props_) sort_unique(v);

  std::erase_if(vertex_labels_, [](const auto& kv) { return kv.second.empty(); });
  std::erase_if(vertex_props_, [](const auto& kv) { return kv.second.empty(); });
  std::erase_if(edge_props_, [](const auto& kv) { return kv.second.empty(); });

  std::sort(graphs_.begin(), graphs_.end(),
            [](const NamedGraph& a, const NamedGraph& b) { return a.name < b.name; });

  vertex_graphs_.clear();
  for (const auto& g : graphs_)
    for (Symbol v : g.vertices) vertex_graphs_[v].push_back(g.name);
  for (auto& [_, v] : vertex_graphs_) sort_unique(v);

  label_extent_.clear();
  for (const auto& [v, labels] : vertex_labels_)
    for (Symbol l : labels) label_extent_[l].push_back(v);
  for (auto& [_, v] : label_extent_) sort_unique(v);

  max_degree_ = 0;
  for (Symbol v : vertices_) {
    size_t d = 0;
    if (auto it = out_.find(v); it != out_.end()) d += it->second.size();
    if (auto it = in_.find(v); it != in_.end()) d += it->second.size();
    max_degree_ = std::max(max_degree_, d);
  }
}

// ---------------------------------------------------------------------------
// change application
// ---------------------------------------------------------------------------

GraphDatabase GraphDatabase::apply(const ChangeSet& c) const {
  GraphDatabase g = *this;  // snapshots share the interner; containers are copied

  auto intern = [&](std::string_view s) { return g.interner_->intern(s); };
  auto known = [&](std::string_view s) -> std::optional<Symbol> { return g.interner_->find(s); };

  auto drop_edge = [&](EdgeKey key) {
    g.edge_labels_.erase(key);
    g.edge_props_.erase(key);
    for (auto& mg : g.graphs_) mg.edges.erase(key);
  };

  // removals first, coarsest last so cascades see a consistent picture
  for (const auto& [s, d, l] : c.remove_edge_labels) {
    auto ss = known(s), ds = known(d), ls = known(l);
    if (!ss || !ds || !ls) continue;
    auto it = g.edge_labels_.find(edge_key(*ss, *ds));
    if (it != g.edge_labels_.end()) erase_value(it->second, *ls);
  }
  for (const auto& [s, d] : c.remove_edges) {
    auto ss = known(s), ds = known(d);
    if (ss && ds) drop_edge(edge_key(*ss, *ds));
  }
  for (const auto& [t, l] : c.remove_vertex_labels) {
    auto ts = known(t), ls = known(l);
    if (!ts || !ls) continue;
    auto it = g.vertex_labels_.find(*ts);
    if (it != g.vertex_labels_.end()) erase_value(it->second, *ls);
  }
  for (const auto& [t, k, v] : c.remove_vertex_props) {
    auto ts = known(t), ks = known(k), vs = known(v);
    if (!ts || !ks || !vs) continue;
    auto it = g.vertex_props_.find(*ts);
    if (it != g.vertex_props_.end()) erase_value(it->second, PropKV{*ks, *vs});
  }
  for (const auto& [name, t] : c.remove_vertex_memberships) {
    auto ns = known(name), ts = known(t);
    if (!ns || !ts) continue;
    for (auto& mg : g.graphs_)
      if (mg.name == *ns) {
        mg.vertices.erase(*ts);
        // closure: membership of incident edges cannot outlive the endpoint
        std::erase_if(mg.edges, [&](EdgeKey k) { return edge_src(k) == *ts || edge_dst(k) == *ts; });
      }
  }
  for (const auto& [name, s, d] : c.remove_edge_memberships) {
    auto ns = known(name), ss = known(s), ds = known(d);
    if (!ns || !ss || !ds) continue;
    for (auto& mg : g.graphs_)
      if (mg.name == *ns) mg.edges.erase(edge_key(*ss, *ds));
  }
  for (const auto& t : c.remove_vertices) {
    auto ts = known(t);
    if (!ts || !g.vertex_set_.count(*ts)) continue;
    Symbol v = *ts;
    std::vector<EdgeKey> incident;
    for (const auto& [key, _] : g.edge_labels_)
      if (edge_src(key) == v || edge_dst(key) == v) incident.push_back(key);
    for (EdgeKey key : incident) drop_edge(key);
    g.vertex_labels_.erase(v);
    g.vertex_props_.erase(v);
    for (auto& mg : g.graphs_) mg.vertices.erase(v);
    g.vertex_set_.erase(v);
  }

  for (const auto& t : c.add_vertices) g.vertex_set_.insert(intern(t));
  for (const auto& [t, l] : c.add_vertex_labels) {
    Symbol ts = intern(t);
    if (!g.vertex_set_.count(ts))
      throw IntegrityError("add_vertex_label: unknown vertex '" + t + "'");
    g.vertex_labels_[ts].push_back(intern(l));
  }
  for (const auto& [t, k, v] : c.add_vertex_props) {
    Symbol ts = intern(t);
    if (!g.vertex_set_.count(ts))
      throw IntegrityError("add_vertex_prop: unknown vertex '" + t + "'");
    g.vertex_props_[ts].push_back(PropKV{intern(k), intern(v)});
  }
  auto require_vertex = [&](const std::string& t) -> Symbol {
    Symbol s = intern(t);
    if (!g.vertex_set_.count(s))
      throw IntegrityError("edge endpoint '" + t + "' is not a vertex");
    return s;
  };
  for (const auto& [s, d] : c.add_edges) {
    EdgeKey key = edge_key(require_vertex(s), require_vertex(d));
    g.edge_labels_.try_emplace(key);
  }
  for (const auto& [s, d, l] : c.add_edge_labels) {
    EdgeKey key = edge_key(require_vertex(s), require_vertex(d));
    g.edge_labels_[key].push_back(intern(l));
  }
  auto graph_slot = [&](Symbol name) -> NamedGraph& {
    for (auto& mg : g.graphs_)
      if (mg.name == name) return mg;
    g.graphs_.push_back(NamedGraph{name, {}, {}});
    return g.graphs_.back();
  };
  for (const auto& [name, t] : c.add_vertex_memberships)
    graph_slot(intern(name)).vertices.insert(require_vertex(t));
  for (const auto& [name, s, d] : c.add_edge_memberships) {
    Symbol ss = require_vertex(s), ds = require_vertex(d);
    EdgeKey key = edge_key(ss, ds);
    if (!g.edge_labels_.count(key))
      throw IntegrityError("edge membership for absent edge (" + s + ", " + d + ")");
    NamedGraph& mg = graph_slot(intern(name));
    mg.edges.insert(key);
    mg.vertices.insert(ss);
    mg.vertices.insert(ds);
  }

  // re-establish membership closure: member edges imply member endpoints,
  // and membership never references removed elements
  for (auto& mg : g.graphs_) {
    std::erase_if(mg.vertices, [&](Symbol v) { return !g.vertex_set_.count(v); });
    std::erase_if(mg.edges, [&](EdgeKey k) { return !g.edge_labels_.count(k); });
    for (EdgeKey k : mg.edges) {
      mg.vertices.insert(edge_src(k));
      mg.vertices.insert(edge_dst(k));
    }
  }
  std::erase_if(g.graphs_, [](const NamedGraph& mg) { return mg.vertices.empty() && mg.edges.empty(); });

  g.rebuild_derived();
  return g;
}

// ---------------------------------------------------------------------------
// memory model
// ---------------------------------------------------------------------------

// Cost model, not an allocator measurement: every interned string is charged
// once (bytes + kStringOverhead for index entry and std::string header), every
// hash-map entry is charged kMapNode (node + bucket share) and every vector is
// charged its header plus element payload. The same conventions are used by
// the summary store and the update index so the ratios compared in tests are
// like for like.
namespace {
constexpr uint64_t kStringOverhead = 48;
constexpr uint64_t kMapNode = 56;
constexpr uint64_t kVecHeader = 24;
constexpr uint64_t kSetEntry = 16;
}  // namespace

uint64_t GraphDatabase::approx_bytes() const {
  uint64_t total = 0;
  total += interner_->string_bytes() + interner_->size() * kStringOverhead;
  total += vertices_.size() * sizeof(Symbol) + kVecHeader;
  total += vertex_set_.size() * kSetEntry;
  auto adjacency = [&](const std::unordered_map<Symbol, std::vector<Symbol>>& m) {
    uint64_t b = 0;
    for (const auto& [_, v] : m) b += kMapNode + kVecHeader + v.size() * sizeof(Symbol);
    return b;
  };
  total += adjacency(out_) + adjacency(in_) + adjacency(vertex_labels_) +
           adjacency(vertex_graphs_) + adjacency(label_extent_);
  for (const auto& [_, v] : edge_labels_) total += kMapNode + kVecHeader + v.size() * sizeof(Symbol);
  for (const auto& [_, v] : vertex_props_) total += kMapNode + kVecHeader + v.size() * sizeof(PropKV);
  for (const auto& [_, v] : edge_props_) total += kMapNode + kVecHeader + v.size() * sizeof(PropKV);
  for (const auto& g : graphs_)
    total += kMapNode + (g.vertices.size() + g.edges.size()) * kSetEntry;
  return total;
}

// ---------------------------------------------------------------------------
// GraphBuilder
// ---------------------------------------------------------------------------

Symbol GraphBuilder::add_vertex(std::string_view term) {
  Symbol s = intern(term);
  g_.vertex_set_.insert(s);
  return s;
}

void GraphBuilder::add_vertex_label(std::string_view term, std::string_view label) {
  Symbol v = add_vertex(term);
  g_.vertex_labels_[v].push_back(intern(label));
}

void GraphBuilder::add_edge(std::string_view src, std::string_view dst) {
  Symbol s = add_vertex(src);
  Symbol d = add_vertex(dst);
  g_.edge_labels_.try_emplace(edge_key(s, d));
}

void GraphBuilder::add_edge_label(std::string_view src, std::string_view dst,
                                  std::string_view label) {
  Symbol s = add_vertex(src);
  Symbol d = add_vertex(dst);
  g_.edge_labels_[edge_key(s, d)].push_back(intern(label));
}

void GraphBuilder::add_vertex_property(std::string_view term, std::string_view key,
                                       std::string_view value) {
  Symbol v = add_vertex(term);
  g_.vertex_props_[v].push_back(PropKV{intern(key), intern(value)});
}

void GraphBuilder::add_edge_property(std::string_view src, std::string_view dst,
                                     std::string_view key, std::string_view value) {
  Symbol s = add_vertex(src);
  Symbol d = add_vertex(dst);
  g_.edge_labels_.try_emplace(edge_key(s, d));
  g_.edge_props_[edge_key(s, d)].push_back(PropKV{intern(key), intern(value)});
}

NamedGraph& GraphBuilder::graph_slot(Symbol name) {
  auto it = graph_index_.find(name);
  if (it != graph_index_.end()) return g_.graphs_[it->second];
  graph_index_.emplace(name, g_.graphs_.size());
  g_.graphs_.push_back(NamedGraph{name, {}, {}});
  return g_.graphs_.back();
}

void GraphBuilder::add_vertex_to_graph(std::string_view graph, std::string_view term) {
  Symbol v = add_vertex(term);
  graph_slot(intern(graph)).vertices.insert(v);
}

void GraphBuilder::add_edge_to_graph(std::string_view graph, std::string_view src,
                                     std::string_view dst) {
  Symbol s = add_vertex(src);
  Symbol d = add_vertex(dst);
  g_.edge_labels_.try_emplace(edge_key(s, d));
  NamedGraph& mg = graph_slot(intern(graph));
  mg.edges.insert(edge_key(s, d));
  mg.vertices.insert(s);
  mg.vertices.insert(d);
}

GraphDatabase GraphBuilder::finish() {
  if (finished_) throw IntegrityError("GraphBuilder::finish called twice");
  finished_ = true;
  g_.rebuild_derived();
  return std::move(g_);
}

// ---------------------------------------------------------------------------
// equality
// ---------------------------------------------------------------------------

bool graphs_equal(const GraphDatabase& a, const GraphDatabase& b) {
  if (a.interner() != b.interner())
    throw IntegrityError("graphs_equal requires snapshots over one interner");
  if (a.vertices() != b.vertices()) return false;
  if (a.num_edges() != b.num_edges()) return false;
  auto ea = a.edge_list();
  if (ea != b.edge_list()) return false;
  for (Symbol v : a.vertices()) {
    if (a.labels(v) != b.labels(v)) return false;
    if (a.properties(v) != b.properties(v)) return false;
    if (a.graphs_of(v) != b.graphs_of(v)) return false;
  }
  for (const auto& [s, d] : ea) {
    if (a.edge_labels(s, d) != b.edge_labels(s, d)) return false;
    if (a.edge_properties(s, d) != b.edge_properties(s, d)) return false;
    if (a.graphs_of_edge(s, d) != b.graphs_of_edge(s, d)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// diffing
// ---------------------------------------------------------------------------

namespace {

// Walks two sorted ranges, reporting elements present on only one side.
template <typename T, typename OnRemoved, typename OnAdded>
void diff_sorted(const std::vector<T>& from, const std::vector<T>& to, OnRemoved on_removed,
                 OnAdded on_added) {
  size_t i = 0, j = 0;
  while (i < from.size() || j < to.size()) {
    if (j == to.size() || (i < from.size() && from[i] < to[j])) {
      on_removed(from[i++]);
    } else if (i == from.size() || to[j] < from[i]) {
      on_added(to[j++]);
    } else {
      ++i, ++j;
    }
  }
}

}  // namespace

ChangeSet diff_graphs(const GraphDatabase& from, const GraphDatabase& to) {
  if (from.interner() != to.interner())
    throw IntegrityError("diff_graphs requires snapshots over one interner");
  const Interner& in = *from.interner();
  auto term = [&](Symbol s) { return std::string(in.str(s)); };

  ChangeSet cs;
  for (Symbol v : from.vertices())
    if (!to.has_vertex(v)) cs.remove_vertices.push_back(term(v));

  for (Symbol v : to.vertices()) {
    if (!from.has_vertex(v)) {
      cs.add_vertices.push_back(term(v));
      for (Symbol l : to.labels(v)) cs.add_vertex_labels.emplace_back(term(v), term(l));
      for (const PropKV& p : to.properties(v))
        cs.add_vertex_props.emplace_back(term(v), term(p.key), term(p.value));
      for (Symbol g : to.graphs_of(v)) cs.add_vertex_memberships.emplace_back(term(g), term(v));
      continue;
    }
    diff_sorted(
        from.labels(v), to.labels(v),
        [&](Symbol l) { cs.remove_vertex_labels.emplace_back(term(v), term(l)); },
        [&](Symbol l) { cs.add_vertex_labels.emplace_back(term(v), term(l)); });
    diff_sorted(
        from.properties(v), to.properties(v),
        [&](const PropKV& p) {
          cs.remove_vertex_props.emplace_back(term(v), term(p.key), term(p.value));
        },
        [&](const PropKV& p) {
          cs.add_vertex_props.emplace_back(term(v), term(p.key), term(p.value));
        });
    diff_sorted(
        from.graphs_of(v), to.graphs_of(v),
        [&](Symbol g) { cs.remove_vertex_memberships.emplace_back(term(g), term(v)); },
        [&](Symbol g) { cs.add_vertex_memberships.emplace_back(term(g), term(v)); });
  }

  for (const auto& [s, d] : from.edge_list()) {
    if (to.has_edge(s, d)) continue;
    // an edge lost with an endpoint is cascaded by the vertex removal
    if (to.has_vertex(s) && to.has_vertex(d)) cs.remove_edges.emplace_back(term(s), term(d));
  }
  for (const auto& [s, d] : to.edge_list()) {
    if (!from.has_edge(s, d)) {
      if (!to.edge_properties(s, d).empty())
        throw IntegrityError("edge properties are not expressible in a change set");
      cs.add_edges.emplace_back(term(s), term(d));
      for (Symbol l : to.edge_labels(s, d))
        cs.add_edge_labels.emplace_back(term(s), term(d), term(l));
      for (Symbol g : to.graphs_of_edge(s, d))
        cs.add_edge_memberships.emplace_back(term(g), term(s), term(d));
      continue;
    }
    if (from.edge_properties(s, d) != to.edge_properties(s, d))
      throw IntegrityError("edge property changes are not expressible in a change set");
    diff_sorted(
        from.edge_labels(s, d), to.edge_labels(s, d),
        [&](Symbol l) { cs.remove_edge_labels.emplace_back(term(s), term(d), term(l)); },
        [&](Symbol l) { cs.add_edge_labels.emplace_back(term(s), term(d), term(l)); });
    diff_sorted(
        from.graphs_of_edge(s, d), to.graphs_of_edge(s, d),
        [&](Symbol g) { cs.remove_edge_memberships.emplace_back(term(g), term(s), term(d)); },
        [&](Symbol g) { cs.add_edge_memberships.emplace_back(term(g), term(s), term(d)); });
  }
  return cs;
}

}  // namespace fluidsum
