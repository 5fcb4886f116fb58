#include "fluidsum/summary_graph.hpp"

#include <algorithm>
#include <cstring>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "fluidsum/errors.hpp"
#include "fluidsum/gzip_io.hpp"

namespace fluidsum {

namespace {

// per-entry container overheads used by the size estimate; measured once on
// 64-bit libstdc++ and kept fixed so estimates are comparable across runs
constexpr uint64_t kStringOverhead = 32;
constexpr uint64_t kMapNodeOverhead = 56;
constexpr uint64_t kHashSlotOverhead = 24;

uint64_t string_cost(const std::string& s) { return kStringOverhead + s.size(); }

void append_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void append_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_lp(std::string& out, std::string_view s) {
  append_u64(out, s.size());
  out.append(s.data(), s.size());
}

void append_hash(std::string& out, Hash128 h) {
  uint8_t raw[16];
  h.to_bytes(raw);
  out.append(reinterpret_cast<const char*>(raw), 16);
}

struct ByteReader {
  std::string_view bytes;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > bytes.size()) throw IntegrityError("summary store record truncated");
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(bytes[pos + i]))
                                     << (8 * i);
    pos += 8;
    return v;
  }
  std::string lp() {
    uint64_t len = u64();
    need(len);
    std::string s(bytes.substr(pos, len));
    pos += len;
    return s;
  }
  Hash128 hash() {
    need(16);
    Hash128 h = Hash128::from_bytes(reinterpret_cast<const uint8_t*>(bytes.data() + pos));
    pos += 16;
    return h;
  }
  bool done() const { return pos == bytes.size(); }
};

constexpr char kMagic[4] = {'F', 'S', 'G', '1'};
constexpr uint16_t kVersion = 1;

}  // namespace

bool SummaryGraph::contains(Hash128 h) const {
  Shard& s = shard_of(h);
  std::lock_guard<std::mutex> lk(s.mu);
  return s.elems.count(h) > 0;
}

void SummaryGraph::intern_tree_locked(const VertexSummary& vs) {
  // Insert every node before counting references: built trees memoize
  // diamonds through shared neighbors, so an edge may point to a child at a
  // lower index and no single sweep order sees children strictly first.
  std::vector<size_t> fresh_nodes;
  for (size_t i = vs.nodes.size(); i-- > 0;) {
    auto [it, fresh] = pool_.try_emplace(vs.hashes[i]);
    if (!fresh) continue;
    fresh_nodes.push_back(i);
    const SummaryNode& n = vs.nodes[i];
    NodeLayout layout;
    layout.elem_id = n.elem_id;
    layout.sections = n.sections;
    layout.edges.reserve(n.edges.size());
    for (const auto& e : n.edges)
      layout.edges.push_back(LayoutEdge{e.dir, e.universal, e.label, vs.hashes[e.child]});
    it->second.layout = std::move(layout);
  }
  for (size_t i : fresh_nodes)
    for (const auto& e : vs.nodes[i].edges) pool_.at(vs.hashes[e.child]).refs += 1;
  pool_.at(vs.hashes[0]).refs += 1;  // the element's own reference to its root
}

void SummaryGraph::release_tree_locked(Hash128 root) {
  std::vector<Hash128> stack{root};
  while (!stack.empty()) {
    Hash128 h = stack.back();
    stack.pop_back();
    auto it = pool_.find(h);
    if (it == pool_.end())
      throw IntegrityError("summary store released a node it does not hold");
    if (--it->second.refs > 0) continue;
    for (const auto& e : it->second.layout.edges) stack.push_back(e.child);
    pool_.erase(it);
  }
}

bool SummaryGraph::add_element(const VertexSummary& vs, const PayloadElement& contribution) {
  if (vs.empty()) throw IntegrityError("cannot store an empty summary");
  Hash128 h = vs.hash();
  Shard& s = shard_of(h);
  std::lock_guard<std::mutex> lk(s.mu);
  auto [it, inserted] = s.elems.try_emplace(h);
  if (inserted) {
    it->second = contribution;
    std::lock_guard<std::mutex> plk(pool_mu_);
    intern_tree_locked(vs);
  } else {
    it->second.merge(contribution);
  }
  return inserted;
}

void SummaryGraph::merge_payload(Hash128 h, const PayloadElement& contribution) {
  Shard& s = shard_of(h);
  std::lock_guard<std::mutex> lk(s.mu);
  auto it = s.elems.find(h);
  if (it == s.elems.end())
    throw NotFoundError("summary store has no element " + h.hex());
  it->second.merge(contribution);
}

void SummaryGraph::unmerge_payload(Hash128 h, const PayloadElement& contribution) {
  Shard& s = shard_of(h);
  std::lock_guard<std::mutex> lk(s.mu);
  auto it = s.elems.find(h);
  if (it == s.elems.end())
    throw NotFoundError("summary store has no element " + h.hex());
  it->second.unmerge(contribution);
}

bool SummaryGraph::remove_element_if(Hash128 h, const std::function<bool()>& confirm) {
  Shard& s = shard_of(h);
  std::lock_guard<std::mutex> lk(s.mu);
  auto it = s.elems.find(h);
  if (it == s.elems.end()) return false;
  if (!confirm()) return false;
  s.elems.erase(it);
  std::lock_guard<std::mutex> plk(pool_mu_);
  release_tree_locked(h);
  return true;
}

PayloadElement SummaryGraph::payload_of(Hash128 h) const {
  Shard& s = shard_of(h);
  std::lock_guard<std::mutex> lk(s.mu);
  auto it = s.elems.find(h);
  if (it == s.elems.end())
    throw NotFoundError("summary store has no element " + h.hex());
  return it->second;
}

VertexSummary SummaryGraph::materialize(Hash128 h) const {
  Shard& s = shard_of(h);
  std::lock_guard<std::mutex> lk(s.mu);
  if (!s.elems.count(h)) throw NotFoundError("summary store has no element " + h.hex());
  std::lock_guard<std::mutex> plk(pool_mu_);
  return materialize_summary(h, [&](Hash128 nh) -> const NodeLayout* {
    auto it = pool_.find(nh);
    return it == pool_.end() ? nullptr : &it->second.layout;
  });
}

std::vector<Hash128> SummaryGraph::element_hashes() const {
  std::vector<Hash128> out;
  for (const Shard& s : shards_) {
    std::lock_guard<std::mutex> lk(s.mu);
    for (const auto& [h, p] : s.elems) out.push_back(h);
  }
  std::sort(out.begin(), out.end());
  return out;
}

size_t SummaryGraph::size() const {
  size_t n = 0;
  for (const Shard& s : shards_) {
    std::lock_guard<std::mutex> lk(s.mu);
    n += s.elems.size();
  }
  return n;
}

void SummaryGraph::clear() {
  for (Shard& s : shards_) {
    std::lock_guard<std::mutex> lk(s.mu);
    s.elems.clear();
  }
  std::lock_guard<std::mutex> plk(pool_mu_);
  pool_.clear();
}

SummaryGraphStats SummaryGraph::stats() const {
  SummaryGraphStats st;
  for (const Shard& s : shards_) {
    std::lock_guard<std::mutex> lk(s.mu);
    st.num_classes += s.elems.size();
    for (const auto& [h, p] : s.elems) {
      st.payload_count_total += p.count;
      st.payload_items_total += p.items.size();
    }
  }
  std::lock_guard<std::mutex> plk(pool_mu_);
  st.num_support_nodes = pool_.size() - std::min<uint64_t>(pool_.size(), st.num_classes);
  for (const auto& [h, pn] : pool_) st.num_tree_edges += pn.layout.edges.size();
  return st;
}

uint64_t SummaryGraph::approx_bytes() const {
  uint64_t total = 0;
  for (const Shard& s : shards_) {
    std::lock_guard<std::mutex> lk(s.mu);
    for (const auto& [h, p] : s.elems) {
      total += kHashSlotOverhead + sizeof(Hash128) + sizeof(PayloadElement);
      for (const auto& [item, n] : p.items) total += kMapNodeOverhead + string_cost(item);
    }
  }
  std::lock_guard<std::mutex> plk(pool_mu_);
  for (const auto& [h, pn] : pool_) {
    total += kHashSlotOverhead + sizeof(Hash128) + sizeof(PoolNode);
    for (const auto& sec : pn.layout.sections) {
      total += sizeof(Section);
      for (const auto& e : sec.entries) total += string_cost(e);
    }
    for (const auto& e : pn.layout.edges)
      total += sizeof(LayoutEdge) + e.label.size();
  }
  return total;
}

std::string SummaryGraph::canonical_bytes() const {
  // snapshot under all shard locks taken in fixed order, then the pool
  std::vector<std::unique_lock<std::mutex>> locks;
  locks.reserve(kShards);
  for (const Shard& s : shards_) locks.emplace_back(s.mu);

  std::vector<std::pair<Hash128, const PayloadElement*>> elems;
  for (const Shard& s : shards_)
    for (const auto& [h, p] : s.elems) elems.emplace_back(h, &p);
  std::sort(elems.begin(), elems.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::string out;
  append_u64(out, elems.size());
  for (const auto& [h, p] : elems) {
    append_hash(out, h);
    append_lp(out, p->store_bytes());
  }

  std::lock_guard<std::mutex> plk(pool_mu_);
  std::vector<Hash128> nodes;
  nodes.reserve(pool_.size());
  for (const auto& [h, pn] : pool_) nodes.push_back(h);
  std::sort(nodes.begin(), nodes.end());
  append_u64(out, nodes.size());
  for (Hash128 h : nodes) append_lp(out, pool_.at(h).layout.encode());
  return out;
}

void SummaryGraph::export_json(std::ostream& out, bool include_trees) const {
  using nlohmann::json;
  json root;
  root["classes"] = json::array();

  std::vector<Hash128> hashes = element_hashes();
  for (Hash128 h : hashes) {
    json e;
    e["hash"] = h.hex();
    PayloadElement p = payload_of(h);
    e["payload"] = json::parse(p.to_json());
    VertexSummary vs = materialize(h);
    e["tree_vertices"] = vs.tree_vertex_count();
    if (include_trees) {
      json nodes = json::array();
      for (size_t i = 0; i < vs.nodes.size(); ++i) {
        const SummaryNode& n = vs.nodes[i];
        json jn;
        jn["hash"] = vs.hashes[i].hex();
        jn["elem_id"] = n.elem_id;
        json sections = json::object();
        for (const auto& sec : n.sections)
          sections[std::string(1, sec.tag)] = sec.entries;
        jn["sections"] = std::move(sections);
        json edges = json::array();
        for (const auto& ed : n.edges) {
          json je;
          je["dir"] = ed.dir == 0 ? "out" : "in";
          if (!ed.universal) je["label"] = ed.label;
          je["child"] = vs.hashes[ed.child].hex();
          edges.push_back(std::move(je));
        }
        jn["edges"] = std::move(edges);
        nodes.push_back(std::move(jn));
      }
      e["nodes"] = std::move(nodes);
    }
    root["classes"].push_back(std::move(e));
  }
  out << root.dump(2) << '\n';
}

void SummaryGraph::save(std::ostream& out) const {
  std::string body;
  {
    std::vector<std::unique_lock<std::mutex>> locks;
    locks.reserve(kShards);
    for (const Shard& s : shards_) locks.emplace_back(s.mu);
    std::lock_guard<std::mutex> plk(pool_mu_);

    std::vector<Hash128> nodes;
    nodes.reserve(pool_.size());
    for (const auto& [h, pn] : pool_) nodes.push_back(h);
    std::sort(nodes.begin(), nodes.end());
    append_u64(body, nodes.size());
    for (Hash128 h : nodes) append_lp(body, pool_.at(h).layout.encode());

    std::vector<std::pair<Hash128, const PayloadElement*>> elems;
    for (const Shard& s : shards_)
      for (const auto& [h, p] : s.elems) elems.emplace_back(h, &p);
    std::sort(elems.begin(), elems.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    append_u64(body, elems.size());
    for (const auto& [h, p] : elems) {
      append_hash(body, h);
      append_lp(body, p->store_bytes());
    }
  }

  std::string header(kMagic, sizeof(kMagic));
  append_u16(header, kVersion);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  std::string z = gzip_compress(body);
  out.write(z.data(), static_cast<std::streamsize>(z.size()));
  if (!out) throw IntegrityError("summary store write failed");
}

void SummaryGraph::load(std::istream& in) {
  if (!empty()) throw IntegrityError("summary store load requires an empty store");

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw IntegrityError("not a summary store file (bad magic)");
  char vraw[2];
  in.read(vraw, 2);
  if (!in) throw IntegrityError("summary store file truncated");
  uint16_t version = static_cast<uint8_t>(vraw[0]) |
                     (static_cast<uint16_t>(static_cast<uint8_t>(vraw[1])) << 8);
  if (version != kVersion)
    throw IntegrityError("unsupported summary store version " + std::to_string(version));

  std::ostringstream rest;
  rest << in.rdbuf();
  std::string body = gzip_decompress(rest.str());
  ByteReader r{body};

  std::unordered_map<Hash128, PoolNode> pool;
  uint64_t pool_count = r.u64();
  for (uint64_t i = 0; i < pool_count; ++i) {
    std::string bytes = r.lp();
    Hash128 h = digest(bytes);
    PoolNode pn;
    pn.layout = decode_node_layout(bytes);
    if (!pool.emplace(h, std::move(pn)).second)
      throw IntegrityError("summary store file repeats node " + h.hex());
  }

  std::vector<std::pair<Hash128, PayloadElement>> elems;
  uint64_t elem_count = r.u64();
  for (uint64_t i = 0; i < elem_count; ++i) {
    Hash128 h = r.hash();
    elems.emplace_back(h, PayloadElement::from_store_bytes(r.lp()));
  }
  if (!r.done()) throw IntegrityError("summary store file has trailing bytes");

  // recompute reference counts and check closure
  for (auto& [h, pn] : pool)
    for (const auto& e : pn.layout.edges) {
      auto it = pool.find(e.child);
      if (it == pool.end())
        throw IntegrityError("summary store file: node " + h.hex() +
                             " references missing child " + e.child.hex());
      it->second.refs += 1;
    }
  for (const auto& [h, p] : elems) {
    auto it = pool.find(h);
    if (it == pool.end())
      throw IntegrityError("summary store file: element " + h.hex() + " has no tree");
    it->second.refs += 1;
  }
  for (const auto& [h, pn] : pool)
    if (pn.refs == 0)
      throw IntegrityError("summary store file: node " + h.hex() + " is unreferenced");

  std::vector<std::unique_lock<std::mutex>> locks;
  locks.reserve(kShards);
  for (const Shard& s : shards_) locks.emplace_back(s.mu);
  std::lock_guard<std::mutex> plk(pool_mu_);
  pool_ = std::move(pool);
  for (auto& [h, p] : elems) shards_[h.lo % kShards].elems.emplace(h, std::move(p));
}

void SummaryGraph::validate() const {
  std::vector<std::unique_lock<std::mutex>> locks;
  locks.reserve(kShards);
  for (const Shard& s : shards_) locks.emplace_back(s.mu);
  std::lock_guard<std::mutex> plk(pool_mu_);

  std::unordered_map<Hash128, uint64_t> refs;
  for (const auto& [h, pn] : pool_)
    for (const auto& e : pn.layout.edges) {
      if (!pool_.count(e.child))
        throw IntegrityError("validate: node " + h.hex() + " references missing child " +
                             e.child.hex());
      refs[e.child] += 1;
    }
  for (const Shard& s : shards_)
    for (const auto& [h, p] : s.elems) {
      if (!pool_.count(h))
        throw IntegrityError("validate: element " + h.hex() + " has no tree");
      refs[h] += 1;
    }
  for (const auto& [h, pn] : pool_) {
    uint64_t expect = refs.count(h) ? refs.at(h) : 0;
    if (pn.refs != expect)
      throw IntegrityError("validate: node " + h.hex() + " holds refcount " +
                           std::to_string(pn.refs) + ", recount says " + std::to_string(expect));
    if (expect == 0)
      throw IntegrityError("validate: node " + h.hex() + " is unreferenced");
  }
  // element payload sanity: digests must match the stored tree root
  for (const Shard& s : shards_)
    for (const auto& [h, p] : s.elems) {
      Hash128 rh = digest(pool_.at(h).layout.encode());
      if (rh != h)
        throw IntegrityError("validate: element " + h.hex() + " tree hashes to " + rh.hex());
    }
}

}  // namespace fluidsum
