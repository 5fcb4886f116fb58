#include "fluidsum/vertex_index.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "fluidsum/errors.hpp"
#include "fluidsum/gzip_io.hpp"

namespace fluidsum {

namespace {

constexpr char kMagic[4] = {'F', 'V', 'H', 'I'};
constexpr uint16_t kVersion = 1;

// fixed per-entry overheads for the size estimate (64-bit libstdc++)
constexpr uint64_t kHashSlotOverhead = 24;
constexpr uint64_t kSetEntryOverhead = 16;
constexpr uint64_t kMapNodeOverhead = 56;
constexpr uint64_t kStringOverhead = 32;

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

}  // namespace

bool VertexHashIndex::contains(Symbol v) const {
  std::shared_lock lk(l2_mu_);
  return by_vertex_.count(v) > 0;
}

std::optional<VertexLink> VertexHashIndex::get(Symbol v) const {
  std::shared_lock lk(l2_mu_);
  auto it = by_vertex_.find(v);
  if (it == by_vertex_.end()) return std::nullopt;
  return VertexLink{it->second.link, it->second.contribution};
}

bool VertexHashIndex::has_links(Hash128 h) const {
  std::shared_lock lk(l1_mu_);
  auto it = by_hash_.find(h);
  return it != by_hash_.end() && !it->second.empty();
}

uint64_t VertexHashIndex::link_count(Hash128 h) const {
  std::shared_lock lk(l1_mu_);
  auto it = by_hash_.find(h);
  return it == by_hash_.end() ? 0 : it->second.size();
}

std::vector<Symbol> VertexHashIndex::linked_vertices(Hash128 h) const {
  std::shared_lock lk(l1_mu_);
  std::vector<Symbol> out;
  if (auto it = by_hash_.find(h); it != by_hash_.end())
    out.assign(it->second.begin(), it->second.end());
  std::sort(out.begin(), out.end());
  return out;
}

void VertexHashIndex::add_link(Symbol v, Hash128 h, PayloadElement contribution) {
  std::unique_lock lk1(l1_mu_);
  std::unique_lock lk2(l2_mu_);
  auto [it, inserted] = by_vertex_.try_emplace(v, Entry{h, std::move(contribution)});
  if (!inserted)
    throw ConflictError("vertex " + std::to_string(v) + " is already linked to " +
                        it->second.link.hex());
  by_hash_[h].insert(v);
}

VertexHashIndex::RemoveResult VertexHashIndex::remove_link(Symbol v) {
  std::unique_lock lk1(l1_mu_);
  std::unique_lock lk2(l2_mu_);
  auto it = by_vertex_.find(v);
  if (it == by_vertex_.end())
    throw NotFoundError("vertex " + std::to_string(v) + " is not linked");
  RemoveResult r{it->second.link, std::move(it->second.contribution), false};
  by_vertex_.erase(it);
  auto hit = by_hash_.find(r.link);
  if (hit == by_hash_.end() || hit->second.erase(v) == 0)
    throw IntegrityError("link layers disagree about vertex " + std::to_string(v));
  if (hit->second.empty()) {
    by_hash_.erase(hit);
    r.orphaned = true;
  }
  return r;
}

PayloadElement VertexHashIndex::set_contribution(Symbol v, PayloadElement contribution) {
  std::unique_lock lk2(l2_mu_);
  auto it = by_vertex_.find(v);
  if (it == by_vertex_.end())
    throw NotFoundError("vertex " + std::to_string(v) + " is not linked");
  PayloadElement old = std::move(it->second.contribution);
  it->second.contribution = std::move(contribution);
  return old;
}

std::vector<Symbol> VertexHashIndex::all_vertices() const {
  std::shared_lock lk(l2_mu_);
  std::vector<Symbol> out;
  out.reserve(by_vertex_.size());
  for (const auto& [v, e] : by_vertex_) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

size_t VertexHashIndex::size() const {
  std::shared_lock lk(l2_mu_);
  return by_vertex_.size();
}

void VertexHashIndex::clear() {
  std::unique_lock lk1(l1_mu_);
  std::unique_lock lk2(l2_mu_);
  by_hash_.clear();
  by_vertex_.clear();
}

VertexIndexStats VertexHashIndex::stats() const {
  std::shared_lock lk1(l1_mu_);
  std::shared_lock lk2(l2_mu_);
  VertexIndexStats st;
  st.num_vertices = by_vertex_.size();
  st.num_classes = by_hash_.size();
  uint64_t bytes = 0;
  for (const auto& [h, verts] : by_hash_)
    bytes += kHashSlotOverhead + sizeof(Hash128) +
             verts.size() * (kSetEntryOverhead + sizeof(Symbol));
  for (const auto& [v, e] : by_vertex_) {
    bytes += kHashSlotOverhead + sizeof(Symbol) + sizeof(Entry);
    for (const auto& [item, n] : e.contribution.items)
      bytes += kMapNodeOverhead + kStringOverhead + item.size();
  }
  st.approx_bytes = bytes;
  return st;
}

std::string VertexHashIndex::canonical_bytes(const Interner& interner) const {
  std::shared_lock lk2(l2_mu_);
  std::vector<Symbol> verts;
  verts.reserve(by_vertex_.size());
  for (const auto& [v, e] : by_vertex_) verts.push_back(v);
  std::sort(verts.begin(), verts.end(),
            [&](Symbol a, Symbol b) { return interner.str(a) < interner.str(b); });
  std::string out;
  append_u64(out, verts.size());
  for (Symbol v : verts) {
    const Entry& e = by_vertex_.at(v);
    append_lp(out, interner.str(v));
    append_hash(out, e.link);
    append_lp(out, e.contribution.store_bytes());
  }
  return out;
}

void VertexHashIndex::export_json(std::ostream& out, const Interner& interner) const {
  using nlohmann::json;
  std::shared_lock lk2(l2_mu_);
  std::vector<Symbol> verts;
  for (const auto& [v, e] : by_vertex_) verts.push_back(v);
  std::sort(verts.begin(), verts.end(),
            [&](Symbol a, Symbol b) { return interner.str(a) < interner.str(b); });
  json root;
  root["vertices"] = json::array();
  for (Symbol v : verts) {
    const Entry& e = by_vertex_.at(v);
    json jv;
    jv["term"] = interner.str(v);
    jv["link"] = e.link.hex();
    jv["contribution"] = json::parse(e.contribution.to_json());
    root["vertices"].push_back(std::move(jv));
  }
  out << root.dump(2) << '\n';
}

void VertexHashIndex::save(std::ostream& out, const Interner& interner) const {
  std::string body = canonical_bytes(interner);
  std::string header(kMagic, sizeof(kMagic));
  header.push_back(static_cast<char>(kVersion & 0xff));
  header.push_back(static_cast<char>((kVersion >> 8) & 0xff));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  std::string z = gzip_compress(body);
  out.write(z.data(), static_cast<std::streamsize>(z.size()));
  if (!out) throw IntegrityError("vertex index write failed");
}

void VertexHashIndex::load(std::istream& in, Interner& interner) {
  if (!empty()) throw IntegrityError("vertex index load requires an empty index");

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw IntegrityError("not a vertex index file (bad magic)");
  char vraw[2];
  in.read(vraw, 2);
  if (!in) throw IntegrityError("vertex index file truncated");
  uint16_t version = static_cast<uint8_t>(vraw[0]) |
                     (static_cast<uint16_t>(static_cast<uint8_t>(vraw[1])) << 8);
  if (version != kVersion)
    throw IntegrityError("unsupported vertex index version " + std::to_string(version));

  std::ostringstream rest;
  rest << in.rdbuf();
  std::string body = gzip_decompress(rest.str());

  size_t pos = 0;
  auto need = [&](size_t n) {
    if (pos + n > body.size()) throw IntegrityError("vertex index record truncated");
  };
  auto u64 = [&]() -> uint64_t {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(body[pos + i]))
                                     << (8 * i);
    pos += 8;
    return v;
  };
  auto lp = [&]() -> std::string {
    uint64_t len = u64();
    need(len);
    std::string s = body.substr(pos, len);
    pos += len;
    return s;
  };

  std::unique_lock lk1(l1_mu_);
  std::unique_lock lk2(l2_mu_);
  uint64_t n = u64();
  for (uint64_t i = 0; i < n; ++i) {
    std::string term = lp();
    need(16);
    Hash128 h = Hash128::from_bytes(reinterpret_cast<const uint8_t*>(body.data() + pos));
    pos += 16;
    PayloadElement contribution = PayloadElement::from_store_bytes(lp());
    Symbol v = interner.intern(term);
    if (!by_vertex_.emplace(v, Entry{h, std::move(contribution)}).second)
      throw IntegrityError("vertex index file repeats term '" + term + "'");
    by_hash_[h].insert(v);
  }
  if (pos != body.size()) throw IntegrityError("vertex index file has trailing bytes");
}

void VertexHashIndex::validate() const {
  std::shared_lock lk1(l1_mu_);
  std::shared_lock lk2(l2_mu_);
  uint64_t linked = 0;
  for (const auto& [h, verts] : by_hash_) {
    if (verts.empty()) throw IntegrityError("validate: class " + h.hex() + " has no members");
    for (Symbol v : verts) {
      auto it = by_vertex_.find(v);
      if (it == by_vertex_.end() || it->second.link != h)
        throw IntegrityError("validate: layers disagree about vertex " + std::to_string(v));
    }
    linked += verts.size();
  }
  if (linked != by_vertex_.size())
    throw IntegrityError("validate: layer sizes disagree (" + std::to_string(linked) + " vs " +
                         std::to_string(by_vertex_.size()) + ")");
}

}  // namespace fluidsum
