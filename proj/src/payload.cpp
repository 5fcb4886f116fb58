#include "fluidsum/payload.hpp"

#include <nlohmann/json.hpp>

#include "fluidsum/errors.hpp"

namespace fluidsum {

const char* payload_kind_name(PayloadKind k) {
  switch (k) {
    case PayloadKind::count: return "count";
    case PayloadKind::source_set: return "source_set";
    case PayloadKind::vertex_set: return "vertex_set";
  }
  return "?";
}

PayloadKind payload_kind_from_name(const std::string& s) {
  if (s == "count") return PayloadKind::count;
  if (s == "source_set") return PayloadKind::source_set;
  if (s == "vertex_set") return PayloadKind::vertex_set;
  throw IntegrityError("unknown payload kind '" + s + "'");
}

void PayloadElement::merge(const PayloadElement& other) {
  if (kind != other.kind)
    throw IntegrityError(std::string("payload kind mismatch: ") + payload_kind_name(kind) +
                         " vs " + payload_kind_name(other.kind));
  count += other.count;
  for (const auto& [item, n] : other.items) items[item] += n;
}

void PayloadElement::unmerge(const PayloadElement& other) {
  if (kind != other.kind)
    throw IntegrityError(std::string("payload kind mismatch: ") + payload_kind_name(kind) +
                         " vs " + payload_kind_name(other.kind));
  if (other.count > count)
    throw IntegrityError("payload underflow: removing " + std::to_string(other.count) +
                         " from count " + std::to_string(count));
  for (const auto& [item, n] : other.items) {
    auto it = items.find(item);
    if (it == items.end() || it->second < n)
      throw IntegrityError("payload underflow on item '" + item + "'");
  }
  count -= other.count;
  for (const auto& [item, n] : other.items) {
    auto it = items.find(item);
    it->second -= n;
    if (it->second == 0) items.erase(it);
  }
}

std::string PayloadElement::canonical_bytes() const {
  std::string out;
  out.push_back(static_cast<char>(kind));
  auto u64 = [&](uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  u64(count);
  u64(items.size());
  for (const auto& [item, n] : items) {
    (void)n;  // set semantics
    u64(item.size());
    out += item;
  }
  return out;
}

std::string PayloadElement::store_bytes() const {
  std::string out;
  out.push_back(static_cast<char>(kind));
  auto u64 = [&](uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  u64(count);
  u64(items.size());
  for (const auto& [item, n] : items) {
    u64(item.size());
    out += item;
    u64(n);
  }
  return out;
}

PayloadElement PayloadElement::from_store_bytes(std::string_view bytes) {
  size_t pos = 0;
  auto u8 = [&]() -> uint8_t {
    if (pos >= bytes.size()) throw IntegrityError("payload record truncated");
    return static_cast<uint8_t>(bytes[pos++]);
  };
  auto u64 = [&]() -> uint64_t {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(u8()) << (8 * i);
    return v;
  };
  PayloadElement p;
  uint8_t k = u8();
  if (k > static_cast<uint8_t>(PayloadKind::vertex_set))
    throw IntegrityError("payload record has unknown kind byte");
  p.kind = static_cast<PayloadKind>(k);
  p.count = u64();
  uint64_t n = u64();
  for (uint64_t i = 0; i < n; ++i) {
    uint64_t len = u64();
    if (pos + len > bytes.size()) throw IntegrityError("payload record truncated");
    std::string item(bytes.substr(pos, len));
    pos += len;
    p.items[std::move(item)] = u64();
  }
  if (pos != bytes.size()) throw IntegrityError("payload record has trailing bytes");
  return p;
}

std::string PayloadElement::to_json() const {
  nlohmann::json j;
  j["kind"] = payload_kind_name(kind);
  j["count"] = count;
  auto arr = nlohmann::json::array();
  for (const auto& [item, n] : items) {
    (void)n;
    arr.push_back(item);
  }
  j["items"] = std::move(arr);
  return j.dump();
}

PayloadElement PayloadElement::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("payload is not valid JSON: ") + e.what());
  }
  PayloadElement p;
  p.kind = payload_kind_from_name(j.at("kind").get<std::string>());
  p.count = j.value("count", uint64_t{0});
  if (j.contains("items"))
    for (const auto& item : j["items"]) p.items[item.get<std::string>()] += 1;
  return p;
}

PayloadElement vertex_payload(PayloadKind kind, const GraphDatabase& g, Symbol v) {
  PayloadElement p;
  p.kind = kind;
  p.count = 1;
  switch (kind) {
    case PayloadKind::count:
      break;
    case PayloadKind::source_set:
      for (Symbol gr : g.graphs_of(v)) p.items[g.interner()->str(gr)] += 1;
      break;
    case PayloadKind::vertex_set:
      p.items[g.interner()->str(v)] += 1;
      break;
  }
  return p;
}

}  // namespace fluidsum
