#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "fluidsum/errors.hpp"

namespace fluidsum {

// Dense integer handle for an interned string (vertex term, label, predicate,
// graph name, property key/value -- they all share one dictionary).
using Symbol = uint32_t;

inline constexpr Symbol kNoSymbol = UINT32_MAX;

// Bidirectional string dictionary. Symbols are assigned densely in first-seen
// order and never change, so snapshots taken at different times agree on every
// symbol they share. Interning is single-writer (parsing, change application
// and model compilation happen on one thread); lookups by symbol are const and
// safe to call concurrently from worker threads.
class Interner {
public:
  Symbol intern(std::string_view s) {
    auto it = index_.find(s);
    if (it != index_.end()) return it->second;
    strings_.emplace_back(s);
    string_bytes_ += s.size();
    Symbol id = static_cast<Symbol>(strings_.size() - 1);
    index_.emplace(std::string_view(strings_.back()), id);
    return id;
  }

  std::optional<Symbol> find(std::string_view s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& str(Symbol id) const {
    if (id >= strings_.size()) throw NotFoundError("unknown symbol " + std::to_string(id));
    return strings_[id];
  }

  size_t size() const { return strings_.size(); }
  size_t string_bytes() const { return string_bytes_; }

  // Orders symbols by their external string, the sort order used everywhere
  // canonical bytes are produced.
  bool less_by_string(Symbol a, Symbol b) const { return str(a) < str(b); }

private:
  // deque keeps string storage stable so index_ may hold views into it.
  std::deque<std::string> strings_;
  std::unordered_map<std::string_view, Symbol> index_;
  size_t string_bytes_ = 0;
};

using InternerPtr = std::shared_ptr<Interner>;

}  // namespace fluidsum
