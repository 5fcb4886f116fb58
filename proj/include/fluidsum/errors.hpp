#pragma once

#include <stdexcept>
#include <string>

namespace fluidsum {

// Error taxonomy used across the library:
//  - NotFoundError:  a key (vertex, edge, summary hash, link) is absent where
//                    the operation requires presence.
//  - IntegrityError: an operation would violate a structural invariant
//                    (dangling edge, payload underflow, inconsistent inputs).
//  - ConflictError:  a concurrent or duplicate mutation lost a race; callers
//                    inside the engine retry these, API users see them only
//                    on genuine misuse (e.g. duplicate add_link).
//  - ParseError:     malformed input data; carries the 1-based line number.

class NotFoundError : public std::runtime_error {
public:
  explicit NotFoundError(const std::string& what) : std::runtime_error(what) {}
};

class IntegrityError : public std::runtime_error {
public:
  explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

class ConflictError : public std::runtime_error {
public:
  explicit ConflictError(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public std::runtime_error {
public:
  ParseError(uint64_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  uint64_t line() const { return line_; }

private:
  uint64_t line_;
};

}  // namespace fluidsum
