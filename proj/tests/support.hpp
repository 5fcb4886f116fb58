#pragma once

// Shared fixture helpers for the test binaries: a portable seeded RNG,
// statement-level random graph construction with controllable churn, the
// two-snapshot fixture from the worked example (a movie/city graph whose
// second version moves one vertex between classes), and partition utilities.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fluidsum/graph.hpp"
#include "fluidsum/rdf_io.hpp"

namespace fluidsum::test {

// Bounded draws off one mt19937_64 stream. Modulo bias is irrelevant at test
// vocabulary sizes and keeps sequences identical across standard libraries.
class TestRng {
 public:
  explicit TestRng(uint64_t seed) : eng_(seed) {}
  uint64_t next() { return eng_(); }
  uint64_t below(uint64_t n) { return n ? eng_() % n : 0; }
  bool chance(double p) { return static_cast<double>(eng_() >> 11) * 0x1.0p-53 < p; }

 private:
  std::mt19937_64 eng_;
};

struct RandomGraphSpec {
  int vertices = 30;
  int edges = 60;
  int label_vocab = 4;
  int pred_vocab = 5;
  int sources = 3;             // named graphs; 0 disables graph tags
  double typed_fraction = 0.75;
  double second_label = 0.3;
  double literal_fraction = 0.2;  // share of edges pointing at literals
};

// Raw statement form so tests can perturb inputs before folding them into
// snapshots. Deterministic in (rng state, spec).
std::vector<RdfStatement> random_statements(TestRng& rng, const RandomGraphSpec& spec);

// Removes, relabels and adds statements; roughly `churn` of the base size
// each. Never produces duplicate adds of removed statements.
std::vector<RdfStatement> churn_statements(TestRng& rng, const std::vector<RdfStatement>& base,
                                           const RandomGraphSpec& spec, double churn);

GraphDatabase random_graph(uint64_t seed, const RandomGraphSpec& spec = {},
                           InternerPtr interner = nullptr);

// Two snapshots over one shared interner, the second a churned copy of the
// first.
std::pair<GraphDatabase, GraphDatabase> random_graph_pair(uint64_t seed,
                                                          const RandomGraphSpec& spec,
                                                          double churn);

// Three versions of a small book catalog. Version 0: two parallel subgraphs
// from sources X and Y, each a Book with topic -> Subject and author ->
// Person (v1 and v7 are the books and share a class under the chained type
// model). Version 1 removes v7's author edge and adds a lone Publisher v10,
// so v7 moves to a class of its own and one brand-new class appears.
// Version 2 drops v7 and v9 entirely: v7's singleton class dies with it
// while v9's Person class survives through v3. Statement-level so tests can
// fold the snapshots with any options.
std::vector<RdfStatement> book_fixture(int version);

// Groups terms by key; returns the partition as a set of sorted term groups,
// ready for equality comparison against an oracle partition.
template <typename KeyFn>
std::set<std::vector<std::string>> partition_by(const GraphDatabase& g,
                                                const std::vector<Symbol>& universe, KeyFn key) {
  std::map<decltype(key(universe.front())), std::vector<std::string>> groups;
  for (Symbol v : universe) groups[key(v)].push_back(std::string(g.term(v)));
  std::set<std::vector<std::string>> out;
  for (auto& [k, members] : groups) {
    std::sort(members.begin(), members.end());
    out.insert(std::move(members));
  }
  return out;
}

}  // namespace fluidsum::test
