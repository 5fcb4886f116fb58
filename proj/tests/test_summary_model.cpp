// Summary model coverage:
//   - model construction, JSON round trips and validation errors
//   - hash-based vertex partitions against the brute-force reference
//     partitions, for simple elements (all directions, with and without
//     filters) and for chained elements at several depths
//   - summary determinism, the fanout bound on tree size, and the canonical
//     node encoding
//   - pairwise equivalence and instance merging
//
// The reference partitions come from tests/oracles.hpp, which groups vertices
// by comparing feature strings pairwise instead of hashing canonical bytes.

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fluidsum/errors.hpp"
#include "fluidsum/graph.hpp"
#include "fluidsum/rdf_io.hpp"
#include "fluidsum/summary_model.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace fluidsum::test {
namespace {

// Groups the graph's vertices by canonical summary hash.
Partition hash_partition(const GraphDatabase& g, const SchemaElement& spec) {
  CompiledModel m(spec, *g.interner());
  return partition_by(g, g.vertices(),
                      [&](Symbol v) { return build_vertex_summary(m, g, v).hash(); });
}

SchemaElement simple_model(ElemKind kind, Direction dir = Direction::out) {
  SchemaElement m;
  m.kind = kind;
  m.params.direction = dir;
  return m;
}

OracleParams oracle_for(const SchemaElement& spec) {
  OracleParams p;
  p.direction = spec.params.direction;
  p.rdf_type = spec.rdf_type_iri;
  if (spec.params.label_filter) {
    const LabelFilterSpec& f = *spec.params.label_filter;
    p.label = OracleFilter{f.exclude, {f.labels.begin(), f.labels.end()}};
  }
  if (spec.params.set_filter)
    p.set = OracleFilter{false, {spec.params.set_filter->begin(), spec.params.set_filter->end()}};
  return p;
}

// ---------------------------------------------------------------------------
// Model specs and JSON
// ---------------------------------------------------------------------------

TEST(SummaryModel, predefined_models_round_trip_through_json) {
  for (const SchemaElement& m :
       {schemex_model(), schemex_model(3), attrcoll_model(), classcoll_model()}) {
    SchemaElement back = parse_model_json(model_to_json(m));
    EXPECT_EQ(back.canonical_spec(), m.canonical_spec());
  }
  EXPECT_EQ(predefined_model("schemex", 2).canonical_spec(), schemex_model(2).canonical_spec());
  EXPECT_THROW(predefined_model("nope"), IntegrityError);
}

TEST(SummaryModel, structural_json_round_trip) {
  const char* text = R"({
    "variant": "cse", "k": 2, "rdf_type": "urn:test:type",
    "instance_merge": ["urn:test:sameAs"],
    "subject": {"variant": "oc", "direction": "both",
                "labels": {"exclude": ["urn:test:p3"]}, "set": ["urn:test:T0"]},
    "predicate": {"variant": "id"},
    "object": {"variant": "poc", "direction": "in"}
  })";
  SchemaElement m = parse_model_json(text);
  EXPECT_EQ(m.kind, ElemKind::cse);
  EXPECT_EQ(m.params.chaining_k, 2);
  EXPECT_EQ(m.rdf_type_iri, "urn:test:type");
  ASSERT_EQ(m.instance_merge.size(), 1u);
  ASSERT_TRUE(m.subject && m.subject->params.label_filter);
  EXPECT_TRUE(m.subject->params.label_filter->exclude);
  EXPECT_EQ(m.object->params.direction, Direction::in);

  SchemaElement back = parse_model_json(model_to_json(m));
  EXPECT_EQ(back.canonical_spec(), m.canonical_spec());
}

TEST(SummaryModel, validation_rejects_malformed_specs) {
  SchemaElement m = schemex_model();
  m.params.chaining_k = 0;
  EXPECT_THROW(m.validate(), IntegrityError);
  m.params.chaining_k = 17;
  EXPECT_THROW(m.validate(), IntegrityError);

  m = schemex_model();
  m.predicate = std::make_shared<SchemaElement>(simple_model(ElemKind::oc));
  EXPECT_THROW(m.validate(), IntegrityError);

  m = simple_model(ElemKind::oc);
  m.params.label_filter = LabelFilterSpec{false, {}};
  EXPECT_THROW(m.validate(), IntegrityError);

  EXPECT_THROW(parse_model_json("{\"variant\": \"owl\"}"), IntegrityError);
  EXPECT_THROW(parse_model_json("not json"), IntegrityError);
}

// ---------------------------------------------------------------------------
// Simple-element partitions vs the pairwise reference
// ---------------------------------------------------------------------------

TEST(SummaryModel, simple_partitions_match_reference) {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    GraphDatabase g = random_graph(seed, {});
    for (ElemKind kind : {ElemKind::oc, ElemKind::pc, ElemKind::poc}) {
      for (Direction dir : {Direction::out, Direction::in, Direction::both}) {
        SchemaElement spec = simple_model(kind, dir);
        EXPECT_EQ(hash_partition(g, spec), oracle_partition_simple(g, kind, oracle_for(spec)))
            << "seed " << seed << " kind " << int(kind) << " dir " << int(dir);
      }
    }
  }
}

TEST(SummaryModel, label_filtered_partitions_match_reference) {
  for (uint64_t seed = 30; seed <= 44; ++seed) {
    GraphDatabase g = random_graph(seed, {});
    for (ElemKind kind : {ElemKind::oc, ElemKind::poc}) {
      SchemaElement inc = simple_model(kind);
      inc.params.label_filter = LabelFilterSpec{false, {"urn:test:p0", "urn:test:p1", kRdfTypeIri}};
      EXPECT_EQ(hash_partition(g, inc), oracle_partition_simple(g, kind, oracle_for(inc)))
          << "seed " << seed << " include, kind " << int(kind);

      SchemaElement exc = simple_model(kind, Direction::both);
      exc.params.label_filter = LabelFilterSpec{true, {"urn:test:p2"}};
      EXPECT_EQ(hash_partition(g, exc), oracle_partition_simple(g, kind, oracle_for(exc)))
          << "seed " << seed << " exclude, kind " << int(kind);
    }
    // attrcoll is the predicate collection with the type predicate masked out
    SchemaElement ac = attrcoll_model();
    EXPECT_EQ(hash_partition(g, ac), oracle_partition_simple(g, ElemKind::pc, oracle_for(ac)))
        << "seed " << seed;
  }
}

TEST(SummaryModel, set_filtered_partitions_match_reference) {
  for (uint64_t seed = 50; seed <= 61; ++seed) {
    GraphDatabase g = random_graph(seed, {});
    // Restrict emitted features to a handful of terms actually present.
    std::vector<std::string> keep;
    for (Symbol v : g.vertices()) {
      if (keep.size() >= 6) break;
      keep.push_back(g.term(v));
      for (Symbol l : g.labels(v))
        if (keep.size() < 8) keep.push_back(g.term(l));
    }
    for (ElemKind kind : {ElemKind::oc, ElemKind::pc, ElemKind::poc}) {
      SchemaElement spec = simple_model(kind);
      spec.params.set_filter = keep;
      EXPECT_EQ(hash_partition(g, spec), oracle_partition_simple(g, kind, oracle_for(spec)))
          << "seed " << seed << " kind " << int(kind);
    }
  }
}

TEST(SummaryModel, classcoll_groups_by_label_sets_only) {
  GraphDatabase g = random_graph(7, {});
  Partition got = hash_partition(g, classcoll_model());
  Partition want = partition_by(g, g.vertices(), [&](Symbol v) {
    std::vector<std::string> ls;
    for (Symbol l : g.labels(v)) ls.push_back(g.term(l));
    std::sort(ls.begin(), ls.end());
    return ls;
  });
  EXPECT_EQ(got, want);
}

// ---------------------------------------------------------------------------
// Chained elements
// ---------------------------------------------------------------------------

TEST(SummaryModel, schemex_matches_chained_reference) {
  OracleParams ends = oracle_for(classcoll_model());
  OracleFilter pred{true, {kRdfTypeIri}};
  for (uint64_t seed = 70; seed <= 90; ++seed) {
    RandomGraphSpec spec;
    spec.vertices = 24;
    spec.edges = 44;
    GraphDatabase g = random_graph(seed, spec);
    for (int k : {1, 2}) {
      EXPECT_EQ(hash_partition(g, schemex_model(k)),
                oracle_partition_chained(g, ends, pred, /*universal=*/false, k))
          << "seed " << seed << " k " << k;
    }
  }
}

TEST(SummaryModel, universal_predicate_chain_matches_reference) {
  SchemaElement m = simple_model(ElemKind::cse);
  m.subject = std::make_shared<SchemaElement>(simple_model(ElemKind::oc));
  m.predicate = std::make_shared<SchemaElement>(simple_model(ElemKind::top));
  m.object = std::make_shared<SchemaElement>(simple_model(ElemKind::oc));

  OracleParams ends = oracle_for(*m.subject);
  OracleFilter pred;  // exclude-nothing: every predicate passes
  for (uint64_t seed = 100; seed <= 112; ++seed) {
    RandomGraphSpec spec;
    spec.vertices = 20;
    spec.edges = 36;
    GraphDatabase g = random_graph(seed, spec);
    for (int k : {1, 2}) {
      m.params.chaining_k = k;
      EXPECT_EQ(hash_partition(g, m), oracle_partition_chained(g, ends, pred, /*universal=*/true, k))
          << "seed " << seed << " k " << k;
    }
  }
}

TEST(SummaryModel, deeper_chaining_refines_the_partition) {
  // Each class at depth k+1 must be a subset of some class at depth k.
  GraphDatabase g = random_graph(123, {});
  Partition prev = hash_partition(g, schemex_model(1));
  for (int k = 2; k <= 4; ++k) {
    Partition next = hash_partition(g, schemex_model(k));
    for (const auto& fine : next) {
      bool contained = false;
      for (const auto& coarse : prev)
        if (std::includes(coarse.begin(), coarse.end(), fine.begin(), fine.end())) {
          contained = true;
          break;
        }
      EXPECT_TRUE(contained) << "k " << k;
    }
    prev = std::move(next);
  }
}

// ---------------------------------------------------------------------------
// Summary structure
// ---------------------------------------------------------------------------

TEST(SummaryModel, construction_is_deterministic) {
  GraphDatabase g = random_graph(5, {});
  CompiledModel m1(schemex_model(2), *g.interner());
  CompiledModel m2(schemex_model(2), *g.interner());
  for (Symbol v : g.vertices()) {
    VertexSummary a = build_vertex_summary(m1, g, v);
    VertexSummary b = build_vertex_summary(m2, g, v);
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(a.canonical_bytes(true), b.canonical_bytes(true));
  }
}

TEST(SummaryModel, tree_size_respects_the_fanout_bound) {
  for (uint64_t seed = 130; seed <= 137; ++seed) {
    RandomGraphSpec spec;
    spec.vertices = 18;
    spec.edges = 30;
    GraphDatabase g = random_graph(seed, spec);
    uint64_t d = oracle_max_fanout(g, Direction::out);
    for (int k : {1, 2, 3}) {
      // geometric series 1 + d + ... + d^k
      uint64_t bound = 1, power = 1;
      for (int i = 1; i <= k; ++i) {
        power *= std::max<uint64_t>(d, 1);
        bound += power;
      }
      SchemaElement m = simple_model(ElemKind::cse);
      m.params.chaining_k = k;
      m.subject = std::make_shared<SchemaElement>(simple_model(ElemKind::oc));
      m.predicate = std::make_shared<SchemaElement>(simple_model(ElemKind::identity));
      m.object = std::make_shared<SchemaElement>(simple_model(ElemKind::oc));
      CompiledModel cm(m, *g.interner());
      for (Symbol v : g.vertices())
        EXPECT_LE(build_vertex_summary(cm, g, v).tree_vertex_count(), bound)
            << "seed " << seed << " k " << k;
    }
  }
}

TEST(SummaryModel, node_layout_encoding_round_trips) {
  GraphDatabase g = random_graph(9, {});
  CompiledModel m(schemex_model(2), *g.interner());
  for (Symbol v : g.vertices()) {
    VertexSummary vs = build_vertex_summary(m, g, v);
    ASSERT_FALSE(vs.empty());
    const SummaryNode& root = vs.nodes[0];
    std::vector<std::pair<std::string, Hash128>> edges;
    for (const SummaryEdge& e : root.edges)
      edges.emplace_back(e.class_bytes(), vs.hashes[e.child]);
    std::string bytes = encode_node_layout(root.elem_id, root.sections, edges);
    NodeLayout back = decode_node_layout(bytes);
    EXPECT_EQ(back.elem_id, root.elem_id);
    EXPECT_EQ(back.sections, root.sections);
    EXPECT_EQ(back.encode(), bytes);
  }
  EXPECT_THROW(decode_node_layout("garbage"), IntegrityError);
  EXPECT_THROW(decode_node_layout(""), IntegrityError);
}

TEST(SummaryModel, label_symbols_summarize_to_leaves) {
  // Labels appear as chain targets through the virtual type instances; their
  // nodes carry no features and thus collapse into one shared leaf class.
  GraphDatabase g = random_graph(11, {});
  SchemaElement spec = simple_model(ElemKind::cse);
  spec.subject = std::make_shared<SchemaElement>(simple_model(ElemKind::oc));
  spec.predicate = std::make_shared<SchemaElement>(simple_model(ElemKind::identity));
  spec.object = std::make_shared<SchemaElement>(simple_model(ElemKind::oc));
  CompiledModel m(spec, *g.interner());
  std::set<Hash128> leaf_hashes;
  for (Symbol v : g.vertices()) {
    if (g.labels(v).empty()) continue;
    VertexSummary vs = build_vertex_summary(m, g, v);
    for (const SummaryEdge& e : vs.nodes[0].edges) {
      if (e.universal || e.label != kRdfTypeIri) continue;
      const SummaryNode& child = vs.nodes[e.child];
      EXPECT_TRUE(child.edges.empty());
      for (const Section& s : child.sections) EXPECT_TRUE(s.entries.empty());
      leaf_hashes.insert(vs.hashes[e.child]);
    }
  }
  EXPECT_EQ(leaf_hashes.size(), 1u);

  // the public builders reject symbols that are not vertices
  Symbol some_label = [&] {
    for (Symbol v : g.vertices())
      if (!g.labels(v).empty()) return g.labels(v)[0];
    return Symbol{};
  }();
  EXPECT_THROW(build_vertex_summary(m, g, some_label), NotFoundError);
  EXPECT_THROW(extract_vertex_schema(m, g, some_label), NotFoundError);
}

// ---------------------------------------------------------------------------
// Equivalence and instance merging
// ---------------------------------------------------------------------------

TEST(SummaryModel, equivalent_agrees_with_hash_equality) {
  RandomGraphSpec spec;
  spec.vertices = 16;
  spec.edges = 28;
  for (uint64_t seed = 140; seed <= 145; ++seed) {
    GraphDatabase g = random_graph(seed, spec);
    for (const SchemaElement& sm : {schemex_model(), attrcoll_model()}) {
      CompiledModel m(sm, *g.interner());
      std::map<Symbol, Hash128> h;
      for (Symbol v : g.vertices()) h[v] = build_vertex_summary(m, g, v).hash();
      for (Symbol v : g.vertices())
        for (Symbol w : g.vertices())
          EXPECT_EQ(equivalent(m, g, v, w), h[v] == h[w])
              << g.term(v) << " vs " << g.term(w) << " seed " << seed;
    }
  }
}

TEST(SummaryModel, instance_merge_collapses_linked_vertices) {
  GraphBuilder b;
  b.add_vertex("a");
  b.add_vertex("b");
  b.add_vertex("c");
  b.add_vertex_label("a", "T");
  b.add_edge("a", "b");
  b.add_edge_label("a", "b", "urn:test:sameAs");
  b.add_edge("b", "c");
  b.add_edge_label("b", "c", "p");
  GraphDatabase g = b.finish();

  GraphDatabase merged = instance_merge(g, {"urn:test:sameAs"});
  Symbol a = merged.interner()->intern("a");
  Symbol bsym = merged.interner()->intern("b");
  // one survivor carries the union of features; the merge edge itself is gone
  EXPECT_NE(merged.has_vertex(a), merged.has_vertex(bsym));
  Symbol kept = merged.has_vertex(a) ? a : bsym;
  EXPECT_EQ(merged.labels(kept).size(), 1u);
  EXPECT_EQ(merged.out_neighbors(kept).size(), 1u);
  EXPECT_EQ(merged.term(merged.out_neighbors(kept)[0]), "c");
}

TEST(SummaryModel, book_fixture_groups_the_two_books) {
  InternerPtr in = std::make_shared<Interner>();
  GraphDatabase g0 = rdf_to_lpg(book_fixture(0), {}, in);
  CompiledModel m(schemex_model(), *in);

  auto h = [&](const GraphDatabase& g, const std::string& t) {
    return build_vertex_summary(m, g, in->intern("urn:test:" + t)).hash();
  };
  EXPECT_EQ(h(g0, "v1"), h(g0, "v7"));
  EXPECT_EQ(h(g0, "v2"), h(g0, "v8"));
  EXPECT_EQ(h(g0, "v3"), h(g0, "v9"));
  EXPECT_NE(h(g0, "v1"), h(g0, "v2"));

  // the books' class has exactly the two outgoing predicate classes
  VertexSummary vs = build_vertex_summary(m, g0, in->intern("urn:test:v1"));
  std::set<std::string> preds;
  for (const SummaryEdge& e : vs.nodes[0].edges)
    if (!e.universal) preds.insert(e.label);
  EXPECT_TRUE(preds.count("urn:test:topic"));
  EXPECT_TRUE(preds.count("urn:test:author"));

  // dropping v7's author edge separates the books
  GraphDatabase g1 = rdf_to_lpg(book_fixture(1), {}, in);
  EXPECT_NE(h(g1, "v1"), h(g1, "v7"));
}

}  // namespace
}  // namespace fluidsum::test
