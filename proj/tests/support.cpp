#include "support.hpp"

#include <cassert>

namespace fluidsum::test {

namespace {

RdfTerm iri(const std::string& s) {
  RdfTerm t;
  t.kind = TermKind::iri;
  t.value = s;
  return t;
}

RdfTerm lit(const std::string& s) {
  RdfTerm t;
  t.kind = TermKind::literal;
  t.value = s;
  return t;
}

RdfStatement quad(const std::string& s, const std::string& p, RdfTerm o,
                  const std::string& graph = "") {
  RdfStatement st;
  st.subject = iri(s);
  st.predicate = p;
  st.object = std::move(o);
  if (!graph.empty()) st.graph = graph;
  return st;
}

const char* kNs = "urn:test:";

}  // namespace

std::vector<RdfStatement> random_statements(TestRng& rng, const RandomGraphSpec& spec) {
  std::vector<RdfStatement> out;
  auto vertex = [&](int i) { return kNs + std::string("v") + std::to_string(i); };
  auto type_of = [&](uint64_t i) { return kNs + std::string("T") + std::to_string(i); };
  auto pred_of = [&](uint64_t i) { return kNs + std::string("p") + std::to_string(i); };
  auto source_of = [&](uint64_t i) { return kNs + std::string("src") + std::to_string(i); };
  auto graph_for = [&]() {
    return spec.sources > 0 ? source_of(rng.below(spec.sources)) : std::string();
  };

  for (int i = 0; i < spec.vertices; ++i) {
    if (rng.chance(spec.typed_fraction)) {
      out.push_back(quad(vertex(i), kRdfTypeIri, iri(type_of(rng.below(spec.label_vocab))),
                         graph_for()));
      if (rng.chance(spec.second_label))
        out.push_back(quad(vertex(i), kRdfTypeIri, iri(type_of(rng.below(spec.label_vocab))),
                           graph_for()));
    }
  }
  for (int e = 0; e < spec.edges; ++e) {
    std::string s = vertex(static_cast<int>(rng.below(spec.vertices)));
    std::string p = pred_of(rng.below(spec.pred_vocab));
    if (rng.chance(spec.literal_fraction)) {
      out.push_back(quad(s, p, lit("lit" + std::to_string(rng.below(8))), graph_for()));
    } else {
      out.push_back(quad(s, p, iri(vertex(static_cast<int>(rng.below(spec.vertices)))),
                         graph_for()));
    }
  }
  return out;
}

std::vector<RdfStatement> churn_statements(TestRng& rng, const std::vector<RdfStatement>& base,
                                           const RandomGraphSpec& spec, double churn) {
  std::vector<RdfStatement> out;
  out.reserve(base.size());
  for (const auto& st : base)
    if (!rng.chance(churn)) out.push_back(st);

  // relabel: swap the type of a few typed statements
  for (auto& st : out)
    if (st.predicate == kRdfTypeIri && rng.chance(churn))
      st.object = iri(kNs + std::string("T") + std::to_string(rng.below(spec.label_vocab)));

  // additions reuse existing subjects and introduce a few fresh ones
  TestRng fresh(rng.next());
  int n_new = static_cast<int>(static_cast<double>(base.size()) * churn);
  RandomGraphSpec grow = spec;
  grow.vertices = spec.vertices + spec.vertices / 4 + 1;  // fresh ids past the base range
  grow.edges = n_new;
  auto added = random_statements(fresh, grow);
  // keep only the edge statements from the regenerated block; type rows for
  // low ids would just duplicate base labels
  for (auto& st : added)
    if (st.predicate != kRdfTypeIri) out.push_back(std::move(st));
  return out;
}

GraphDatabase random_graph(uint64_t seed, const RandomGraphSpec& spec, InternerPtr interner) {
  TestRng rng(seed);
  return rdf_to_lpg(random_statements(rng, spec), LpgOptions{}, std::move(interner));
}

std::pair<GraphDatabase, GraphDatabase> random_graph_pair(uint64_t seed,
                                                          const RandomGraphSpec& spec,
                                                          double churn) {
  TestRng rng(seed);
  auto base = random_statements(rng, spec);
  auto next = churn_statements(rng, base, spec, churn);
  auto interner = std::make_shared<Interner>();
  GraphDatabase a = rdf_to_lpg(base, LpgOptions{}, interner);
  GraphDatabase b = rdf_to_lpg(next, LpgOptions{}, interner);
  return {std::move(a), std::move(b)};
}

std::vector<RdfStatement> book_fixture(int version) {
  assert(version >= 0 && version <= 2);
  auto v = [](int i) { return kNs + std::string("v") + std::to_string(i); };
  std::string Book = kNs + std::string("Book");
  std::string Subject = kNs + std::string("Subject");
  std::string Person = kNs + std::string("Person");
  std::string Publisher = kNs + std::string("Publisher");
  std::string topic = kNs + std::string("topic");
  std::string author = kNs + std::string("author");
  std::string X = kNs + std::string("X");
  std::string Y = kNs + std::string("Y");

  std::vector<RdfStatement> out;
  // source X: v1 (Book) --topic--> v2 (Subject), --author--> v3 (Person)
  out.push_back(quad(v(1), kRdfTypeIri, iri(Book), X));
  out.push_back(quad(v(2), kRdfTypeIri, iri(Subject), X));
  out.push_back(quad(v(3), kRdfTypeIri, iri(Person), X));
  out.push_back(quad(v(1), topic, iri(v(2)), X));
  out.push_back(quad(v(1), author, iri(v(3)), X));
  // source Y: v7 (Book) --topic--> v8 (Subject), --author--> v9 (Person)
  bool keep_v7 = version < 2;
  bool keep_v9 = version < 2;
  if (keep_v7) out.push_back(quad(v(7), kRdfTypeIri, iri(Book), Y));
  out.push_back(quad(v(8), kRdfTypeIri, iri(Subject), Y));
  if (keep_v9) out.push_back(quad(v(9), kRdfTypeIri, iri(Person), Y));
  if (keep_v7) out.push_back(quad(v(7), topic, iri(v(8)), Y));
  if (version == 0) out.push_back(quad(v(7), author, iri(v(9)), Y));
  if (version >= 1) out.push_back(quad(v(10), kRdfTypeIri, iri(Publisher), Y));
  return out;
}

}  // namespace fluidsum::test
