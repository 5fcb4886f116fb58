// Benchmark plumbing: manifests, change-set JSON, the metrics CSV and the
// seeded evolving-graph generator (determinism plus ground-truth accounting).

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fluidsum/bench.hpp"
#include "fluidsum/errors.hpp"
#include "fluidsum/generator.hpp"
#include "fluidsum/gzip_io.hpp"
#include "fluidsum/rdf_io.hpp"
#include "support.hpp"

namespace fluidsum::test {
namespace {

namespace fs = std::filesystem;

// Per-test scratch directory, wiped on both entry and exit so reruns never
// see stale files.
struct ScratchDir {
  fs::path dir;

  ScratchDir() {
    const auto* info = testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::path(testing::TempDir()) / (std::string("fluidsum_") + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }

  std::string file(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in) << path;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  ASSERT_TRUE(out) << path;
  out << content;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells{""};
  for (char c : line) {
    if (c == ',')
      cells.emplace_back();
    else
      cells.back() += c;
  }
  return cells;
}

TEST(Bench, manifest_round_trip_resolves_relative_paths) {
  ScratchDir tmp;
  spit(tmp.file("data_v1.nt"), "");
  spit(tmp.file("m.json"), R"({
    "name": "demo",
    "versions": [
      {"label": "v1", "path": "data_v1.nt", "format": "ntriples", "source": "urn:src"},
      {"label": "v2", "path": "/elsewhere/data_v2.nq.gz", "compression": "gzip"}
    ]
  })");

  Manifest m = load_manifest(tmp.file("m.json"));
  EXPECT_EQ(m.name, "demo");
  ASSERT_EQ(m.versions.size(), 2u);
  EXPECT_EQ(m.versions[0].path, tmp.file("data_v1.nt"));  // resolved next to the manifest
  EXPECT_EQ(m.versions[0].format, "ntriples");
  EXPECT_EQ(m.versions[0].compression, "none");
  EXPECT_EQ(m.versions[0].source, "urn:src");
  EXPECT_EQ(m.versions[1].path, "/elsewhere/data_v2.nq.gz");  // absolute stays put
  EXPECT_EQ(m.versions[1].format, "");
  EXPECT_EQ(m.versions[1].compression, "gzip");

  // Saving keeps sibling files relocatable (bare file name) and leaves
  // foreign absolute paths alone.
  save_manifest(m, tmp.file("m2.json"));
  std::string text = slurp(tmp.file("m2.json"));
  EXPECT_NE(text.find("\"data_v1.nt\""), std::string::npos);
  EXPECT_NE(text.find("\"/elsewhere/data_v2.nq.gz\""), std::string::npos);
  EXPECT_EQ(text.find(tmp.file("data_v1.nt")), std::string::npos);

  Manifest again = load_manifest(tmp.file("m2.json"));
  ASSERT_EQ(again.versions.size(), 2u);
  EXPECT_EQ(again.versions[0].path, m.versions[0].path);
  EXPECT_EQ(again.versions[1].path, m.versions[1].path);
  EXPECT_EQ(again.versions[0].source, m.versions[0].source);
}

TEST(Bench, manifest_rejects_malformed_input) {
  ScratchDir tmp;
  auto bad = [&](const char* name, const std::string& body) {
    spit(tmp.file(name), body);
    EXPECT_THROW(load_manifest(tmp.file(name)), IntegrityError) << name;
  };
  bad("not_json.json", "][");
  bad("no_versions.json", R"({"name": "x"})");
  bad("empty_versions.json", R"({"versions": []})");
  bad("no_label.json", R"({"versions": [{"path": "a.nt"}]})");
  bad("no_path.json", R"({"versions": [{"label": "v1"}]})");
  bad("bad_format.json", R"({"versions": [{"label": "v1", "path": "a.nt", "format": "turtle"}]})");
  bad("bad_compression.json",
      R"({"versions": [{"label": "v1", "path": "a.nt", "compression": "zstd"}]})");
  EXPECT_THROW(load_manifest(tmp.file("missing.json")), NotFoundError);

  Manifest empty;
  EXPECT_THROW(save_manifest(empty, tmp.file("out.json")), IntegrityError);
}

TEST(Bench, changeset_json_round_trips) {
  ChangeSet cs;
  cs.add_vertices = {"urn:a", "urn:b"};
  cs.remove_vertices = {"urn:c"};
  cs.add_edges = {{"urn:a", "urn:b"}};
  cs.remove_edges = {{"urn:c", "urn:a"}};
  cs.add_vertex_labels = {{"urn:a", "urn:T"}};
  cs.remove_vertex_labels = {{"urn:b", "urn:U"}};
  cs.add_edge_labels = {{"urn:a", "urn:b", "urn:p"}};
  cs.remove_edge_labels = {{"urn:c", "urn:a", "urn:q"}};
  cs.add_vertex_props = {{"urn:a", "name", "with \"quotes\" and, commas"}};
  cs.remove_vertex_props = {{"urn:b", "name", "x"}};
  cs.add_vertex_memberships = {{"urn:g1", "urn:a"}};
  cs.remove_vertex_memberships = {{"urn:g2", "urn:b"}};
  cs.add_edge_memberships = {{"urn:g1", "urn:a", "urn:b"}};
  cs.remove_edge_memberships = {{"urn:g2", "urn:c", "urn:a"}};

  ChangeSet back = changeset_from_json(changeset_to_json(cs));
  EXPECT_EQ(changeset_to_json(back), changeset_to_json(cs));
  EXPECT_EQ(back.add_vertex_props, cs.add_vertex_props);
  EXPECT_EQ(back.add_edges, cs.add_edges);

  // absent keys mean empty lists
  ChangeSet sparse = changeset_from_json(R"({"add_vertices": ["urn:x"]})");
  EXPECT_EQ(sparse.add_vertices, std::vector<std::string>{"urn:x"});
  EXPECT_TRUE(sparse.remove_edges.empty());

  EXPECT_THROW(changeset_from_json("nope"), IntegrityError);
  EXPECT_THROW(changeset_from_json(R"({"add_edges": [["only-one"]]})"), IntegrityError);
  EXPECT_THROW(changeset_from_json(R"({"add_edge_labels": [["a", "b"]]})"), IntegrityError);
}

TEST(Bench, csv_quoting_follows_the_rules) {
  EXPECT_EQ(csv_quote("plain"), "plain");
  EXPECT_EQ(csv_quote(""), "");
  EXPECT_EQ(csv_quote("has space"), "has space");
  EXPECT_EQ(csv_quote("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_quote("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_quote("line\nbreak"), "\"line\nbreak\"");
  EXPECT_EQ(csv_quote("cr\rhere"), "\"cr\rhere\"");
  EXPECT_EQ(csv_quote("ünïcode"), "ünïcode");  // passthrough, no escaping
}

TEST(Bench, metrics_file_gets_exactly_one_header) {
  ScratchDir tmp;
  MetricsRow row;
  row.dataset = "ds";
  row.version = "v1";
  row.model = "schemex";
  row.payload = "count";
  row.mode = "batch";
  row.workers = 2;
  row.num_vertices = 10;
  row.report.add_schema = 3;

  const std::string path = tmp.file("metrics.csv");
  append_metrics_csv(path, row);
  row.version = "v2";
  append_metrics_csv(path, row);

  std::string text = slurp(path);
  std::string header(kMetricsHeader);
  EXPECT_EQ(text.rfind(header + "\r\n", 0), 0u);                       // header first
  EXPECT_EQ(text.find(header, 1), std::string::npos);                  // and only once
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);            // header + two rows
  EXPECT_NE(text.find("\r\n"), std::string::npos);

  // a pre-existing empty file still gets the header
  const std::string fresh = tmp.file("empty.csv");
  spit(fresh, "");
  append_metrics_csv(fresh, row);
  EXPECT_EQ(slurp(fresh).rfind(header, 0), 0u);

  // every row agrees with the header's column count, schema version first
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);
  const size_t cols = split_csv_line(line).size();
  int rows = 0;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    EXPECT_EQ(cells.size(), cols);
    EXPECT_EQ(cells[0], std::to_string(kMetricsSchemaVersion));
    ++rows;
  }
  EXPECT_EQ(rows, 2);
}

TEST(Bench, metrics_row_quotes_awkward_names) {
  MetricsRow row;
  row.dataset = "data, set";
  row.model = "m\"q";
  std::string line = metrics_row_csv(row);
  EXPECT_NE(line.find("\"data, set\""), std::string::npos);
  EXPECT_NE(line.find("\"m\"\"q\""), std::string::npos);
}

TEST(Bench, load_graph_version_reads_plain_and_gzip_files) {
  ScratchDir tmp;
  const std::string nt =
      "<urn:a> <urn:p> <urn:b> .\n"
      "<urn:a> <" + std::string(kRdfTypeIri) + "> <urn:T> .\n";
  spit(tmp.file("g.nt"), nt);
  spit(tmp.file("g.nt.gz"), gzip_compress(nt));
  spit(tmp.file("g.nq"), "<urn:a> <urn:p> <urn:b> <urn:gq> .\n");

  // plain file, format sniffed, default-graph tag from `source`
  ManifestVersion v{"v1", tmp.file("g.nt"), "", "none", "urn:gsrc"};
  GraphDatabase g = load_graph_version(v, nullptr);
  EXPECT_EQ(g.num_vertices(), 2u);
  EXPECT_EQ(g.num_edges(), 1u);
  std::optional<Symbol> a = g.interner()->find("urn:a");
  ASSERT_TRUE(a.has_value());
  ASSERT_EQ(g.graphs_of(*a).size(), 1u);
  EXPECT_EQ(g.term(g.graphs_of(*a)[0]), "urn:gsrc");
  EXPECT_EQ(g.labels(*a).size(), 1u);

  // same bytes through the gzip path, explicit format this time
  ManifestVersion vz{"v1", tmp.file("g.nt.gz"), "ntriples", "gzip", "urn:gsrc"};
  GraphDatabase gz = load_graph_version(vz, nullptr);
  EXPECT_EQ(gz.num_vertices(), g.num_vertices());
  EXPECT_EQ(gz.num_edges(), g.num_edges());

  // quads carry their own graph name; `source` only covers the default graph
  ManifestVersion vq{"v1", tmp.file("g.nq"), "", "none", "urn:ignored"};
  GraphDatabase gq = load_graph_version(vq, nullptr);
  std::optional<Symbol> aq = gq.interner()->find("urn:a");
  ASSERT_TRUE(aq.has_value());
  ASSERT_EQ(gq.graphs_of(*aq).size(), 1u);
  EXPECT_EQ(gq.term(gq.graphs_of(*aq)[0]), "urn:gq");

  ManifestVersion missing{"v1", tmp.file("nope.nt"), "", "none", ""};
  EXPECT_THROW(load_graph_version(missing, nullptr), NotFoundError);
  ManifestVersion badfmt{"v1", tmp.file("g.nt"), "rdfxml", "none", ""};
  EXPECT_THROW(load_graph_version(badfmt, nullptr), IntegrityError);
}

GeneratorConfig small_cfg(uint64_t seed) {
  GeneratorConfig cfg;
  cfg.seed = seed;
  cfg.versions = 3;
  cfg.vertices = 120;
  cfg.degree = 3;
  cfg.churn = {0.15, 0.10, 0.20};
  cfg.sources = 3;
  return cfg;
}

TEST(Bench, generator_is_deterministic) {
  std::vector<GeneratedVersion> rec1, rec2;
  auto a = generate_statement_versions(small_cfg(42), &rec1);
  auto b = generate_statement_versions(small_cfg(42), &rec2);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]) << "version " << i;
  ASSERT_EQ(rec1.size(), rec2.size());
  for (size_t i = 0; i < rec1.size(); ++i) {
    EXPECT_EQ(rec1[i].num_entities, rec2[i].num_entities);
    EXPECT_EQ(rec1[i].num_statements, rec2[i].num_statements);
    EXPECT_EQ(rec1[i].vertices_added, rec2[i].vertices_added);
    EXPECT_EQ(rec1[i].vertices_removed, rec2[i].vertices_removed);
    EXPECT_EQ(rec1[i].vertices_relabeled, rec2[i].vertices_relabeled);
  }

  auto c = generate_statement_versions(small_cfg(43));
  EXPECT_NE(a[0], c[0]);  // the seed actually matters
}

TEST(Bench, generator_profiles_shape_the_vocabulary) {
  GeneratorConfig cfg = small_cfg(7);
  cfg.versions = 1;
  cfg.vertices = 400;
  auto bench = generate_statement_versions(cfg);
  cfg.profile = GenProfile::web;
  auto web = generate_statement_versions(cfg);

  auto predicates = [](const std::vector<RdfStatement>& sts) {
    std::set<std::string> p;
    for (const RdfStatement& st : sts) p.insert(st.predicate);
    return p;
  };
  // web draws from a much wider predicate vocabulary
  EXPECT_GT(predicates(web[0]).size(), predicates(bench[0]).size());
  EXPECT_NE(bench[0], web[0]);

  EXPECT_EQ(gen_profile_from_name("web"), GenProfile::web);
  EXPECT_STREQ(gen_profile_name(GenProfile::benchmark), "benchmark");
  EXPECT_THROW(gen_profile_from_name("tiny"), IntegrityError);
}

TEST(Bench, generator_zero_churn_repeats_the_first_version) {
  GeneratorConfig cfg = small_cfg(11);
  cfg.churn = {};
  std::vector<GeneratedVersion> rec;
  auto versions = generate_statement_versions(cfg, &rec);
  ASSERT_EQ(versions.size(), 3u);
  EXPECT_EQ(versions[1], versions[0]);
  EXPECT_EQ(versions[2], versions[0]);
  for (const GeneratedVersion& r : rec) {
    EXPECT_EQ(r.vertices_added, 0u);
    EXPECT_EQ(r.vertices_removed, 0u);
    EXPECT_EQ(r.vertices_relabeled, 0u);
  }
}

TEST(Bench, generator_full_deletion_empties_the_graph) {
  GeneratorConfig cfg = small_cfg(13);
  cfg.versions = 2;
  cfg.churn = {0.0, 1.0, 0.0};
  std::vector<GeneratedVersion> rec;
  auto versions = generate_statement_versions(cfg, &rec);
  EXPECT_FALSE(versions[0].empty());
  EXPECT_TRUE(versions[1].empty());
  EXPECT_EQ(rec[1].num_entities, 0u);
  EXPECT_EQ(rec[1].vertices_removed, rec[0].num_entities);
}

// Entities live under one IRI prefix, so the truth records can be checked
// against honest graph-level diffs of the parsed snapshots.
TEST(Bench, generator_truth_matches_graph_level_accounting) {
  const std::string prefix = "http://example.org/v/";
  GeneratorConfig cfg = small_cfg(7);
  cfg.versions = 4;
  cfg.vertices = 250;
  std::vector<GeneratedVersion> rec;
  auto versions = generate_statement_versions(cfg, &rec);

  InternerPtr in = std::make_shared<Interner>();
  std::vector<GraphDatabase> graphs;
  for (const auto& sts : versions) graphs.push_back(rdf_to_lpg(sts, {}, in));

  auto entities = [&](const GraphDatabase& g) {
    std::map<std::string, std::set<std::string>> labeled;  // entity -> label set
    for (Symbol v : g.vertices()) {
      std::string t = g.term(v);
      if (t.rfind(prefix, 0) != 0) continue;
      std::set<std::string>& ls = labeled[t];
      for (Symbol l : g.labels(v)) ls.insert(g.term(l));
    }
    return labeled;
  };

  for (size_t i = 1; i < graphs.size(); ++i) {
    auto prev = entities(graphs[i - 1]);
    auto cur = entities(graphs[i]);
    uint64_t added = 0, removed = 0, relabeled = 0;
    for (const auto& [t, ls] : cur)
      if (!prev.count(t)) ++added;
    for (const auto& [t, ls] : prev) {
      auto it = cur.find(t);
      if (it == cur.end())
        ++removed;
      else if (it->second != ls)
        ++relabeled;
    }
    EXPECT_EQ(added, rec[i].vertices_added) << "version " << i;
    EXPECT_EQ(removed, rec[i].vertices_removed) << "version " << i;
    EXPECT_EQ(relabeled, rec[i].vertices_relabeled) << "version " << i;
    EXPECT_EQ(cur.size(), rec[i].num_entities) << "version " << i;
    EXPECT_EQ(versions[i].size(), rec[i].num_statements) << "version " << i;
  }
}

TEST(Bench, generate_dataset_writes_a_loadable_tree) {
  ScratchDir tmp;
  GeneratorConfig cfg = small_cfg(21);
  cfg.name = "probe";
  cfg.out_dir = tmp.file("out");
  GeneratedDataset ds = generate_dataset(cfg);

  // the manifest round-trips through disk and the data parses back in
  Manifest m = load_manifest(ds.manifest_path);
  EXPECT_EQ(m.name, "probe");
  ASSERT_EQ(m.versions.size(), 3u);
  InternerPtr in = std::make_shared<Interner>();
  for (size_t i = 0; i < m.versions.size(); ++i) {
    EXPECT_EQ(m.versions[i].label, "v" + std::to_string(i + 1));
    GraphDatabase g = load_graph_version(m.versions[i], in);
    EXPECT_GT(g.num_vertices(), 0u);
  }

  // files match the in-memory generator byte for byte
  auto mem = generate_statement_versions(cfg);
  for (size_t i = 0; i < ds.versions.size(); ++i) {
    std::ostringstream expect;
    serialize_rdf(mem[i], RdfFormat::nquads, expect);
    EXPECT_EQ(slurp(ds.versions[i].path), expect.str()) << "version " << i;
  }

  std::string truth = slurp(ds.truth_path);
  EXPECT_NE(truth.find("\"seed\": 21"), std::string::npos);
  EXPECT_NE(truth.find("\"profile\": \"benchmark\""), std::string::npos);
  EXPECT_NE(truth.find("\"relabeled\""), std::string::npos);
}

TEST(Bench, generator_rejects_bad_parameters) {
  GeneratorConfig cfg;
  cfg.versions = 0;
  EXPECT_THROW(generate_statement_versions(cfg), IntegrityError);
  cfg = {};
  cfg.sources = 0;
  EXPECT_THROW(generate_statement_versions(cfg), IntegrityError);
  cfg = {};
  cfg.churn.del_rate = 1.5;
  EXPECT_THROW(generate_statement_versions(cfg), IntegrityError);
  cfg = {};
  EXPECT_THROW(generate_dataset(cfg), IntegrityError);  // no out_dir
}

}  // namespace
}  // namespace fluidsum::test
