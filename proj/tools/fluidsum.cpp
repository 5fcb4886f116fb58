// fluidsum: drive summarization runs over versioned datasets, generate
// synthetic evolving graphs, and inspect or compare stored summary graphs.
//
//   fluidsum summarize --manifest data.manifest.json --mode incremental --out runs/
//   fluidsum generate  --out data/ --vertices 5000 --versions 4 --del-rate 0.05
//   fluidsum stats     --sg runs/sg_v2.bin --vhi runs/vhi_v2.bin
//   fluidsum diff      runs/sg_batch.bin runs/sg_incr.bin
//
// Exit codes: 0 success (for diff: stores are equal), 1 diff found a
// difference, 2 any error. Log verbosity comes from FLUID_LOG
// (trace|debug|info|warn|error).

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fluidsum/bench.hpp"
#include "fluidsum/engine.hpp"
#include "fluidsum/errors.hpp"
#include "fluidsum/generator.hpp"
#include "fluidsum/log.hpp"
#include "fluidsum/rdf_io.hpp"

namespace {

using namespace fluidsum;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SchemaElement resolve_model(const std::string& name, int k, const std::string& rdf_type) {
  if (name == "schemex") return schemex_model(k, rdf_type);
  if (name == "attrcoll") return attrcoll_model(rdf_type);
  if (name == "classcoll") return classcoll_model(rdf_type);
  // anything else is a path to a model description in JSON
  return parse_model_json(read_text_file(name));
}

PayloadKind resolve_payload(const std::string& name) {
  if (name == "sources") return PayloadKind::source_set;
  if (name == "vertices") return PayloadKind::vertex_set;
  return payload_kind_from_name(name);
}

// Version labels become part of artifact file names.
std::string sanitize_label(const std::string& label) {
  std::string out = label;
  for (char& c : out) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '.' || c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return out.empty() ? std::string("v") : out;
}

void write_binary_file(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IntegrityError("cannot write " + path);
  fn(out);
  out.flush();
  if (!out) throw IntegrityError("short write to " + path);
}

struct SummarizeArgs {
  std::string manifest;
  std::string model = "schemex";
  int k = 1;
  std::string payload = "count";
  std::string mode = "incremental";
  int workers = 1;
  int partitions = 0;
  bool paranoid = false;
  std::string rdf_type = kRdfTypeIri;
  std::string out_dir = ".";
  std::string metrics;  // defaults to <out>/metrics.csv
  bool no_artifacts = false;
};

int run_summarize(const SummarizeArgs& a) {
  Manifest manifest = load_manifest(a.manifest);

  RunConfig cfg;
  cfg.model = resolve_model(a.model, a.k, a.rdf_type);
  cfg.payload = resolve_payload(a.payload);
  cfg.workers = a.workers;
  cfg.partitions = a.partitions;
  cfg.paranoid = a.paranoid;
  if (a.mode == "batch") {
    cfg.mode = RunMode::batch;
  } else if (a.mode == "incremental") {
    cfg.mode = RunMode::incremental;
  } else {
    throw IntegrityError("unknown mode '" + a.mode + "' (batch or incremental)");
  }

  std::string model_label = a.model;
  if (a.model == "schemex" && a.k != 1) model_label += "-k" + std::to_string(a.k);
  std::string metrics_path = a.metrics.empty() ? a.out_dir + "/metrics.csv" : a.metrics;

  std::filesystem::create_directories(a.out_dir);

  // Every version of a run shares one interner; the index stores symbols and
  // they must mean the same strings in each snapshot.
  auto interner = std::make_shared<Interner>();
  LpgOptions lpg;
  lpg.rdf_type_iri = a.rdf_type;

  SummaryGraph sg;
  VertexHashIndex index;
  std::optional<GraphDatabase> prev;

  for (const ManifestVersion& mv : manifest.versions) {
    GraphDatabase g = load_graph_version(mv, interner, lpg);

    ChangeReport rep;
    if (cfg.mode == RunMode::batch) {
      // each version summarized from scratch into a fresh store
      sg.clear();
      index.clear();
      rep = summarize(cfg, g, sg, index);
    } else if (!prev) {
      rep = summarize(cfg, g, sg, index);  // first version: nothing to diff against
    } else {
      ChangeSet changes = diff_graphs(*prev, g);
      rep = summarize_update(cfg, *prev, g, changes, sg, index);
    }

    SummaryGraphStats sstats = sg.stats();
    VertexIndexStats istats = index.stats();

    MetricsRow row;
    row.dataset = manifest.name;
    row.version = mv.label;
    row.model = model_label;
    row.payload = payload_kind_name(cfg.payload);
    row.mode = a.mode;
    row.workers = cfg.workers;
    row.num_vertices = rep.num_vertices;
    row.num_edges = rep.num_edges;
    row.classes = sstats.num_classes;
    row.support_nodes = sstats.num_support_nodes;
    row.tree_edges = sstats.num_tree_edges;
    row.vertices_per_class =
        sstats.num_classes ? double(rep.num_vertices) / double(sstats.num_classes) : 0.0;
    row.report = rep;
    row.vhi_vertices = istats.num_vertices;
    row.vhi_bytes = istats.approx_bytes;
    row.graph_bytes = g.approx_bytes();
    row.sg_bytes = sg.approx_bytes();
    append_metrics_csv(metrics_path, row);

    if (!a.no_artifacts) {
      std::string stem = a.out_dir + "/";
      std::string label = sanitize_label(mv.label);
      write_binary_file(stem + "sg_" + label + ".bin", [&](std::ostream& o) { sg.save(o); });
      write_binary_file(stem + "sg_" + label + ".json",
                        [&](std::ostream& o) { sg.export_json(o); });
      write_binary_file(stem + "vhi_" + label + ".bin",
                        [&](std::ostream& o) { index.save(o, *interner); });
    }

    std::printf("%s: %" PRIu64 " vertices, %" PRIu64 " edges -> %" PRIu64
                " classes; changed %" PRIu64 ", unchanged %" PRIu64 ", store ops %" PRIu64 "\n",
                mv.label.c_str(), rep.num_vertices, rep.num_edges, sstats.num_classes,
                rep.total_changed(), rep.unchanged, rep.store_ops);

    prev.emplace(std::move(g));
  }

  std::printf("metrics appended to %s\n", metrics_path.c_str());
  return 0;
}

int run_generate(const GeneratorConfig& cfg) {
  GeneratedDataset ds = generate_dataset(cfg);
  for (const GeneratedVersion& v : ds.versions) {
    std::printf("%s: %" PRIu64 " entities, %" PRIu64 " statements (+%" PRIu64 " -%" PRIu64
                " ~%" PRIu64 ")\n",
                v.label.c_str(), v.num_entities, v.num_statements, v.vertices_added,
                v.vertices_removed, v.vertices_relabeled);
  }
  std::printf("manifest written to %s\n", ds.manifest_path.c_str());
  return 0;
}

int run_stats(const std::string& sg_path, const std::string& vhi_path) {
  SummaryGraph sg;
  {
    std::ifstream in(sg_path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open " + sg_path);
    sg.load(in);
  }
  sg.validate();
  SummaryGraphStats s = sg.stats();

  nlohmann::ordered_json j;
  j["classes"] = s.num_classes;
  j["support_nodes"] = s.num_support_nodes;
  j["tree_edges"] = s.num_tree_edges;
  j["payload_count_total"] = s.payload_count_total;
  j["payload_items_total"] = s.payload_items_total;
  j["sg_bytes"] = sg.approx_bytes();

  if (!vhi_path.empty()) {
    Interner interner;
    VertexHashIndex index;
    std::ifstream in(vhi_path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open " + vhi_path);
    index.load(in, interner);
    index.validate();
    VertexIndexStats vs = index.stats();
    j["vhi"] = {{"vertices", vs.num_vertices},
                {"classes", vs.num_classes},
                {"vhi_bytes", vs.approx_bytes}};
  }

  std::printf("%s\n", j.dump(2).c_str());
  return 0;
}

int run_diff(const std::string& path_a, const std::string& path_b, int limit) {
  SummaryGraph a, b;
  {
    std::ifstream in(path_a, std::ios::binary);
    if (!in) throw NotFoundError("cannot open " + path_a);
    a.load(in);
  }
  {
    std::ifstream in(path_b, std::ios::binary);
    if (!in) throw NotFoundError("cannot open " + path_b);
    b.load(in);
  }

  if (a.canonical_bytes() == b.canonical_bytes()) {
    std::printf("equal: %" PRIu64 " classes\n", a.stats().num_classes);
    return 0;
  }

  // Element hashes identify whole summary trees, so the difference list is
  // three-way: classes only on one side, and shared classes whose payloads
  // disagree.
  std::vector<Hash128> ha = a.element_hashes();
  std::vector<Hash128> hb = b.element_hashes();
  uint64_t shown = 0, total = 0;
  auto report = [&](const char* what, Hash128 h) {
    ++total;
    if (shown < uint64_t(limit)) {
      std::printf("%s %s\n", what, h.hex().c_str());
      ++shown;
    }
  };
  size_t i = 0, jx = 0;
  while (i < ha.size() || jx < hb.size()) {
    if (jx == hb.size() || (i < ha.size() && ha[i] < hb[jx])) {
      report("only in a:", ha[i++]);
    } else if (i == ha.size() || hb[jx] < ha[i]) {
      report("only in b:", hb[jx++]);
    } else {
      if (!(a.payload_of(ha[i]) == b.payload_of(ha[i]))) report("payload differs:", ha[i]);
      ++i, ++jx;
    }
  }
  if (total > shown) std::printf("... and %" PRIu64 " more\n", total - shown);
  if (total == 0) std::printf("stores disagree but no element-level difference found\n");
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structural graph summaries over evolving RDF/LPG snapshots"};
  app.require_subcommand(1);

  SummarizeArgs sa;
  CLI::App* sum = app.add_subcommand("summarize", "summarize every version of a dataset");
  sum->add_option("--manifest", sa.manifest, "dataset manifest (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sum->add_option("--model", sa.model, "schemex | attrcoll | classcoll | path to model JSON")
      ->capture_default_str();
  sum->add_option("--k", sa.k, "chaining depth for schemex")
      ->check(CLI::Range(1, 16))
      ->capture_default_str();
  sum->add_option("--payload", sa.payload, "count | sources | vertices")->capture_default_str();
  sum->add_option("--mode", sa.mode, "batch | incremental")->capture_default_str();
  sum->add_option("--workers", sa.workers, "merge-phase worker threads")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();
  sum->add_option("--partitions", sa.partitions, "hash partitions (0: four per worker)")
      ->check(CLI::Range(0, 1 << 20));
  sum->add_flag("--paranoid", sa.paranoid, "re-derive every summary and compare");
  sum->add_option("--rdf-type", sa.rdf_type, "type predicate IRI")->capture_default_str();
  sum->add_option("--out", sa.out_dir, "output directory for artifacts and metrics")
      ->capture_default_str();
  sum->add_option("--metrics", sa.metrics, "metrics CSV path (default <out>/metrics.csv)");
  sum->add_flag("--no-artifacts", sa.no_artifacts, "skip per-version store exports");

  GeneratorConfig gc;
  std::string profile_name = "benchmark";
  CLI::App* gen = app.add_subcommand("generate", "write a synthetic evolving dataset");
  gen->add_option("--out", gc.out_dir, "output directory")->required();
  gen->add_option("--name", gc.name, "dataset name (file prefix)")->capture_default_str();
  gen->add_option("--seed", gc.seed, "random seed")->capture_default_str();
  gen->add_option("--versions", gc.versions, "number of versions")
      ->check(CLI::Range(1, 10000))
      ->capture_default_str();
  gen->add_option("--vertices", gc.vertices, "initial vertex count")
      ->check(CLI::Range(0, 100000000))
      ->capture_default_str();
  gen->add_option("--degree", gc.degree, "mean out-degree")
      ->check(CLI::Range(0, 100000))
      ->capture_default_str();
  gen->add_option("--add-rate", gc.churn.add_rate, "new vertices per existing vertex")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--del-rate", gc.churn.del_rate, "removed vertices per existing vertex")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--relabel-rate", gc.churn.relabel_rate, "retyped share of survivors")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--profile", profile_name, "benchmark | web")->capture_default_str();
  gen->add_option("--sources", gc.sources, "named graphs to spread statements over")
      ->check(CLI::Range(1, 100000))
      ->capture_default_str();

  std::string stats_sg, stats_vhi;
  CLI::App* stats = app.add_subcommand("stats", "print stats for a stored summary graph");
  stats->add_option("--sg", stats_sg, "summary graph store (.bin)")
      ->required()
      ->check(CLI::ExistingFile);
  stats->add_option("--vhi", stats_vhi, "vertex index (.bin)")->check(CLI::ExistingFile);

  std::string diff_a, diff_b;
  int diff_limit = 20;
  CLI::App* diff = app.add_subcommand("diff", "compare two stored summary graphs");
  diff->add_option("a", diff_a, "first store")->required()->check(CLI::ExistingFile);
  diff->add_option("b", diff_b, "second store")->required()->check(CLI::ExistingFile);
  diff->add_option("--limit", diff_limit, "max differences to print")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sum->parsed()) return run_summarize(sa);
    if (gen->parsed()) {
      gc.profile = gen_profile_from_name(profile_name);
      return run_generate(gc);
    }
    if (stats->parsed()) return run_stats(stats_sg, stats_vhi);
    if (diff->parsed()) return run_diff(diff_a, diff_b, diff_limit);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fluidsum: %s\n", e.what());
    return 2;
  }
  return 0;
}
