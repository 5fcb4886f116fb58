#pragma once

// Plumbing shared by the CLI and the benchmark tests: versioned dataset
// manifests, change-set (de)serialization, graph-version loading and the
// metrics CSV emitted per summarization run.

#include <cstdint>
#include <string>
#include <vector>

#include "fluidsum/engine.hpp"
#include "fluidsum/graph.hpp"
#include "fluidsum/rdf_io.hpp"

namespace fluidsum {

// One snapshot of an evolving dataset. `format` is "ntriples", "nquads" or
// empty (sniffed from the extension); `compression` is "none" or "gzip" and
// is informational, the reader unwraps ".gz" paths by itself. A non-empty
// `source` tags statements without an explicit graph as members of that
// named graph.
struct ManifestVersion {
  std::string label;
  std::string path;
  std::string format;
  std::string compression = "none";
  std::string source;
};

struct Manifest {
  std::string name;
  std::vector<ManifestVersion> versions;
};

// JSON round trip. Relative version paths are resolved against the manifest
// file's directory on load. Throws IntegrityError on malformed JSON, empty
// version lists or unknown format/compression names.
Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& m, const std::string& path);

std::string changeset_to_json(const ChangeSet& cs);
ChangeSet changeset_from_json(const std::string& text);

// Parses one manifest version into a snapshot over the given interner (a
// fresh one when null). All versions of a run must share the interner so
// engine-visible symbols stay stable across snapshots.
GraphDatabase load_graph_version(const ManifestVersion& v, InternerPtr interner,
                                 const LpgOptions& lpg = {});

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

// One row per (version, model, mode) run. Column order is frozen; timing
// columns sit at the end so consumers can compare runs net of wall-clock
// noise by dropping the "_ms" suffix columns.
struct MetricsRow {
  std::string dataset;
  std::string version;
  std::string model;
  std::string payload;
  std::string mode;
  int workers = 1;
  uint64_t num_vertices = 0;
  uint64_t num_edges = 0;
  uint64_t classes = 0;        // distinct summaries
  uint64_t support_nodes = 0;  // shared non-root tree nodes
  uint64_t tree_edges = 0;
  double vertices_per_class = 0;
  ChangeReport report;
  uint64_t vhi_vertices = 0;
  uint64_t vhi_bytes = 0;
  uint64_t graph_bytes = 0;
  uint64_t sg_bytes = 0;
};

// Header line (no trailing newline). The leading schema_version cell guards
// downstream parsers against silent column drift.
extern const char* kMetricsHeader;
inline constexpr int kMetricsSchemaVersion = 1;

// RFC 4180: fields containing comma, quote or newline are quoted, quotes
// doubled. Everything this writer emits is UTF-8 passthrough.
std::string csv_quote(const std::string& field);

std::string metrics_row_csv(const MetricsRow& row);

// Appends the row, writing the header first when the file is new or empty.
void append_metrics_csv(const std::string& path, const MetricsRow& row);

}  // namespace fluidsum
