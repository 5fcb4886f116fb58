#pragma once

// Seeded synthetic evolving-graph generator. Produces a sequence of N-Quads
// snapshots with controllable size, degree, schema variety and per-version
// churn, plus the manifest and a ground-truth JSON with the applied churn
// counts. Fully reproducible from (seed, parameters): randomness comes from
// one fixed-order mt19937_64 stream through portable bounded draws, never
// through standard distribution objects (their sequences vary by library).

#include <cstdint>
#include <string>
#include <vector>

#include "fluidsum/bench.hpp"
#include "fluidsum/rdf_io.hpp"

namespace fluidsum {

struct ChurnRates {
  double add_rate = 0;      // new vertices per existing vertex
  double del_rate = 0;      // removed vertices per existing vertex
  double relabel_rate = 0;  // surviving vertices with a changed type set
};

// Schema-variety presets: `benchmark` mimics generated benchmark data (small
// vocabularies, almost everything typed), `web` mimics crawled data (wide
// vocabularies, many untyped vertices, heavy-tailed degrees via hubs).
enum class GenProfile : uint8_t { benchmark, web };

GenProfile gen_profile_from_name(const std::string& name);
const char* gen_profile_name(GenProfile p);

struct GeneratorConfig {
  uint64_t seed = 1;
  int versions = 2;
  int vertices = 1000;  // initial vertex count
  int degree = 3;       // mean out-degree
  ChurnRates churn;
  GenProfile profile = GenProfile::benchmark;
  int sources = 4;  // named graphs statements are spread over
  std::string name = "synthetic";
  std::string out_dir;  // generate_dataset only
};

struct GeneratedVersion {
  std::string label;
  std::string path;  // empty for in-memory generation
  uint64_t num_entities = 0;
  uint64_t num_statements = 0;
  // churn applied to reach this version (zero for the first)
  uint64_t vertices_added = 0;
  uint64_t vertices_removed = 0;
  uint64_t vertices_relabeled = 0;
};

struct GeneratedDataset {
  Manifest manifest;
  std::vector<GeneratedVersion> versions;
  std::string manifest_path;
  std::string truth_path;
};

// In-memory variant: one statement list per version, same determinism
// guarantees, no filesystem access. `out` receives the per-version records
// (paths empty).
std::vector<std::vector<RdfStatement>> generate_statement_versions(
    const GeneratorConfig& cfg, std::vector<GeneratedVersion>* out = nullptr);

// Writes <name>_v<i>.nq files, <name>.manifest.json and <name>.truth.json
// under cfg.out_dir (created if missing) and returns their descriptions.
GeneratedDataset generate_dataset(const GeneratorConfig& cfg);

}  // namespace fluidsum
