#include "fluidsum/generator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "fluidsum/errors.hpp"

namespace fluidsum {

namespace {

// Portable draws over a fixed mt19937_64 stream. The modulo bias of below()
// is irrelevant here (bounds are tiny against 2^64) and buys bit-exact
// reproducibility across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }
  uint64_t below(uint64_t n) { return n ? next() % n : 0; }
  bool chance(double p) { return (next() >> 11) * 0x1.0p-53 < p; }

 private:
  std::mt19937_64 eng_;
};

struct ProfileParams {
  int type_vocab;
  int pred_vocab;
  double typed_fraction;
  double second_type_fraction;
  double literal_fraction;
  double hub_fraction;
  int hub_multiplier;
};

ProfileParams params_for(GenProfile p) {
  switch (p) {
    case GenProfile::benchmark:
      return {6, 10, 0.95, 0.25, 0.9, 0.0, 1};
    case GenProfile::web:
      return {40, 60, 0.45, 0.35, 0.35, 0.005, 12};
  }
  throw IntegrityError("unknown generator profile");
}

struct GenVertex {
  uint64_t id = 0;
  int source = 0;
  bool named = false;
  bool hub = false;
  std::vector<int> types;
  std::vector<std::pair<int, uint64_t>> edges;  // (predicate index, target id)
};

const std::string kBase = "http://example.org/";

std::string entity_iri(uint64_t id) { return kBase + "v/" + std::to_string(id); }
std::string type_iri(int t) { return kBase + "class/C" + std::to_string(t); }
std::string pred_iri(int p) { return kBase + "prop/p" + std::to_string(p); }
std::string source_iri(int s) { return kBase + "source/S" + std::to_string(s); }
const std::string kNamePred = kBase + "prop/name";

class World {
 public:
  World(const GeneratorConfig& cfg)
      : cfg_(cfg), pp_(params_for(cfg.profile)), rng_(cfg.seed) {
    if (cfg.versions < 1) throw IntegrityError("generator needs at least one version");
    if (cfg.vertices < 0 || cfg.degree < 0 || cfg.sources < 1)
      throw IntegrityError("generator sizes must be non-negative (and sources positive)");
    for (double r : {cfg.churn.add_rate, cfg.churn.del_rate, cfg.churn.relabel_rate})
      if (r < 0 || r > 1) throw IntegrityError("churn rates must lie in [0, 1]");
    for (int i = 0; i < cfg.vertices; ++i) spawn();
    wire_edges(0);
  }

  // Mutates the world into the next version; returns applied churn counts.
  GeneratedVersion evolve() {
    GeneratedVersion rec;
    const size_t n = verts_.size();
    const auto count = [&](double rate) {
      return static_cast<size_t>(std::llround(rate * static_cast<double>(n)));
    };

    // deletions: a seeded partial shuffle picks distinct victims
    size_t dels = std::min(count(cfg_.churn.del_rate), n);
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    for (size_t i = 0; i < dels; ++i)
      std::swap(idx[i], idx[i + rng_.below(n - i)]);
    std::unordered_set<uint64_t> dead;
    for (size_t i = 0; i < dels; ++i) dead.insert(verts_[idx[i]].id);
    if (!dead.empty()) {
      std::erase_if(verts_, [&](const GenVertex& v) { return dead.count(v.id) > 0; });
      for (GenVertex& v : verts_)
        std::erase_if(v.edges, [&](const auto& e) { return dead.count(e.second) > 0; });
    }
    rec.vertices_removed = dels;

    // relabels among survivors
    size_t m = verts_.size();
    size_t rels = std::min(count(cfg_.churn.relabel_rate), m);
    std::vector<size_t> sidx(m);
    for (size_t i = 0; i < m; ++i) sidx[i] = i;
    for (size_t i = 0; i < rels; ++i) {
      std::swap(sidx[i], sidx[i + rng_.below(m - i)]);
      relabel(verts_[sidx[i]]);
    }
    rec.vertices_relabeled = rels;

    // additions, wired into the surviving population
    size_t adds = count(cfg_.churn.add_rate);
    size_t first_new = verts_.size();
    for (size_t i = 0; i < adds; ++i) spawn();
    wire_edges(first_new);
    rec.vertices_added = adds;
    return rec;
  }

  std::vector<RdfStatement> statements() const {
    std::vector<RdfStatement> out;
    for (const GenVertex& v : verts_) {
      RdfTerm subj{TermKind::iri, entity_iri(v.id), "", ""};
      std::string graph = source_iri(v.source);
      for (int t : v.types)
        out.push_back({subj, kRdfTypeIri, RdfTerm{TermKind::iri, type_iri(t), "", ""}, graph});
      if (v.named)
        out.push_back({subj, kNamePred,
                       RdfTerm{TermKind::literal, "n" + std::to_string(v.id), "", ""}, graph});
      for (const auto& [p, target] : v.edges)
        out.push_back(
            {subj, pred_iri(p), RdfTerm{TermKind::iri, entity_iri(target), "", ""}, graph});
    }
    return out;
  }

  size_t entity_count() const { return verts_.size(); }

 private:
  void spawn() {
    GenVertex v;
    v.id = next_id_++;
    v.source = static_cast<int>(rng_.below(static_cast<uint64_t>(cfg_.sources)));
    v.hub = rng_.chance(pp_.hub_fraction);
    v.named = rng_.chance(pp_.literal_fraction);
    if (rng_.chance(pp_.typed_fraction)) {
      v.types.push_back(static_cast<int>(rng_.below(static_cast<uint64_t>(pp_.type_vocab))));
      if (rng_.chance(pp_.second_type_fraction)) {
        int t = static_cast<int>(rng_.below(static_cast<uint64_t>(pp_.type_vocab)));
        if (std::find(v.types.begin(), v.types.end(), t) == v.types.end()) v.types.push_back(t);
      }
    }
    verts_.push_back(std::move(v));
  }

  // Gives every vertex from `first` on its out-edges, targeting the current
  // population (self-loops possible and intended).
  void wire_edges(size_t first) {
    if (verts_.empty()) return;
    for (size_t i = first; i < verts_.size(); ++i) {
      GenVertex& v = verts_[i];
      uint64_t deg = rng_.below(2 * static_cast<uint64_t>(cfg_.degree) + 1);
      if (v.hub) deg *= static_cast<uint64_t>(pp_.hub_multiplier);
      for (uint64_t e = 0; e < deg; ++e) {
        int p = static_cast<int>(rng_.below(static_cast<uint64_t>(pp_.pred_vocab)));
        uint64_t target = verts_[rng_.below(verts_.size())].id;
        v.edges.emplace_back(p, target);
      }
    }
  }

  void relabel(GenVertex& v) {
    int t = static_cast<int>(rng_.below(static_cast<uint64_t>(pp_.type_vocab)));
    if (v.types.empty()) {
      v.types.push_back(t);
      return;
    }
    size_t slot = rng_.below(v.types.size());
    // force a visible change even when the fresh draw collides
    if (v.types[slot] == t) t = (t + 1) % pp_.type_vocab;
    v.types[slot] = t;
  }

  const GeneratorConfig& cfg_;
  ProfileParams pp_;
  Rng rng_;
  std::vector<GenVertex> verts_;
  uint64_t next_id_ = 0;
};

}  // namespace

GenProfile gen_profile_from_name(const std::string& name) {
  if (name == "benchmark") return GenProfile::benchmark;
  if (name == "web") return GenProfile::web;
  throw IntegrityError("unknown generator profile '" + name + "'");
}

const char* gen_profile_name(GenProfile p) {
  return p == GenProfile::benchmark ? "benchmark" : "web";
}

std::vector<std::vector<RdfStatement>> generate_statement_versions(
    const GeneratorConfig& cfg, std::vector<GeneratedVersion>* out) {
  World world(cfg);
  std::vector<std::vector<RdfStatement>> versions;
  for (int i = 0; i < cfg.versions; ++i) {
    GeneratedVersion rec;
    if (i > 0) rec = world.evolve();
    rec.label = "v" + std::to_string(i + 1);
    versions.push_back(world.statements());
    rec.num_entities = world.entity_count();
    rec.num_statements = versions.back().size();
    if (out) out->push_back(std::move(rec));
  }
  return versions;
}

GeneratedDataset generate_dataset(const GeneratorConfig& cfg) {
  if (cfg.out_dir.empty()) throw IntegrityError("generate_dataset needs an output directory");
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  GeneratedDataset ds;
  std::vector<std::vector<RdfStatement>> versions =
      generate_statement_versions(cfg, &ds.versions);

  ds.manifest.name = cfg.name;
  for (size_t i = 0; i < versions.size(); ++i) {
    GeneratedVersion& rec = ds.versions[i];
    rec.path = (fs::path(cfg.out_dir) / (cfg.name + "_" + rec.label + ".nq")).string();
    std::ofstream out(rec.path, std::ios::binary | std::ios::trunc);
    if (!out) throw IntegrityError("cannot write '" + rec.path + "'");
    serialize_rdf(versions[i], RdfFormat::nquads, out);
    if (!out) throw IntegrityError("short write to '" + rec.path + "'");
    ds.manifest.versions.push_back(
        ManifestVersion{rec.label, rec.path, "nquads", "none", ""});
  }

  ds.manifest_path = (fs::path(cfg.out_dir) / (cfg.name + ".manifest.json")).string();
  save_manifest(ds.manifest, ds.manifest_path);

  nlohmann::ordered_json truth;
  truth["name"] = cfg.name;
  truth["seed"] = cfg.seed;
  truth["profile"] = gen_profile_name(cfg.profile);
  truth["churn"] = {{"add_rate", cfg.churn.add_rate},
                    {"del_rate", cfg.churn.del_rate},
                    {"relabel_rate", cfg.churn.relabel_rate}};
  truth["versions"] = nlohmann::ordered_json::array();
  for (const GeneratedVersion& rec : ds.versions)
    truth["versions"].push_back({{"label", rec.label},
                                 {"entities", rec.num_entities},
                                 {"statements", rec.num_statements},
                                 {"added", rec.vertices_added},
                                 {"removed", rec.vertices_removed},
                                 {"relabeled", rec.vertices_relabeled}});
  ds.truth_path = (fs::path(cfg.out_dir) / (cfg.name + ".truth.json")).string();
  std::ofstream tf(ds.truth_path, std::ios::binary | std::ios::trunc);
  if (!tf) throw IntegrityError("cannot write '" + ds.truth_path + "'");
  tf << truth.dump(2) << "\n";

  return ds;
}

}  // namespace fluidsum
