#include "fluidsum/bench.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fluidsum/errors.hpp"

namespace fluidsum {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json parse_json(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw IntegrityError(std::string("malformed JSON in ") + what);
  return j;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IntegrityError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IntegrityError("short write to '" + path + "'");
}

void check_version_fields(const ManifestVersion& v) {
  if (v.label.empty()) throw IntegrityError("manifest version without a label");
  if (v.path.empty()) throw IntegrityError("manifest version '" + v.label + "' without a path");
  if (!v.format.empty() && v.format != "ntriples" && v.format != "nquads")
    throw IntegrityError("manifest version '" + v.label + "': unknown format '" + v.format + "'");
  if (!v.compression.empty() && v.compression != "none" && v.compression != "gzip")
    throw IntegrityError("manifest version '" + v.label + "': unknown compression '" +
                         v.compression + "'");
}

}  // namespace

Manifest load_manifest(const std::string& path) {
  json j = parse_json(read_file(path), path.c_str());
  if (!j.is_object() || !j.contains("versions"))
    throw IntegrityError("manifest '" + path + "' has no versions list");

  Manifest m;
  m.name = j.value("name", std::string{});
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  for (const json& e : j.at("versions")) {
    ManifestVersion v;
    v.label = e.value("label", std::string{});
    v.path = e.value("path", std::string{});
    v.format = e.value("format", std::string{});
    v.compression = e.value("compression", std::string("none"));
    v.source = e.value("source", std::string{});
    check_version_fields(v);
    std::filesystem::path p(v.path);
    if (p.is_relative()) v.path = (base / p).string();
    m.versions.push_back(std::move(v));
  }
  if (m.versions.empty()) throw IntegrityError("manifest '" + path + "' lists no versions");
  return m;
}

void save_manifest(const Manifest& m, const std::string& path) {
  if (m.versions.empty()) throw IntegrityError("refusing to save a manifest with no versions");
  ordered_json j;
  j["name"] = m.name;
  j["versions"] = ordered_json::array();
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  for (const ManifestVersion& v : m.versions) {
    check_version_fields(v);
    ordered_json e;
    e["label"] = v.label;
    // keep manifests relocatable when the data sits next to them
    std::filesystem::path p(v.path);
    e["path"] = p.parent_path() == base ? p.filename().string() : v.path;
    if (!v.format.empty()) e["format"] = v.format;
    e["compression"] = v.compression.empty() ? "none" : v.compression;
    if (!v.source.empty()) e["source"] = v.source;
    j["versions"].push_back(std::move(e));
  }
  write_file(path, j.dump(2) + "\n");
}

namespace {

json pairs_to_json(const std::vector<std::pair<std::string, std::string>>& v) {
  json a = json::array();
  for (const auto& [x, y] : v) a.push_back(json::array({x, y}));
  return a;
}

json triples_to_json(const std::vector<std::tuple<std::string, std::string, std::string>>& v) {
  json a = json::array();
  for (const auto& [x, y, z] : v) a.push_back(json::array({x, y, z}));
  return a;
}

void pairs_from_json(const json& a, std::vector<std::pair<std::string, std::string>>& out) {
  for (const json& e : a) {
    if (!e.is_array() || e.size() != 2) throw IntegrityError("change set: expected [a, b] pair");
    out.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
  }
}

void triples_from_json(const json& a,
                       std::vector<std::tuple<std::string, std::string, std::string>>& out) {
  for (const json& e : a) {
    if (!e.is_array() || e.size() != 3) throw IntegrityError("change set: expected [a, b, c] triple");
    out.emplace_back(e[0].get<std::string>(), e[1].get<std::string>(), e[2].get<std::string>());
  }
}

}  // namespace

std::string changeset_to_json(const ChangeSet& cs) {
  ordered_json j;
  j["add_vertices"] = cs.add_vertices;
  j["remove_vertices"] = cs.remove_vertices;
  j["add_edges"] = pairs_to_json(cs.add_edges);
  j["remove_edges"] = pairs_to_json(cs.remove_edges);
  j["add_vertex_labels"] = pairs_to_json(cs.add_vertex_labels);
  j["remove_vertex_labels"] = pairs_to_json(cs.remove_vertex_labels);
  j["add_edge_labels"] = triples_to_json(cs.add_edge_labels);
  j["remove_edge_labels"] = triples_to_json(cs.remove_edge_labels);
  j["add_vertex_props"] = triples_to_json(cs.add_vertex_props);
  j["remove_vertex_props"] = triples_to_json(cs.remove_vertex_props);
  j["add_vertex_memberships"] = pairs_to_json(cs.add_vertex_memberships);
  j["remove_vertex_memberships"] = pairs_to_json(cs.remove_vertex_memberships);
  j["add_edge_memberships"] = triples_to_json(cs.add_edge_memberships);
  j["remove_edge_memberships"] = triples_to_json(cs.remove_edge_memberships);
  return j.dump(2);
}

ChangeSet changeset_from_json(const std::string& text) {
  json j = parse_json(text, "change set");
  ChangeSet cs;
  for (const json& e : j.value("add_vertices", json::array()))
    cs.add_vertices.push_back(e.get<std::string>());
  for (const json& e : j.value("remove_vertices", json::array()))
    cs.remove_vertices.push_back(e.get<std::string>());
  pairs_from_json(j.value("add_edges", json::array()), cs.add_edges);
  pairs_from_json(j.value("remove_edges", json::array()), cs.remove_edges);
  pairs_from_json(j.value("add_vertex_labels", json::array()), cs.add_vertex_labels);
  pairs_from_json(j.value("remove_vertex_labels", json::array()), cs.remove_vertex_labels);
  triples_from_json(j.value("add_edge_labels", json::array()), cs.add_edge_labels);
  triples_from_json(j.value("remove_edge_labels", json::array()), cs.remove_edge_labels);
  triples_from_json(j.value("add_vertex_props", json::array()), cs.add_vertex_props);
  triples_from_json(j.value("remove_vertex_props", json::array()), cs.remove_vertex_props);
  pairs_from_json(j.value("add_vertex_memberships", json::array()), cs.add_vertex_memberships);
  pairs_from_json(j.value("remove_vertex_memberships", json::array()),
                  cs.remove_vertex_memberships);
  triples_from_json(j.value("add_edge_memberships", json::array()), cs.add_edge_memberships);
  triples_from_json(j.value("remove_edge_memberships", json::array()),
                    cs.remove_edge_memberships);
  return cs;
}

GraphDatabase load_graph_version(const ManifestVersion& v, InternerPtr interner,
                                 const LpgOptions& lpg) {
  check_version_fields(v);
  GraphBuilder b(std::move(interner));
  ParseOptions po;
  po.blank_scope = v.path;
  if (!v.source.empty()) po.default_graph = v.source;
  std::optional<RdfFormat> fmt;
  if (v.format == "ntriples") fmt = RdfFormat::ntriples;
  if (v.format == "nquads") fmt = RdfFormat::nquads;
  parse_rdf_file(v.path, fmt, po,
                 [&](const RdfStatement& st) { fold_statement_into_builder(b, st, lpg); });
  return b.finish();
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

const char* kMetricsHeader =
    "schema_version,dataset,version,model,payload,mode,workers,"
    "num_vertices,num_edges,classes,support_nodes,tree_edges,vertices_per_class,"
    "add_schema,add_instance,mod_schema,mod_instance,unchanged,del_schema,del_instance,"
    "total_changed,store_ops,vertices_seen,vhi_vertices,vhi_bytes,graph_bytes,sg_bytes,"
    "partition_ms,rounds_ms,merge_ms,delete_ms,total_ms";

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string metrics_row_csv(const MetricsRow& r) {
  auto fixed = [](double v, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return std::string(buf);
  };
  const ChangeReport& c = r.report;
  const double total_ms = c.timings.partition_ms + c.timings.rounds_ms + c.timings.merge_ms +
                          c.timings.delete_ms;
  std::string out;
  out += std::to_string(kMetricsSchemaVersion);
  for (const std::string& s : {r.dataset, r.version, r.model, r.payload, r.mode})
    out += "," + csv_quote(s);
  out += "," + std::to_string(r.workers);
  for (uint64_t v : {r.num_vertices, r.num_edges, r.classes, r.support_nodes, r.tree_edges})
    out += "," + std::to_string(v);
  out += "," + fixed(r.vertices_per_class, 6);
  for (uint64_t v : {c.add_schema, c.add_instance, c.mod_schema, c.mod_instance, c.unchanged,
                     c.del_schema, c.del_instance, c.total_changed(), c.store_ops,
                     c.vertices_seen, r.vhi_vertices, r.vhi_bytes, r.graph_bytes, r.sg_bytes})
    out += "," + std::to_string(v);
  for (double v : {c.timings.partition_ms, c.timings.rounds_ms, c.timings.merge_ms,
                   c.timings.delete_ms, total_ms})
    out += "," + fixed(v, 3);
  return out;
}

void append_metrics_csv(const std::string& path, const MetricsRow& row) {
  bool want_header = true;
  {
    std::ifstream probe(path, std::ios::binary);
    if (probe && probe.peek() != std::ifstream::traits_type::eof()) want_header = false;
  }
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IntegrityError("cannot write metrics to '" + path + "'");
  if (want_header) out << kMetricsHeader << "\r\n";
  out << metrics_row_csv(row) << "\r\n";
  if (!out) throw IntegrityError("short write to '" + path + "'");
}

}  // namespace fluidsum
