#include "fluidsum/engine.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "fluidsum/errors.hpp"
#include "fluidsum/log.hpp"

namespace fluidsum {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Deterministic work split: a symbol lands in the bucket named by its term
// digest, independent of interner state and worker count.
std::vector<std::vector<Symbol>> bucketize(const std::vector<Symbol>& items, const Interner& in,
                                           int partitions) {
  std::vector<std::vector<Symbol>> buckets(static_cast<size_t>(partitions));
  for (Symbol s : items)
    buckets[digest(in.str(s)).lo % static_cast<uint64_t>(partitions)].push_back(s);
  return buckets;
}

// Runs body(0..workers-1) on a fresh thread each; the first exception wins
// and is rethrown after the join so partial phases never escape silently.
void run_workers(int workers, const std::function<void(int)>& body) {
  if (workers <= 1) {
    body(0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  std::mutex mu;
  std::exception_ptr first;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        body(w);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!first) first = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

// Same ordering and dedup rule as the recursive builder applies to its
// in-memory edges; the two routes must serialize identically.
void canonicalize_layout_edges(std::vector<LayoutEdge>& edges) {
  if (edges.size() < 2) return;
  std::vector<std::string> cls(edges.size());
  for (size_t i = 0; i < edges.size(); ++i) cls[i] = edges[i].class_bytes();
  std::vector<size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    int c = cls[a].compare(cls[b]);
    if (c != 0) return c < 0;
    return edges[a].child < edges[b].child;
  });
  std::vector<LayoutEdge> kept;
  kept.reserve(edges.size());
  size_t last = 0;
  for (size_t idx : order) {
    if (!kept.empty() && cls[idx] == cls[last] && edges[idx].child == edges[last].child) continue;
    kept.push_back(edges[idx]);
    last = idx;
  }
  edges = std::move(kept);
}

// Worker-local view of the round output: turns a class digest back into a
// full summary once and reuses it for every vertex filed under that class.
class MaterializeCache {
 public:
  explicit MaterializeCache(const RoundsResult& rr) : rr_(rr) {}

  const VertexSummary& get(Hash128 h) {
    auto it = cache_.find(h);
    if (it != cache_.end()) return it->second;
    VertexSummary vs = materialize_summary(h, [this](Hash128 nh) -> const NodeLayout* {
      auto nit = rr_.nodes.find(nh);
      return nit == rr_.nodes.end() ? nullptr : &nit->second;
    });
    return cache_.emplace(h, std::move(vs)).first->second;
  }

 private:
  const RoundsResult& rr_;
  std::unordered_map<Hash128, VertexSummary> cache_;
};

void merge_counters(ChangeReport& into, const ChangeReport& from) {
  into.add_schema += from.add_schema;
  into.add_instance += from.add_instance;
  into.mod_schema += from.mod_schema;
  into.mod_instance += from.mod_instance;
  into.unchanged += from.unchanged;
  into.del_schema += from.del_schema;
  into.del_instance += from.del_instance;
  into.store_ops += from.store_ops;
}

// Retries fn on link conflicts with a small random delay. Each attempt reads
// the live index state first, so a partially applied previous attempt is
// picked up where it left off rather than replayed.
void with_retries(const RunConfig& cfg, std::mt19937_64& rng, const std::function<void()>& fn) {
  for (int attempt = 0;; ++attempt) {
    try {
      fn();
      return;
    } catch (const ConflictError&) {
      if (attempt >= cfg.max_retries) throw;
      int lo = std::max(0, cfg.retry_delay_min_ms);
      int hi = std::max(lo, cfg.retry_delay_max_ms);
      std::uniform_int_distribution<int> jitter(lo, hi);
      std::this_thread::sleep_for(std::chrono::milliseconds(jitter(rng)));
    }
  }
}

struct WorkerSlot {
  ChangeReport rep;
  // Classes this worker unlinked a vertex from; candidates for the orphan
  // sweep at the phase barrier.
  std::vector<Hash128> unlinked;
};

// Removes every candidate class that ended the phase without members. Runs
// single-threaded between phases, so the removal count (and with it
// store_ops) depends only on the final link state, not on scheduling.
void sweep_orphans(const std::vector<WorkerSlot>& slots, SummaryGraph& sg, VertexHashIndex& index,
                   ChangeReport& report) {
  std::unordered_set<Hash128> cands;
  for (const WorkerSlot& s : slots) cands.insert(s.unlinked.begin(), s.unlinked.end());
  std::vector<Hash128> order(cands.begin(), cands.end());
  std::sort(order.begin(), order.end());
  for (Hash128 h : order) {
    if (index.has_links(h)) continue;
    if (sg.remove_element_if(h, [&] { return !index.has_links(h); })) report.store_ops += 1;
  }
}

// Brings one vertex in line with its freshly computed class. The write order
// matters: contributions are unmerged while the vertex is still linked, and
// links are added before the class payload is merged, so concurrent
// reconciles of other vertices always converge to the same store state.
void reconcile_vertex(const RunConfig& cfg, const CompiledModel& model, const GraphDatabase& g,
                      const RoundsResult& rr, MaterializeCache& cache,
                      const std::unordered_set<Hash128>& known_classes, bool batch,
                      SummaryGraph& sg, VertexHashIndex& index, Symbol v, WorkerSlot& slot) {
  const Hash128 h = rr.roots.at(v);

  if (cfg.paranoid) {
    VertexSummary direct = build_vertex_summary(model, g, v);
    if (direct.hash() != h || direct.canonical_bytes(true) != cache.get(h).canonical_bytes(true))
      throw IntegrityError("round-based and direct summaries disagree for " + g.term(v));
  }

  PayloadElement pe = vertex_payload(cfg.payload, g, v);
  std::optional<VertexLink> old = index.get(v);

  if (!old) {
    index.add_link(v, h, pe);
    bool created = sg.add_element(cache.get(h), pe);
    slot.rep.store_ops += 1;
    bool known = batch ? !created : known_classes.count(h) > 0;
    (known ? slot.rep.add_instance : slot.rep.add_schema) += 1;
    return;
  }

  if (old->link == h) {
    if (old->contribution == pe) {
      slot.rep.unchanged += 1;
      return;
    }
    sg.unmerge_payload(h, old->contribution);
    sg.merge_payload(h, pe);
    index.set_contribution(v, std::move(pe));
    slot.rep.store_ops += 2;
    slot.rep.mod_instance += 1;
    return;
  }

  sg.unmerge_payload(old->link, old->contribution);
  VertexHashIndex::RemoveResult gone = index.remove_link(v);
  slot.rep.store_ops += 1;
  slot.unlinked.push_back(gone.link);
  index.add_link(v, h, pe);
  sg.add_element(cache.get(h), pe);
  slot.rep.store_ops += 1;
  slot.rep.mod_schema += 1;
}

ChangeReport run_impl(const RunConfig& cfg, const GraphDatabase& snapshot, SummaryGraph& sg,
                      VertexHashIndex& index, const std::vector<Symbol>* dirty) {
  const int workers = std::max(1, cfg.workers);
  const int partitions = cfg.partitions > 0 ? cfg.partitions : 4 * workers;
  const bool batch = cfg.mode == RunMode::batch;

  const GraphDatabase* g = &snapshot;
  GraphDatabase merged;
  if (!cfg.model.instance_merge.empty()) {
    merged = instance_merge(snapshot, cfg.model.instance_merge);
    g = &merged;
  }

  if (batch) {
    if (!sg.empty() || !index.empty())
      throw IntegrityError("batch summarization needs an empty store and index");
  } else if (cfg.validate_inputs) {
    index.validate();
    std::unordered_set<Hash128> links;
    for (Symbol v : index.all_vertices()) links.insert(index.get(v)->link);
    for (Hash128 h : links)
      if (!sg.contains(h))
        throw IntegrityError("index references class " + h.hex() + " missing from the store");
  }

  CompiledModel model(cfg.model, *g->interner());
  const Interner& in = model.interner();

  ChangeReport report;
  report.num_vertices = g->num_vertices();
  report.num_edges = g->num_edges();

  auto t0 = Clock::now();
  std::vector<Symbol> targets = dirty ? *dirty : g->vertices();
  std::vector<std::vector<Symbol>> buckets = bucketize(targets, in, partitions);
  report.timings.partition_ms = ms_since(t0);

  t0 = Clock::now();
  RoundsResult rr = message_rounds(model, *g, targets, workers, partitions);
  report.timings.rounds_ms = ms_since(t0);

  // The add split is decided against this pre-run snapshot, so it cannot
  // depend on which worker files a brand-new class first.
  std::unordered_set<Hash128> known_classes;
  if (!batch)
    for (Hash128 h : sg.element_hashes()) known_classes.insert(h);

  t0 = Clock::now();
  std::vector<WorkerSlot> slots(static_cast<size_t>(workers));
  run_workers(workers, [&](int w) {
    WorkerSlot& slot = slots[static_cast<size_t>(w)];
    MaterializeCache cache(rr);
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL + static_cast<uint64_t>(w));
    for (size_t b = static_cast<size_t>(w); b < buckets.size(); b += static_cast<size_t>(workers))
      for (Symbol v : buckets[b])
        with_retries(cfg, rng, [&] {
          reconcile_vertex(cfg, model, *g, rr, cache, known_classes, batch, sg, index, v, slot);
        });
  });
  for (const WorkerSlot& s : slots) merge_counters(report, s.rep);
  sweep_orphans(slots, sg, index, report);
  report.timings.merge_ms = ms_since(t0);

  t0 = Clock::now();
  std::vector<Symbol> doomed;
  if (!batch) {
    for (Symbol v : index.all_vertices())
      if (!g->has_vertex(v)) doomed.push_back(v);
    std::vector<std::vector<Symbol>> dbuckets = bucketize(doomed, in, partitions);
    std::vector<WorkerSlot> dslots(static_cast<size_t>(workers));
    run_workers(workers, [&](int w) {
      WorkerSlot& slot = dslots[static_cast<size_t>(w)];
      std::mt19937_64 rng(0xc2b2ae3d27d4eb4fULL + static_cast<uint64_t>(w));
      for (size_t b = static_cast<size_t>(w); b < dbuckets.size();
           b += static_cast<size_t>(workers))
        for (Symbol v : dbuckets[b])
          with_retries(cfg, rng, [&] {
            VertexLink old = *index.get(v);
            sg.unmerge_payload(old.link, old.contribution);
            VertexHashIndex::RemoveResult gone = index.remove_link(v);
            slot.rep.store_ops += 1;
            slot.unlinked.push_back(gone.link);
            // No links are added in this phase, so the last vertex out of a
            // class observes the orphan state exactly once.
            (gone.orphaned ? slot.rep.del_schema : slot.rep.del_instance) += 1;
          });
    });
    for (const WorkerSlot& s : dslots) merge_counters(report, s.rep);
    sweep_orphans(dslots, sg, index, report);
  }
  report.timings.delete_ms = ms_since(t0);

  report.vertices_seen = targets.size() + doomed.size();
  LOG_INFO("run done: %llu changed, %llu unchanged, %llu store ops",
           (unsigned long long)report.total_changed(), (unsigned long long)report.unchanged,
           (unsigned long long)report.store_ops);
  return report;
}

}  // namespace

std::string ChangeReport::to_json() const {
  nlohmann::ordered_json j;
  j["add_schema"] = add_schema;
  j["add_instance"] = add_instance;
  j["mod_schema"] = mod_schema;
  j["mod_instance"] = mod_instance;
  j["unchanged"] = unchanged;
  j["del_schema"] = del_schema;
  j["del_instance"] = del_instance;
  j["total_changed"] = total_changed();
  j["store_ops"] = store_ops;
  j["vertices_seen"] = vertices_seen;
  j["num_vertices"] = num_vertices;
  j["num_edges"] = num_edges;
  j["timings_ms"] = nlohmann::ordered_json{{"partition", timings.partition_ms},
                                           {"rounds", timings.rounds_ms},
                                           {"merge", timings.merge_ms},
                                           {"delete", timings.delete_ms}};
  return j.dump(2);
}

ChangeReport summarize(const RunConfig& cfg, const GraphDatabase& g, SummaryGraph& sg,
                       VertexHashIndex& index) {
  return run_impl(cfg, g, sg, index, nullptr);
}

ChangeReport summarize_update(const RunConfig& cfg, const GraphDatabase& before,
                              const GraphDatabase& after, const ChangeSet& changes,
                              SummaryGraph& sg, VertexHashIndex& index) {
  if (cfg.mode != RunMode::incremental)
    throw IntegrityError("change-driven updates run in incremental mode only");
  if (before.interner() != after.interner())
    throw IntegrityError("graph versions must share one interner");
  // Merging remaps vertex identities, so a change list over the unmerged
  // terms cannot be translated into a safe dirty set; reconcile everything.
  if (!cfg.model.instance_merge.empty()) return run_impl(cfg, after, sg, index, nullptr);

  CompiledModel m(cfg.model, *after.interner());
  std::vector<Symbol> dirty;
  for (Symbol s : affected_vertices(m, before, after, changes))
    if (after.has_vertex(s)) dirty.push_back(s);
  return run_impl(cfg, after, sg, index, &dirty);
}

std::vector<Symbol> affected_vertices(const CompiledModel& m, const GraphDatabase& before,
                                      const GraphDatabase& after, const ChangeSet& changes) {
  const Interner& in = m.interner();
  std::unordered_set<Symbol> affected;
  auto seed = [&](const std::string& t) {
    if (std::optional<Symbol> s = in.find(t)) affected.insert(*s);
  };
  for (const auto& t : changes.add_vertices) seed(t);
  for (const auto& t : changes.remove_vertices) seed(t);
  for (const auto& [s, d] : changes.add_edges) seed(s), seed(d);
  for (const auto& [s, d] : changes.remove_edges) seed(s), seed(d);
  for (const auto& [t, l] : changes.add_vertex_labels) seed(t), seed(l);
  for (const auto& [t, l] : changes.remove_vertex_labels) seed(t), seed(l);
  for (const auto& [s, d, l] : changes.add_edge_labels) seed(s), seed(d), seed(l);
  for (const auto& [s, d, l] : changes.remove_edge_labels) seed(s), seed(d), seed(l);
  for (const auto& [t, k, val] : changes.add_vertex_props) seed(t);
  for (const auto& [t, k, val] : changes.remove_vertex_props) seed(t);
  for (const auto& [gr, t] : changes.add_vertex_memberships) seed(t);
  for (const auto& [gr, t] : changes.remove_vertex_memberships) seed(t);
  for (const auto& [gr, s, d] : changes.add_edge_memberships) seed(s), seed(d);
  for (const auto& [gr, s, d] : changes.remove_edge_memberships) seed(s), seed(d);

  // Removing a vertex silently takes its incident edges and label rows with
  // it; there are no explicit rows for those, so the surviving endpoints and
  // the labels whose extent shrank are seeded from the old snapshot here.
  for (const auto& t : changes.remove_vertices) {
    std::optional<Symbol> s = in.find(t);
    if (!s || !before.has_vertex(*s)) continue;
    for (Symbol u : before.in_neighbors(*s)) affected.insert(u);
    for (Symbol u : before.out_neighbors(*s)) affected.insert(u);
    for (Symbol u : before.labels(*s)) affected.insert(u);
  }

  // Level-by-level reverse expansion: anything that can reach a touched
  // symbol within the model's chaining depth may summarize differently.
  // Virtual type instances make label symbols reachable, hence the extent
  // and label hops next to the plain adjacency ones.
  std::unordered_set<Symbol> frontier = affected;
  for (int r = 0; r < m.rounds() && !frontier.empty(); ++r) {
    std::unordered_set<Symbol> next;
    auto pull = [&](const GraphDatabase& g, Symbol t) {
      auto take = [&](Symbol u) {
        if (affected.insert(u).second) next.insert(u);
      };
      for (Symbol u : g.in_neighbors(t)) take(u);
      for (Symbol u : g.out_neighbors(t)) take(u);
      for (Symbol u : g.label_extent(t)) take(u);
      for (Symbol u : g.labels(t)) take(u);
    };
    for (Symbol t : frontier) {
      pull(before, t);
      pull(after, t);
    }
    frontier = std::move(next);
  }

  std::vector<Symbol> out(affected.begin(), affected.end());
  std::sort(out.begin(), out.end());
  return out;
}

RoundsResult message_rounds(const CompiledModel& m, const GraphDatabase& g,
                            const std::vector<Symbol>& targets, int workers, int partitions) {
  if (workers < 1) workers = 1;
  if (partitions < 1) partitions = 4 * workers;
  const Interner& in = m.interner();
  const int k = m.rounds();

  // Pull-based need sets: round r-1 must cover every instance target of a
  // symbol evaluated in round r, so each round only reads hashes the
  // previous barrier already settled.
  std::vector<std::vector<Symbol>> need(static_cast<size_t>(k) + 1);
  need[static_cast<size_t>(k)] = targets;
  std::sort(need[static_cast<size_t>(k)].begin(), need[static_cast<size_t>(k)].end());
  need[static_cast<size_t>(k)].erase(
      std::unique(need[static_cast<size_t>(k)].begin(), need[static_cast<size_t>(k)].end()),
      need[static_cast<size_t>(k)].end());
  for (int r = k; r >= 1; --r) {
    std::unordered_set<Symbol> pulled(need[static_cast<size_t>(r)].begin(),
                                      need[static_cast<size_t>(r)].end());
    for (Symbol u : need[static_cast<size_t>(r)])
      for (const PredicateInstance& inst : collect_predicate_instances(m, g, u))
        pulled.insert(inst.target);
    auto& prev = need[static_cast<size_t>(r) - 1];
    prev.assign(pulled.begin(), pulled.end());
    std::sort(prev.begin(), prev.end());
  }

  const bool universal = k > 0 && m.root().predicate->kind == ElemKind::top;

  RoundsResult result;
  std::unordered_map<Symbol, Hash128> prev_round;
  for (int r = 0; r <= k; ++r) {
    std::vector<std::vector<Symbol>> buckets =
        bucketize(need[static_cast<size_t>(r)], in, partitions);
    struct Local {
      std::vector<std::pair<Symbol, Hash128>> roots;
      std::vector<std::pair<Hash128, NodeLayout>> nodes;
    };
    std::vector<Local> locals(static_cast<size_t>(workers));
    run_workers(workers, [&](int w) {
      Local& loc = locals[static_cast<size_t>(w)];
      for (size_t b = static_cast<size_t>(w); b < buckets.size();
           b += static_cast<size_t>(workers)) {
        for (Symbol u : buckets[b]) {
          NodeLayout layout;
          if (r == 0) {
            const CompiledElement& el = k == 0 ? m.root() : *m.root().object;
            layout.elem_id = el.elem_id;
            layout.sections = extract_position_sections(el, g, u, m.rdf_type());
          } else {
            layout.elem_id = m.depth_elem_id(r);
            layout.sections =
                extract_position_sections(*m.root().subject, g, u, m.rdf_type());
            for (const PredicateInstance& inst : collect_predicate_instances(m, g, u)) {
              LayoutEdge e;
              e.dir = inst.dir;
              e.universal = universal;
              if (!universal) e.label = in.str(inst.label);
              e.child = prev_round.at(inst.target);
              layout.edges.push_back(std::move(e));
            }
            canonicalize_layout_edges(layout.edges);
          }
          Hash128 h = digest(layout.encode());
          loc.roots.emplace_back(u, h);
          loc.nodes.emplace_back(h, std::move(layout));
        }
      }
    });
    std::unordered_map<Symbol, Hash128> cur;
    for (Local& loc : locals) {
      for (const auto& [sym, h] : loc.roots) cur.emplace(sym, h);
      for (auto& [h, layout] : loc.nodes) result.nodes.try_emplace(h, std::move(layout));
    }
    prev_round = std::move(cur);
  }

  for (Symbol v : need[static_cast<size_t>(k)]) result.roots.emplace(v, prev_round.at(v));
  return result;
}

}  // namespace fluidsum
