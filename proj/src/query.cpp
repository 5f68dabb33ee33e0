#include "decprov/query.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

namespace decprov {

namespace {

enum class Direction { backward, forward };

struct Hop {
  QualifiedId to;
  const ProvEdge* edge = nullptr;  // null for alias hops
  std::optional<AliasLink> alias;
};

struct WalkContext {
  const Federation& fed;
  std::vector<std::string> domains;  // cached, ascending
  const SnapshotBounds* bounds;

  WalkContext(const Federation& f, const SnapshotBounds* b)
      : fed(f), domains(f.domains()), bounds(b) {}

  std::size_t bound(const std::string& domain) const {
    return Federation::bound_for(bounds, domain);
  }

  const ProvNode* raw_node(const QualifiedId& id) const {
    const ProvStore* store = fed.store(id.domain);
    return store ? store->find_node(id.text(), bound(id.domain)) : nullptr;
  }
};

// One-step continuations from `id`, reading raw store structure (visibility
// redacts payloads, never traversal). Backward follows the node's out-edges
// and its alias_of link; forward follows in-edges and alias copies, which
// can live in any store.
std::vector<Hop> expand(const WalkContext& ctx, const QualifiedId& id,
                        Direction dir, bool& unresolvable) {
  std::vector<Hop> hops;
  const std::string text = id.text();
  const ProvNode* node = ctx.raw_node(id);
  if (!node) unresolvable = true;

  if (dir == Direction::backward) {
    if (!node) return hops;
    const ProvStore* store = ctx.fed.store(id.domain);
    for (const ProvEdge* e : store->out_edges(text, ctx.bound(id.domain)))
      hops.push_back(Hop{e->target, e, std::nullopt});
    if (auto original = node->alias_of())
      hops.push_back(Hop{*original, nullptr, AliasLink{id, *original}});
    return hops;
  }

  for (const std::string& domain : ctx.domains) {
    const ProvStore* store = ctx.fed.store(domain);
    const std::size_t bound = ctx.bound(domain);
    for (const ProvEdge* e : store->in_edges(text, bound))
      hops.push_back(Hop{e->source, e, std::nullopt});
    for (const ProvNode* alias : store->aliases_of(text, bound))
      hops.push_back(Hop{alias->id, nullptr, AliasLink{alias->id, id}});
  }
  return hops;
}

Result<DecisionPipeline> traverse(const Federation& fed, const QualifiedId& root,
                                  std::size_t max_depth,
                                  std::string_view requesting_domain,
                                  Direction dir, const SnapshotBounds* bounds) {
  WalkContext ctx(fed, bounds);
  if (!ctx.raw_node(root))
    return make_error(Errc::unknown_root, "root " + root.text() + " is not resolvable");

  DecisionPipeline out;
  out.root = root;

  std::unordered_map<std::string, std::size_t> depth_of;
  std::vector<std::pair<QualifiedId, std::size_t>> discovered;
  std::deque<std::pair<QualifiedId, std::size_t>> queue;

  depth_of.emplace(root.text(), 0);
  discovered.emplace_back(root, 0);
  queue.emplace_back(root, 0);

  std::vector<ProvEdge> edges;
  std::vector<AliasLink> aliases;

  while (!queue.empty()) {
    auto [u, d] = queue.front();
    queue.pop_front();

    bool unresolved_here = false;
    std::vector<Hop> hops = expand(ctx, u, dir, unresolved_here);
    if (unresolved_here) out.truncated = true;

    if (d == max_depth) {
      // Frontier: anything leading outside the included set means a deeper
      // query would see more.
      for (const Hop& hop : hops)
        if (!depth_of.count(hop.to.text())) {
          out.truncated = true;
          break;
        }
      continue;
    }
    for (const Hop& hop : hops) {
      if (hop.edge) edges.push_back(*hop.edge);
      if (hop.alias) aliases.push_back(*hop.alias);
      auto [it, inserted] = depth_of.emplace(hop.to.text(), d + 1);
      if (inserted) {
        discovered.emplace_back(hop.to, d + 1);
        queue.emplace_back(hop.to, d + 1);
      }
    }
  }

  for (const auto& [id, depth] : discovered) {
    PipelineNode entry;
    entry.id = id;
    entry.depth = depth;
    Resolution res = fed.resolve(id, requesting_domain, bounds);
    if (const ProvNode* const* full = std::get_if<const ProvNode*>(&res)) {
      entry.access = NodeAccess::full;
      entry.node = *full;
      entry.kind = (*full)->kind;
    } else if (const Redacted* stub = std::get_if<Redacted>(&res)) {
      entry.access = NodeAccess::redacted;
      entry.kind = stub->kind;
    } else {
      entry.access = NodeAccess::unresolvable;
    }
    out.nodes.push_back(entry);

    if (entry.kind == NodeKind::Agent) {
      // Agent payloads are never redacted, so the raw node is fair game.
      AgentEntry agent;
      agent.id = id;
      agent.domain = id.domain;
      agent.min_depth = depth;
      agent.node = entry.node ? entry.node : ctx.raw_node(id);
      out.agents.push_back(agent);
    }
  }

  std::sort(out.nodes.begin(), out.nodes.end(),
            [](const PipelineNode& a, const PipelineNode& b) {
              return std::tie(a.depth, a.id.domain, a.id.local) <
                     std::tie(b.depth, b.id.domain, b.id.local);
            });
  std::sort(out.agents.begin(), out.agents.end(),
            [](const AgentEntry& a, const AgentEntry& b) {
              return a.min_depth != b.min_depth ? a.min_depth < b.min_depth
                                                : a.id.text() < b.id.text();
            });

  auto edge_key = [](const ProvEdge& e) {
    std::string key = e.source.text();
    key += '\x1f';
    key += e.target.text();
    key += '\x1f';
    key += to_string(e.kind);
    key += '\x1f';
    key += canonical_serialize(e);  // separates attribute-differing duplicates
    return key;
  };
  std::vector<std::pair<std::string, ProvEdge>> keyed;
  keyed.reserve(edges.size());
  for (ProvEdge& e : edges) keyed.emplace_back(edge_key(e), std::move(e));
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  keyed.erase(std::unique(keyed.begin(), keyed.end(),
                          [](const auto& a, const auto& b) { return a.first == b.first; }),
              keyed.end());
  out.edges.reserve(keyed.size());
  for (auto& [_, e] : keyed) out.edges.push_back(std::move(e));

  std::sort(aliases.begin(), aliases.end(), [](const AliasLink& a, const AliasLink& b) {
    return std::tie(a.alias.domain, a.alias.local, a.original.domain, a.original.local) <
           std::tie(b.alias.domain, b.alias.local, b.original.domain, b.original.local);
  });
  aliases.erase(std::unique(aliases.begin(), aliases.end(),
                            [](const AliasLink& a, const AliasLink& b) {
                              return a.alias == b.alias && a.original == b.original;
                            }),
                aliases.end());
  out.alias_links = std::move(aliases);

  return out;
}

}  // namespace

const PipelineNode* DecisionPipeline::find(const std::string& id_text) const {
  for (const PipelineNode& n : nodes)
    if (n.id.text() == id_text) return &n;
  return nullptr;
}

Result<DecisionPipeline> lineage(const Federation& fed, const QualifiedId& root,
                                 std::size_t max_depth,
                                 std::string_view requesting_domain,
                                 const SnapshotBounds* bounds) {
  return traverse(fed, root, max_depth, requesting_domain, Direction::backward, bounds);
}

Result<DecisionPipeline> impact(const Federation& fed, const QualifiedId& source,
                                std::size_t max_depth,
                                std::string_view requesting_domain,
                                const SnapshotBounds* bounds) {
  return traverse(fed, source, max_depth, requesting_domain, Direction::forward, bounds);
}

std::vector<AgentEntry> involved_agents(const DecisionPipeline& pipeline) {
  return pipeline.agents;
}

Closure reach_backward(const Federation& fed, const QualifiedId& start,
                       const SnapshotBounds* bounds) {
  WalkContext ctx(fed, bounds);
  Closure out;
  std::unordered_set<std::string> visited;
  std::deque<QualifiedId> queue;
  visited.insert(start.text());
  queue.push_back(start);

  while (!queue.empty()) {
    QualifiedId u = queue.front();
    queue.pop_front();
    const ProvNode* node = ctx.raw_node(u);
    if (!node) {
      out.unresolved.push_back(u);
      continue;
    }
    out.nodes.push_back(node);
    bool ignored = false;
    for (const Hop& hop : expand(ctx, u, Direction::backward, ignored))
      if (visited.insert(hop.to.text()).second) queue.push_back(hop.to);
  }
  return out;
}

std::vector<const ProvNode*> lineage_roots(const Federation& fed,
                                           const Closure& closure,
                                           const SnapshotBounds* bounds) {
  WalkContext ctx(fed, bounds);
  std::vector<const ProvNode*> roots;
  for (const ProvNode* node : closure.nodes) {
    if (node->kind != NodeKind::Entity) continue;
    if (node->alias_of()) continue;

    bool upstream = false;
    const ProvStore* store = ctx.fed.store(node->id.domain);
    for (const ProvEdge* e :
         store->out_edges(node->id.text(), ctx.bound(node->id.domain))) {
      if (e->kind == EdgeKind::WasDerivedFrom) {
        upstream = true;
        break;
      }
      if (e->kind != EdgeKind::WasGeneratedBy) continue;
      // The generating activity counts as upstream only if it consumed
      // inputs; a pure emission leaves this entity an origin.
      const ProvStore* act_store = ctx.fed.store(e->target.domain);
      if (!act_store) continue;  // unresolvable generator: callers gate on complete()
      for (const ProvEdge* used :
           act_store->out_edges(e->target.text(), ctx.bound(e->target.domain)))
        if (used->kind == EdgeKind::Used) {
          upstream = true;
          break;
        }
      if (upstream) break;
    }
    if (!upstream) roots.push_back(node);
  }
  return roots;
}

// ── Data-subject reports ─────────────────────────────────────────────────

namespace {

// Connected alias component of `start` (both directions), id-text ascending.
std::vector<QualifiedId> alias_component(const WalkContext& ctx,
                                         const QualifiedId& start) {
  std::unordered_set<std::string> visited{start.text()};
  std::deque<QualifiedId> queue{start};
  std::vector<QualifiedId> members;

  while (!queue.empty()) {
    QualifiedId u = queue.front();
    queue.pop_front();
    members.push_back(u);
    if (const ProvNode* node = ctx.raw_node(u))
      if (auto original = node->alias_of())
        if (visited.insert(original->text()).second) queue.push_back(*original);
    for (const std::string& domain : ctx.domains) {
      const ProvStore* store = ctx.fed.store(domain);
      for (const ProvNode* alias : store->aliases_of(u.text(), ctx.bound(domain)))
        if (visited.insert(alias->id.text()).second) queue.push_back(alias->id);
    }
  }
  std::sort(members.begin(), members.end(), id_text_less);
  return members;
}

}  // namespace

std::vector<InventoryEntry> data_inventory(const Federation& fed,
                                           const std::string& data_subject,
                                           std::string_view requesting_domain,
                                           const SnapshotBounds* bounds) {
  WalkContext ctx(fed, bounds);
  std::vector<InventoryEntry> out;
  for (const std::string& domain : ctx.domains) {
    const bool visible = requesting_domain == domain ||
                         requesting_domain == kRegulatorDomain ||
                         fed.visibility(domain) == Visibility::full;
    if (!visible) continue;
    const ProvStore* store = fed.store(domain);
    for (const ProvNode* entity :
         store->entities_of_subject(data_subject, ctx.bound(domain))) {
      InventoryEntry entry;
      entry.id = entity->id;
      entry.domain = domain;
      if (const StringSet* purposes = entity->attr_set(attr::kPurpose))
        entry.purposes = *purposes;
      auto component = alias_component(ctx, entity->id);
      if (component.size() > 1) entry.alias_chain = std::move(component);
      out.push_back(std::move(entry));
    }
  }
  std::sort(out.begin(), out.end(), [](const InventoryEntry& a, const InventoryEntry& b) {
    return std::tie(a.domain, a.id.local) < std::tie(b.domain, b.id.local);
  });
  return out;
}

ErasureReport erasure_set(const Federation& fed, const std::string& data_subject,
                          const SnapshotBounds* bounds) {
  WalkContext ctx(fed, bounds);
  std::unordered_set<std::string> visited;
  std::deque<QualifiedId> queue;
  std::vector<QualifiedId> members;

  for (const std::string& domain : ctx.domains) {
    const ProvStore* store = fed.store(domain);
    for (const ProvNode* entity :
         store->entities_of_subject(data_subject, ctx.bound(domain)))
      if (visited.insert(entity->id.text()).second) queue.push_back(entity->id);
  }

  while (!queue.empty()) {
    QualifiedId u = queue.front();
    queue.pop_front();
    members.push_back(u);
    for (const std::string& domain : ctx.domains) {
      const ProvStore* store = fed.store(domain);
      const std::size_t bound = ctx.bound(domain);
      for (const ProvEdge* e : store->in_edges(u.text(), bound))
        if (e->kind == EdgeKind::WasDerivedFrom &&
            visited.insert(e->source.text()).second)
          queue.push_back(e->source);
      for (const ProvNode* alias : store->aliases_of(u.text(), bound))
        if (visited.insert(alias->id.text()).second) queue.push_back(alias->id);
    }
  }

  ErasureReport report;
  std::unordered_set<std::string> frontier_seen;
  std::vector<QualifiedId> frontier;
  for (const QualifiedId& id : members) {
    report.entities.emplace_back(id, id.domain);
    for (const std::string& domain : ctx.domains) {
      const ProvStore* store = fed.store(domain);
      for (const ProvEdge* e : store->in_edges(id.text(), ctx.bound(domain)))
        if (e->kind == EdgeKind::Used && frontier_seen.insert(e->source.text()).second)
          frontier.push_back(e->source);
    }
  }

  auto by_domain_then_id = [](const QualifiedId& a, const QualifiedId& b) {
    return std::tie(a.domain, a.local) < std::tie(b.domain, b.local);
  };
  std::sort(report.entities.begin(), report.entities.end(),
            [&](const auto& a, const auto& b) { return by_domain_then_id(a.first, b.first); });
  std::sort(frontier.begin(), frontier.end(), by_domain_then_id);
  report.frontier_activities = std::move(frontier);
  return report;
}

// ── Unexpected flows ─────────────────────────────────────────────────────

Result<FlowDeclaration> load_flow_declaration(const nlohmann::json& doc) {
  const nlohmann::json* flows = nullptr;
  if (doc.is_array()) {
    flows = &doc;
  } else if (doc.is_object() && doc.contains("flows") && doc["flows"].is_array()) {
    flows = &doc["flows"];
  } else {
    return make_error(Errc::parse_error,
                      "flow declaration must be an array or an object with a "
                      "'flows' array");
  }

  FlowDeclaration decl;
  for (const auto& item : *flows) {
    if (!item.is_object() || !item.contains("from") || !item["from"].is_string() ||
        !item.contains("to") || !item["to"].is_string() ||
        !item.contains("node_type") || !item["node_type"].is_string())
      return make_error(Errc::parse_error,
                        "each flow needs string fields from, to, node_type");
    decl.allowed.insert(FlowTriple{item["from"].get<std::string>(),
                                   item["to"].get<std::string>(),
                                   item["node_type"].get<std::string>()});
  }
  return decl;
}

Result<FlowDeclaration> load_flow_declaration(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    return make_error(Errc::io_error, "cannot open " + path.string() + " for reading");
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded())
    return make_error(Errc::parse_error, path.string() + ": not valid JSON");
  return load_flow_declaration(doc);
}

std::vector<FlowFinding> unexpected_flows(const Federation& fed,
                                          const FlowDeclaration& decl,
                                          const SnapshotBounds* bounds) {
  WalkContext ctx(fed, bounds);
  std::vector<FlowFinding> findings;
  for (const std::string& domain : ctx.domains) {
    const ProvStore* store = fed.store(domain);
    store->for_each_record(
        [&](std::size_t, const LogRecord& entry) {
          const ProvNode* node = entry.node();
          if (!node) return;
          auto original = node->alias_of();
          if (!original) return;
          FlowFinding finding;
          finding.flow = FlowTriple{original->domain, domain, node->node_type};
          finding.original = *original;
          finding.alias = node->id;
          finding.at = node->created_at;
          if (!decl.allowed.count(finding.flow)) findings.push_back(std::move(finding));
        },
        ctx.bound(domain));
  }
  std::sort(findings.begin(), findings.end(),
            [](const FlowFinding& a, const FlowFinding& b) {
              return std::tie(a.at, a.original.domain, a.original.local, a.alias.domain,
                              a.alias.local) <
                     std::tie(b.at, b.original.domain, b.original.local, b.alias.domain,
                              b.alias.local);
            });
  return findings;
}

}  // namespace decprov
