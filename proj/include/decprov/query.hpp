#pragma once
// Accountability queries over the federation: backward decision-pipeline
// lineage, forward impact closure, agent reports, data-subject inventories,
// erasure sets, and unexpected-flow detection.
//
// Traversals are exact duals: lineage follows every out-edge of a node plus
// its alias_of link; impact follows every in-edge plus reverse alias links.
// The endpoint-kind constraint table makes those exactly the relation the
// record kinds admit (entities hop to generators, derivation sources, and
// attributed agents; activities to used inputs, associated agents, and
// informing activities; agents to their principals).
//
// Visibility redacts node payloads in results but never changes which node
// ids a traversal reaches; structure is read from the raw stores.

#include "decprov/model.hpp"
#include "decprov/result.hpp"
#include "decprov/store.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace decprov {

inline constexpr std::size_t kUnlimitedDepth = static_cast<std::size_t>(-1);

enum class NodeAccess { full, redacted, unresolvable };

struct PipelineNode {
  QualifiedId id;
  std::optional<NodeKind> kind;  // unknown when unresolvable
  NodeAccess access = NodeAccess::full;
  const ProvNode* node = nullptr;  // payload; null unless access == full
  std::size_t depth = 0;           // shortest qualifying path from the root
};

// Alias hop made explicit so renderers can draw the domain crossing.
struct AliasLink {
  QualifiedId alias;     // the materialized copy
  QualifiedId original;  // what alias_of names
};

struct AgentEntry {
  QualifiedId id;
  std::string domain;
  std::size_t min_depth = 0;
  const ProvNode* node = nullptr;
};

struct DecisionPipeline {
  QualifiedId root;
  std::vector<PipelineNode> nodes;   // (depth, id text) ascending
  std::vector<ProvEdge> edges;       // deduplicated, source/target/kind ascending
  std::vector<AliasLink> alias_links;
  std::vector<AgentEntry> agents;    // (min depth, id text) ascending
  bool truncated = false;

  const PipelineNode* find(const std::string& id_text) const;
};

Result<DecisionPipeline> lineage(const Federation& fed, const QualifiedId& root,
                                 std::size_t max_depth,
                                 std::string_view requesting_domain,
                                 const SnapshotBounds* bounds = nullptr);

Result<DecisionPipeline> impact(const Federation& fed, const QualifiedId& source,
                                std::size_t max_depth,
                                std::string_view requesting_domain,
                                const SnapshotBounds* bounds = nullptr);

// Projection of the pipeline's agents (already depth/id ordered).
std::vector<AgentEntry> involved_agents(const DecisionPipeline& pipeline);

// ── Full-access walkers (policy evaluation, compliance reports) ─────────

struct Closure {
  std::vector<const ProvNode*> nodes;   // every resolvable node reached
  std::vector<QualifiedId> unresolved;  // references that had no home
  bool complete() const { return unresolved.empty(); }
};

Closure reach_backward(const Federation& fed, const QualifiedId& start,
                       const SnapshotBounds* bounds = nullptr);

// Entities in a backward closure with nothing further upstream: no
// derivation source, no alias original, and no generating activity that
// consumed inputs. These are the origins of the data. Unresolvable
// references are skipped; check closure.complete() first when that matters.
std::vector<const ProvNode*> lineage_roots(const Federation& fed,
                                           const Closure& closure,
                                           const SnapshotBounds* bounds = nullptr);

// ── Data-subject reports ─────────────────────────────────────────────────

struct InventoryEntry {
  QualifiedId id;
  std::string domain;
  StringSet purposes;  // empty when the entity declares none
  // Every id connected to this entity through alias copies (itself
  // included); empty when the entity has no alias links.
  std::vector<QualifiedId> alias_chain;
};

std::vector<InventoryEntry> data_inventory(const Federation& fed,
                                           const std::string& data_subject,
                                           std::string_view requesting_domain,
                                           const SnapshotBounds* bounds = nullptr);

struct ErasureReport {
  // (entity id, domain), ascending by (domain, id text).
  std::vector<std::pair<QualifiedId, std::string>> entities;
  // Activities that used any of the entities above: investigation leads,
  // not erasure targets. Ascending by (domain, id text).
  std::vector<QualifiedId> frontier_activities;
};

ErasureReport erasure_set(const Federation& fed, const std::string& data_subject,
                          const SnapshotBounds* bounds = nullptr);

// ── Unexpected flows ─────────────────────────────────────────────────────

struct FlowTriple {
  std::string from_domain;
  std::string to_domain;
  std::string node_type;

  friend auto operator<=>(const FlowTriple&, const FlowTriple&) = default;
};

struct FlowDeclaration {
  std::set<FlowTriple> allowed;
};

// Accepts either a bare array of {from,to,node_type} objects or an object
// with a "flows" key holding one (scenario files qualify).
Result<FlowDeclaration> load_flow_declaration(const nlohmann::json& doc);
Result<FlowDeclaration> load_flow_declaration(const std::filesystem::path& path);

struct FlowFinding {
  FlowTriple flow;
  QualifiedId original;  // the transferred entity
  QualifiedId alias;     // its materialized copy in the receiving domain
  Tick at = 0;           // alias creation tick
};

// Every observed transfer absent from the declaration, ordered by
// (timestamp, original id, alias id).
std::vector<FlowFinding> unexpected_flows(const Federation& fed,
                                          const FlowDeclaration& decl,
                                          const SnapshotBounds* bounds = nullptr);

}  // namespace decprov
