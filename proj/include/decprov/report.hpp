#pragma once
// Render query results for people and tools: stable JSON for machine
// consumption, DOT for graph rendering, and aligned plain text for
// terminals. Every renderer is a pure function of its input, so output is
// reproducible byte for byte.

#include "decprov/json.hpp"
#include "decprov/model.hpp"
#include "decprov/query.hpp"

#include <string>
#include <vector>

namespace decprov {

// ── JSON ─────────────────────────────────────────────────────────────────

ojson pipeline_to_json(const DecisionPipeline& pipeline);
ojson inventory_to_json(const std::string& subject,
                        const std::vector<InventoryEntry>& entries);
ojson erasure_to_json(const std::string& subject, const ErasureReport& report);
ojson flows_to_json(const std::vector<FlowFinding>& findings);

// ── DOT ──────────────────────────────────────────────────────────────────
// Entities are ellipses, activities boxes, agents houses. Nodes carry
// "id\nkind:node_type" labels; redacted and unresolvable nodes render
// dashed, as do alias links. Edges are labeled with their kind.

std::string pipeline_to_dot(const DecisionPipeline& pipeline);

// ── Plain text ───────────────────────────────────────────────────────────
// One node per line, indented by depth. `color` adds ANSI highlighting.

std::string pipeline_to_text(const DecisionPipeline& pipeline, bool color);
std::string inventory_to_text(const std::string& subject,
                              const std::vector<InventoryEntry>& entries);
std::string erasure_to_text(const std::string& subject, const ErasureReport& report);
std::string flows_to_text(const std::vector<FlowFinding>& findings);

}  // namespace decprov
