#include "decprov/report.hpp"

#include <sstream>

namespace decprov {

namespace {

const char* access_name(NodeAccess access) {
  switch (access) {
    case NodeAccess::full: return "full";
    case NodeAccess::redacted: return "redacted";
    case NodeAccess::unresolvable: return "unresolvable";
  }
  return "?";
}

std::string dot_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string dot_quote(const std::string& text) {
  return "\"" + dot_escape(text) + "\"";
}

// Two-line label; the \n stays a DOT escape, not literal text.
std::string dot_label(const std::string& first, const std::string& second) {
  return "\"" + dot_escape(first) + "\\n" + dot_escape(second) + "\"";
}

const char* dot_shape(NodeKind kind) {
  switch (kind) {
    case NodeKind::Entity: return "ellipse";
    case NodeKind::Activity: return "box";
    case NodeKind::Agent: return "house";
  }
  return "ellipse";
}

std::string node_detail(const PipelineNode& node) {
  if (!node.kind) return "?";
  return std::string(to_string(*node.kind)) + ":" +
         (node.node ? node.node->node_type : "?");
}

std::string join_set(const StringSet& values) {
  std::string out;
  for (const std::string& value : values) {
    if (!out.empty()) out += ", ";
    out += value;
  }
  return out;
}

}  // namespace

// ── JSON ─────────────────────────────────────────────────────────────────

ojson pipeline_to_json(const DecisionPipeline& pipeline) {
  ojson doc;
  doc["root"] = pipeline.root.text();
  doc["truncated"] = pipeline.truncated;
  ojson nodes = ojson::array();
  for (const PipelineNode& node : pipeline.nodes) {
    ojson entry;
    entry["id"] = node.id.text();
    entry["depth"] = node.depth;
    entry["access"] = access_name(node.access);
    if (node.kind) entry["kind"] = std::string(to_string(*node.kind));
    if (node.node) {
      entry["node_type"] = node.node->node_type;
      entry["created_at"] = node.node->created_at;
      entry["attributes"] = attrs_to_json(node.node->attributes);
    }
    nodes.push_back(std::move(entry));
  }
  doc["nodes"] = std::move(nodes);
  ojson edges = ojson::array();
  for (const ProvEdge& edge : pipeline.edges) {
    ojson entry;
    entry["source"] = edge.source.text();
    entry["target"] = edge.target.text();
    entry["kind"] = std::string(to_string(edge.kind));
    edges.push_back(std::move(entry));
  }
  doc["edges"] = std::move(edges);
  ojson aliases = ojson::array();
  for (const AliasLink& link : pipeline.alias_links) {
    ojson entry;
    entry["alias"] = link.alias.text();
    entry["original"] = link.original.text();
    aliases.push_back(std::move(entry));
  }
  doc["alias_links"] = std::move(aliases);
  ojson agents = ojson::array();
  for (const AgentEntry& agent : pipeline.agents) {
    ojson entry;
    entry["id"] = agent.id.text();
    entry["domain"] = agent.domain;
    entry["min_depth"] = agent.min_depth;
    agents.push_back(std::move(entry));
  }
  doc["agents"] = std::move(agents);
  return doc;
}

ojson inventory_to_json(const std::string& subject,
                        const std::vector<InventoryEntry>& entries) {
  ojson doc;
  doc["data_subject"] = subject;
  ojson list = ojson::array();
  for (const InventoryEntry& entry : entries) {
    ojson item;
    item["id"] = entry.id.text();
    item["domain"] = entry.domain;
    ojson purposes = ojson::array();
    for (const std::string& purpose : entry.purposes) purposes.push_back(purpose);
    item["purposes"] = std::move(purposes);
    ojson chain = ojson::array();
    for (const QualifiedId& id : entry.alias_chain) chain.push_back(id.text());
    item["alias_chain"] = std::move(chain);
    list.push_back(std::move(item));
  }
  doc["entities"] = std::move(list);
  return doc;
}

ojson erasure_to_json(const std::string& subject, const ErasureReport& report) {
  ojson doc;
  doc["data_subject"] = subject;
  ojson entities = ojson::array();
  for (const auto& [id, domain] : report.entities) {
    ojson item;
    item["id"] = id.text();
    item["domain"] = domain;
    entities.push_back(std::move(item));
  }
  doc["entities"] = std::move(entities);
  ojson frontier = ojson::array();
  for (const QualifiedId& id : report.frontier_activities) frontier.push_back(id.text());
  doc["frontier_activities"] = std::move(frontier);
  return doc;
}

ojson flows_to_json(const std::vector<FlowFinding>& findings) {
  ojson doc;
  ojson list = ojson::array();
  for (const FlowFinding& finding : findings) {
    ojson item;
    item["from"] = finding.flow.from_domain;
    item["to"] = finding.flow.to_domain;
    item["node_type"] = finding.flow.node_type;
    item["original"] = finding.original.text();
    item["alias"] = finding.alias.text();
    item["at"] = finding.at;
    list.push_back(std::move(item));
  }
  doc["unexpected_flows"] = std::move(list);
  return doc;
}

// ── DOT ──────────────────────────────────────────────────────────────────

std::string pipeline_to_dot(const DecisionPipeline& pipeline) {
  std::ostringstream out;
  out << "digraph provenance {\n";
  out << "  rankdir=BT;\n";
  out << "  node [fontsize=10];\n";
  for (const PipelineNode& node : pipeline.nodes) {
    out << "  " << dot_quote(node.id.text()) << " [label="
        << dot_label(node.id.text(), node_detail(node));
    if (node.kind) out << ", shape=" << dot_shape(*node.kind);
    if (node.access != NodeAccess::full) out << ", style=dashed";
    if (node.id.text() == pipeline.root.text()) out << ", penwidth=2";
    out << "];\n";
  }
  for (const ProvEdge& edge : pipeline.edges)
    out << "  " << dot_quote(edge.source.text()) << " -> "
        << dot_quote(edge.target.text()) << " [label="
        << dot_quote(std::string(to_string(edge.kind))) << "];\n";
  for (const AliasLink& link : pipeline.alias_links)
    out << "  " << dot_quote(link.alias.text()) << " -> "
        << dot_quote(link.original.text()) << " [label=\"alias_of\", style=dashed];\n";
  out << "}\n";
  return out.str();
}

// ── Plain text ───────────────────────────────────────────────────────────

std::string pipeline_to_text(const DecisionPipeline& pipeline, bool color) {
  const char* bold = color ? "\033[1m" : "";
  const char* dim = color ? "\033[2m" : "";
  const char* reset = color ? "\033[0m" : "";
  std::ostringstream out;
  out << bold << pipeline.root.text() << reset
      << (pipeline.truncated ? "  (truncated)" : "") << "\n";
  for (const PipelineNode& node : pipeline.nodes) {
    out << std::string(2 * node.depth, ' ');
    switch (node.access) {
      case NodeAccess::full:
        out << node.id.text() << "  " << to_string(*node.kind) << ":"
            << node.node->node_type << "  t=" << node.node->created_at;
        break;
      case NodeAccess::redacted:
        out << dim << node.id.text() << "  " << to_string(*node.kind)
            << ":<redacted>" << reset;
        break;
      case NodeAccess::unresolvable:
        out << dim << node.id.text() << "  <unresolvable>" << reset;
        break;
    }
    out << "\n";
  }
  if (!pipeline.agents.empty()) {
    out << "agents:\n";
    for (const AgentEntry& agent : pipeline.agents)
      out << "  " << agent.id.text() << "  depth=" << agent.min_depth << "\n";
  }
  return out.str();
}

std::string inventory_to_text(const std::string& subject,
                              const std::vector<InventoryEntry>& entries) {
  std::ostringstream out;
  out << "inventory for " << subject << ": " << entries.size() << " entities\n";
  for (const InventoryEntry& entry : entries) {
    out << "  " << entry.id.text() << "  purposes={" << join_set(entry.purposes) << "}";
    if (!entry.alias_chain.empty()) {
      out << "  aliases=[";
      for (std::size_t i = 0; i < entry.alias_chain.size(); ++i)
        out << (i ? " " : "") << entry.alias_chain[i].text();
      out << "]";
    }
    out << "\n";
  }
  return out.str();
}

std::string erasure_to_text(const std::string& subject, const ErasureReport& report) {
  std::ostringstream out;
  out << "erasure set for " << subject << ": " << report.entities.size()
      << " entities\n";
  for (const auto& [id, domain] : report.entities)
    out << "  " << id.text() << "\n";
  if (!report.frontier_activities.empty()) {
    out << "frontier activities (" << report.frontier_activities.size() << "):\n";
    for (const QualifiedId& id : report.frontier_activities)
      out << "  " << id.text() << "\n";
  }
  return out.str();
}

std::string flows_to_text(const std::vector<FlowFinding>& findings) {
  std::ostringstream out;
  if (findings.empty()) return "no unexpected flows\n";
  out << findings.size() << " unexpected flow" << (findings.size() == 1 ? "" : "s")
      << "\n";
  for (const FlowFinding& finding : findings)
    out << "  " << finding.flow.from_domain << " -> " << finding.flow.to_domain
        << "  type=" << finding.flow.node_type << "  " << finding.original.text()
        << " => " << finding.alias.text() << "  t=" << finding.at << "\n";
  return out.str();
}

}  // namespace decprov
