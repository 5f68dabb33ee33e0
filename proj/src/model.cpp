#include "decprov/model.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace decprov {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_identifier: return "InvalidIdentifier";
    case Errc::kind_constraint_violation: return "KindConstraintViolation";
    case Errc::unknown_node: return "UnknownNode";
    case Errc::unknown_root: return "UnknownRoot";
    case Errc::unknown_domain: return "UnknownDomain";
    case Errc::unknown_component: return "UnknownComponent";
    case Errc::temporal_violation: return "TemporalViolation";
    case Errc::policy_blocked: return "PolicyBlocked";
    case Errc::validation_failed: return "ValidationFailed";
    case Errc::dangling_reference: return "DanglingReference";
    case Errc::malformed_record: return "MalformedRecord";
    case Errc::chain_mismatch: return "ChainMismatch";
    case Errc::parse_error: return "ParseError";
    case Errc::non_monotone_timestamps: return "NonMonotoneTimestamps";
    case Errc::tick_out_of_range: return "TickOutOfRange";
    case Errc::unresolvable_context: return "UnresolvableContext";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

namespace {

bool valid_id_part(std::string_view part) {
  if (part.empty()) return false;
  for (unsigned char c : part) {
    if (c == ':' || std::isspace(c)) return false;
  }
  return true;
}

}  // namespace

Result<QualifiedId> mint_id(std::string domain, std::string local) {
  if (!valid_id_part(domain)) {
    return make_error(Errc::invalid_identifier,
                      "identifier domain must be non-empty and free of ':' and whitespace");
  }
  if (!valid_id_part(local)) {
    return make_error(Errc::invalid_identifier,
                      "identifier local part must be non-empty and free of ':' and whitespace");
  }
  return QualifiedId{std::move(domain), std::move(local)};
}

Result<QualifiedId> parse_id(std::string_view text) {
  auto pos = text.find(':');
  if (pos == std::string_view::npos) {
    return make_error(Errc::invalid_identifier,
                      "identifier '" + std::string(text) + "' lacks a ':' separator");
  }
  return mint_id(std::string(text.substr(0, pos)), std::string(text.substr(pos + 1)));
}

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Entity: return "Entity";
    case NodeKind::Activity: return "Activity";
    case NodeKind::Agent: return "Agent";
  }
  return "Entity";
}

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Used: return "used";
    case EdgeKind::WasGeneratedBy: return "wasGeneratedBy";
    case EdgeKind::WasDerivedFrom: return "wasDerivedFrom";
    case EdgeKind::WasAssociatedWith: return "wasAssociatedWith";
    case EdgeKind::ActedOnBehalfOf: return "actedOnBehalfOf";
    case EdgeKind::WasAttributedTo: return "wasAttributedTo";
    case EdgeKind::WasInformedBy: return "wasInformedBy";
  }
  return "used";
}

std::optional<NodeKind> node_kind_from(std::string_view name) {
  if (name == "Entity") return NodeKind::Entity;
  if (name == "Activity") return NodeKind::Activity;
  if (name == "Agent") return NodeKind::Agent;
  return std::nullopt;
}

std::optional<EdgeKind> edge_kind_from(std::string_view name) {
  static constexpr std::array<EdgeKind, 7> kinds = {
      EdgeKind::Used,           EdgeKind::WasGeneratedBy,
      EdgeKind::WasDerivedFrom, EdgeKind::WasAssociatedWith,
      EdgeKind::ActedOnBehalfOf, EdgeKind::WasAttributedTo,
      EdgeKind::WasInformedBy,
  };
  for (EdgeKind k : kinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

NodeKind required_source_kind(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Used: return NodeKind::Activity;
    case EdgeKind::WasGeneratedBy: return NodeKind::Entity;
    case EdgeKind::WasDerivedFrom: return NodeKind::Entity;
    case EdgeKind::WasAssociatedWith: return NodeKind::Activity;
    case EdgeKind::ActedOnBehalfOf: return NodeKind::Agent;
    case EdgeKind::WasAttributedTo: return NodeKind::Entity;
    case EdgeKind::WasInformedBy: return NodeKind::Activity;
  }
  return NodeKind::Entity;
}

NodeKind required_target_kind(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Used: return NodeKind::Entity;
    case EdgeKind::WasGeneratedBy: return NodeKind::Activity;
    case EdgeKind::WasDerivedFrom: return NodeKind::Entity;
    case EdgeKind::WasAssociatedWith: return NodeKind::Agent;
    case EdgeKind::ActedOnBehalfOf: return NodeKind::Agent;
    case EdgeKind::WasAttributedTo: return NodeKind::Agent;
    case EdgeKind::WasInformedBy: return NodeKind::Activity;
  }
  return NodeKind::Entity;
}

const AttrValue* ProvNode::attribute(std::string_view key) const {
  auto it = attributes.find(std::string(key));
  return it == attributes.end() ? nullptr : &it->second;
}

std::optional<bool> ProvNode::attr_bool(std::string_view key) const {
  const AttrValue* v = attribute(key);
  if (v == nullptr) return std::nullopt;
  if (const bool* b = std::get_if<bool>(v)) return *b;
  return std::nullopt;
}

std::optional<std::string> ProvNode::attr_string(std::string_view key) const {
  const AttrValue* v = attribute(key);
  if (v == nullptr) return std::nullopt;
  if (const std::string* s = std::get_if<std::string>(v)) return *s;
  return std::nullopt;
}

std::optional<Tick> ProvNode::attr_time(std::string_view key) const {
  const AttrValue* v = attribute(key);
  if (v == nullptr) return std::nullopt;
  if (const TimeVal* t = std::get_if<TimeVal>(v)) return t->value;
  return std::nullopt;
}

const StringSet* ProvNode::attr_set(std::string_view key) const {
  const AttrValue* v = attribute(key);
  if (v == nullptr) return nullptr;
  return std::get_if<StringSet>(v);
}

std::optional<QualifiedId> ProvNode::alias_of() const {
  auto text = attr_string(attr::kAliasOf);
  if (!text) return std::nullopt;
  auto parsed = parse_id(*text);
  if (!parsed.ok()) return std::nullopt;
  return std::move(parsed).take();
}

Result<void> validate_edge(const ProvEdge& edge, NodeKind source_kind,
                           NodeKind target_kind) {
  NodeKind want_source = required_source_kind(edge.kind);
  NodeKind want_target = required_target_kind(edge.kind);
  if (source_kind != want_source || target_kind != want_target) {
    std::string msg = std::string(to_string(edge.kind)) + " requires " +
                      std::string(to_string(want_source)) + " -> " +
                      std::string(to_string(want_target)) + ", got " +
                      std::string(to_string(source_kind)) + " -> " +
                      std::string(to_string(target_kind));
    return make_error(Errc::kind_constraint_violation, std::move(msg));
  }
  return {};
}

namespace {

enum class AttrType { String, Bool, Int, Time, Set };

bool has_type(const AttrValue& value, AttrType type) {
  switch (type) {
    case AttrType::String: return std::holds_alternative<std::string>(value);
    case AttrType::Bool: return std::holds_alternative<bool>(value);
    case AttrType::Int: return std::holds_alternative<std::int64_t>(value);
    case AttrType::Time: return std::holds_alternative<TimeVal>(value);
    case AttrType::Set: return std::holds_alternative<StringSet>(value);
  }
  return false;
}

Result<void> check_reserved(const ProvNode& node, std::string_view key,
                            AttrType type) {
  const AttrValue* v = node.attribute(key);
  if (v != nullptr && !has_type(*v, type)) {
    return make_error(Errc::validation_failed,
                      "reserved attribute '" + std::string(key) +
                          "' carries the wrong value type on " + node.id.text());
  }
  return {};
}

}  // namespace

Result<void> validate_node(const ProvNode& node, std::string_view store_domain) {
  if (!valid_id_part(node.id.domain) || !valid_id_part(node.id.local)) {
    return make_error(Errc::invalid_identifier,
                      "node id '" + node.id.text() + "' is not a valid identifier");
  }
  if (node.id.domain != store_domain) {
    return make_error(Errc::validation_failed,
                      "node " + node.id.text() + " does not belong to domain '" +
                          std::string(store_domain) + "'");
  }
  if (node.node_type.empty()) {
    return make_error(Errc::validation_failed,
                      "node " + node.id.text() + " lacks a node_type");
  }

  struct Reserved {
    std::string_view key;
    AttrType type;
  };
  static constexpr Reserved reserved[] = {
      {attr::kPersonalData, AttrType::Bool},
      {attr::kDataSubject, AttrType::String},
      {attr::kPurpose, AttrType::Set},
      {attr::kConsentedPurposes, AttrType::Set},
      {attr::kExpiry, AttrType::Time},
      {attr::kAutomatedDecision, AttrType::Bool},
      {attr::kAcceptedSources, AttrType::Set},
      {attr::kAliasOf, AttrType::String},
      {attr::kFaulty, AttrType::Bool},
  };
  for (const Reserved& r : reserved) {
    if (auto res = check_reserved(node, r.key, r.type); !res.ok()) return res;
  }

  if (node.attribute(attr::kAutomatedDecision) != nullptr &&
      node.kind != NodeKind::Activity) {
    return make_error(Errc::validation_failed,
                      "automated_decision is restricted to Activity nodes");
  }
  if (node.attribute(attr::kAcceptedSources) != nullptr &&
      node.kind != NodeKind::Entity) {
    return make_error(Errc::validation_failed,
                      "accepted_sources is restricted to Entity nodes");
  }
  if (const AttrValue* v = node.attribute(attr::kAliasOf)) {
    if (node.kind != NodeKind::Entity) {
      return make_error(Errc::validation_failed,
                        "alias_of is restricted to Entity nodes");
    }
    auto parsed = parse_id(std::get<std::string>(*v));
    if (!parsed.ok()) {
      return make_error(Errc::validation_failed,
                        "alias_of on " + node.id.text() +
                            " is not a valid qualified identifier");
    }
    if (parsed.value().domain == node.id.domain) {
      return make_error(Errc::validation_failed,
                        "alias_of on " + node.id.text() +
                            " must reference a different domain");
    }
  }
  return {};
}

// ── Canonical serialization ──────────────────────────────────────────────

namespace {

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<char>((v >> shift) & 0xFF));
  }
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<char>((v >> shift) & 0xFF));
  }
}

void put_str(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

void put_value(std::string& out, const AttrValue& value) {
  if (const std::string* s = std::get_if<std::string>(&value)) {
    put_u8(out, 'S');
    put_str(out, *s);
  } else if (const bool* b = std::get_if<bool>(&value)) {
    put_u8(out, 'B');
    put_u8(out, *b ? 1 : 0);
  } else if (const std::int64_t* i = std::get_if<std::int64_t>(&value)) {
    put_u8(out, 'I');
    put_u64(out, static_cast<std::uint64_t>(*i));
  } else if (const TimeVal* t = std::get_if<TimeVal>(&value)) {
    put_u8(out, 'T');
    put_u64(out, t->value);
  } else {
    const StringSet& set = std::get<StringSet>(value);
    put_u8(out, 'L');
    put_u32(out, static_cast<std::uint32_t>(set.size()));
    for (const std::string& item : set) put_str(out, item);
  }
}

void put_attrs(std::string& out, const AttrMap& attrs) {
  put_u32(out, static_cast<std::uint32_t>(attrs.size()));
  for (const auto& [key, value] : attrs) {  // std::map iterates keys ascending
    put_str(out, key);
    put_value(out, value);
  }
}

}  // namespace

std::string canonical_serialize(const ProvNode& node) {
  std::string out;
  out.reserve(64 + node.node_type.size());
  put_u8(out, 'N');
  put_str(out, node.id.text());
  put_u8(out, static_cast<std::uint8_t>(node.kind));
  put_str(out, node.node_type);
  put_u64(out, node.created_at);
  put_attrs(out, node.attributes);
  return out;
}

std::string canonical_serialize(const ProvEdge& edge) {
  std::string out;
  out.reserve(64);
  put_u8(out, 'E');
  put_str(out, edge.source.text());
  put_str(out, edge.target.text());
  put_u8(out, static_cast<std::uint8_t>(edge.kind));
  put_attrs(out, edge.attributes);
  return out;
}

}  // namespace decprov
