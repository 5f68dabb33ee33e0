#pragma once
// Typed provenance vocabulary: a PROV-DM-compatible subset of three node
// kinds and seven edge kinds, plus the canonical byte serialization the
// store's hash chain is built on.

#include "decprov/result.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace decprov {

// Logical simulation tick. All timestamps in the system are ticks, never
// wall clock.
using Tick = std::uint64_t;

// ── Identifiers ──────────────────────────────────────────────────────────

// `domain:local` pair. The domain half names the organizational boundary a
// record belongs to; the pair is the reconciliation key across stores.
struct QualifiedId {
  std::string domain;
  std::string local;

  std::string text() const { return domain + ":" + local; }
  friend bool operator==(const QualifiedId&, const QualifiedId&) = default;
};

// Orderings that are user-visible sort by the textual form.
inline bool id_text_less(const QualifiedId& a, const QualifiedId& b) {
  return a.text() < b.text();
}

Result<QualifiedId> mint_id(std::string domain, std::string local);
Result<QualifiedId> parse_id(std::string_view text);

// ── Vocabulary ───────────────────────────────────────────────────────────

enum class NodeKind : std::uint8_t { Entity, Activity, Agent };

enum class EdgeKind : std::uint8_t {
  Used,
  WasGeneratedBy,
  WasDerivedFrom,
  WasAssociatedWith,
  ActedOnBehalfOf,
  WasAttributedTo,
  WasInformedBy,
};

std::string_view to_string(NodeKind kind);
std::string_view to_string(EdgeKind kind);
std::optional<NodeKind> node_kind_from(std::string_view name);
std::optional<EdgeKind> edge_kind_from(std::string_view name);

// Endpoint-kind constraint table: each edge kind admits exactly one
// (source kind, target kind) pair.
NodeKind required_source_kind(EdgeKind kind);
NodeKind required_target_kind(EdgeKind kind);

// ── Attributes ───────────────────────────────────────────────────────────

// Distinct from a plain integer so the serialization stays injective.
struct TimeVal {
  Tick value = 0;
  friend bool operator==(const TimeVal&, const TimeVal&) = default;
};

using StringSet = std::set<std::string>;
using AttrValue = std::variant<std::string, bool, std::int64_t, TimeVal, StringSet>;
using AttrMap = std::map<std::string, AttrValue>;

// Reserved attribute keys carry declared value types, checked on append.
namespace attr {
inline constexpr std::string_view kPersonalData = "personal_data";        // bool
inline constexpr std::string_view kDataSubject = "data_subject";          // string
inline constexpr std::string_view kPurpose = "purpose";                   // string-set
inline constexpr std::string_view kConsentedPurposes = "consented_purposes";  // string-set
inline constexpr std::string_view kExpiry = "expiry";                     // timestamp
inline constexpr std::string_view kAutomatedDecision = "automated_decision";  // bool, Activities only
inline constexpr std::string_view kAcceptedSources = "accepted_sources";  // string-set, model Entities only
inline constexpr std::string_view kAliasOf = "alias_of";                  // QualifiedId text, Entities only
inline constexpr std::string_view kFaulty = "faulty";                     // bool
}  // namespace attr

// ── Records ──────────────────────────────────────────────────────────────

struct ProvNode {
  QualifiedId id;
  NodeKind kind = NodeKind::Entity;
  std::string node_type;
  AttrMap attributes;
  Tick created_at = 0;

  const AttrValue* attribute(std::string_view key) const;
  std::optional<bool> attr_bool(std::string_view key) const;
  std::optional<std::string> attr_string(std::string_view key) const;
  std::optional<Tick> attr_time(std::string_view key) const;
  const StringSet* attr_set(std::string_view key) const;

  // Parsed alias_of attribute, when present and well formed.
  std::optional<QualifiedId> alias_of() const;

  friend bool operator==(const ProvNode&, const ProvNode&) = default;
};

struct ProvEdge {
  QualifiedId source;
  QualifiedId target;
  EdgeKind kind = EdgeKind::Used;
  AttrMap attributes;

  friend bool operator==(const ProvEdge&, const ProvEdge&) = default;
};

// Accepts iff (kind, source_kind, target_kind) matches the constraint table.
Result<void> validate_edge(const ProvEdge& edge, NodeKind source_kind,
                           NodeKind target_kind);

// Structural checks applied before a node enters a store: domain ownership,
// reserved-key typing, alias_of well-formedness.
Result<void> validate_node(const ProvNode& node, std::string_view store_domain);

// ── Canonical serialization ──────────────────────────────────────────────
//
// Deterministic, injective byte form consumed by the hash chain. Fixed field
// order (id/source, target, kind, node_type, created_at, attributes sorted by
// key), length-prefixed UTF-8 strings, big-endian integers, sorted sets.

std::string canonical_serialize(const ProvNode& node);
std::string canonical_serialize(const ProvEdge& edge);

}  // namespace decprov
