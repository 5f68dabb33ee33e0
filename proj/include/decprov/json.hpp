#pragma once
// JSON encoding of provenance records. All numeric values are integers —
// floating point never appears, so encode/decode round-trips are exact.
// Timestamps are wrapped as {"ts": n} to keep them distinct from plain
// integers; string sets serialize as sorted arrays.

#include "decprov/model.hpp"
#include "decprov/result.hpp"

#include <json.hpp>

#include <string>

namespace decprov {

using ojson = nlohmann::ordered_json;

ojson attr_value_to_json(const AttrValue& value);
Result<AttrValue> attr_value_from_json(const nlohmann::json& j);

ojson attrs_to_json(const AttrMap& attrs);
Result<AttrMap> attrs_from_json(const nlohmann::json& j);

// Node object, field order: rectype, id, kind, node_type, created_at,
// attributes. Edge object: rectype, source, target, kind, attributes.
ojson node_to_json(const ProvNode& node);
ojson edge_to_json(const ProvEdge& edge);

Result<ProvNode> node_from_json(const nlohmann::json& j);
Result<ProvEdge> edge_from_json(const nlohmann::json& j);

}  // namespace decprov
