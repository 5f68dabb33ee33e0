#include "decprov/json.hpp"

#include <cstdint>
#include <limits>
#include <utility>

namespace decprov {

namespace {

Result<QualifiedId> id_from_json(const nlohmann::json& j, const char* field) {
  if (!j.is_string())
    return make_error(Errc::malformed_record,
                      std::string(field) + " must be a string");
  auto parsed = parse_id(j.get<std::string>());
  if (!parsed.ok())
    return make_error(Errc::malformed_record,
                      std::string(field) + ": " + parsed.error().message);
  return parsed.take();
}

}  // namespace

ojson attr_value_to_json(const AttrValue& value) {
  ojson out;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          out = v;
        } else if constexpr (std::is_same_v<T, bool>) {
          out = v;
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          out = v;
        } else if constexpr (std::is_same_v<T, TimeVal>) {
          out = ojson{{"ts", v.value}};
        } else {  // StringSet: std::set iterates sorted already
          out = ojson::array();
          for (const auto& s : v) out.push_back(s);
        }
      },
      value);
  return out;
}

Result<AttrValue> attr_value_from_json(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::string:
      return AttrValue{j.get<std::string>()};
    case nlohmann::json::value_t::boolean:
      return AttrValue{j.get<bool>()};
    case nlohmann::json::value_t::number_integer:
      return AttrValue{j.get<std::int64_t>()};
    case nlohmann::json::value_t::number_unsigned: {
      auto u = j.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
        return make_error(Errc::malformed_record, "integer attribute out of range");
      return AttrValue{static_cast<std::int64_t>(u)};
    }
    case nlohmann::json::value_t::array: {
      StringSet set;
      for (const auto& item : j) {
        if (!item.is_string())
          return make_error(Errc::malformed_record,
                            "set attribute elements must be strings");
        set.insert(item.get<std::string>());
      }
      return AttrValue{std::move(set)};
    }
    case nlohmann::json::value_t::object: {
      if (j.size() == 1 && j.contains("ts") && j["ts"].is_number_unsigned())
        return AttrValue{TimeVal{j["ts"].get<Tick>()}};
      if (j.size() == 1 && j.contains("ts") && j["ts"].is_number_integer()) {
        auto v = j["ts"].get<std::int64_t>();
        if (v < 0)
          return make_error(Errc::malformed_record, "timestamp must be non-negative");
        return AttrValue{TimeVal{static_cast<Tick>(v)}};
      }
      return make_error(Errc::malformed_record, "unrecognized attribute object");
    }
    default:
      return make_error(Errc::malformed_record,
                        "unsupported attribute value type (floats are not allowed)");
  }
}

ojson attrs_to_json(const AttrMap& attrs) {
  ojson out = ojson::object();
  for (const auto& [key, value] : attrs) out[key] = attr_value_to_json(value);
  return out;
}

Result<AttrMap> attrs_from_json(const nlohmann::json& j) {
  if (!j.is_object())
    return make_error(Errc::malformed_record, "attributes must be an object");
  AttrMap attrs;
  for (const auto& [key, value] : j.items()) {
    auto parsed = attr_value_from_json(value);
    if (!parsed.ok()) {
      auto err = parsed.error();
      err.message = "attribute '" + key + "': " + err.message;
      return err;
    }
    attrs.emplace(key, parsed.take());
  }
  return attrs;
}

ojson node_to_json(const ProvNode& node) {
  ojson out;
  out["rectype"] = "node";
  out["id"] = node.id.text();
  out["kind"] = std::string(to_string(node.kind));
  out["node_type"] = node.node_type;
  out["created_at"] = node.created_at;
  out["attributes"] = attrs_to_json(node.attributes);
  return out;
}

ojson edge_to_json(const ProvEdge& edge) {
  ojson out;
  out["rectype"] = "edge";
  out["source"] = edge.source.text();
  out["target"] = edge.target.text();
  out["kind"] = std::string(to_string(edge.kind));
  out["attributes"] = attrs_to_json(edge.attributes);
  return out;
}

Result<ProvNode> node_from_json(const nlohmann::json& j) {
  if (!j.is_object())
    return make_error(Errc::malformed_record, "node record must be an object");
  for (const char* field : {"id", "kind", "node_type", "created_at", "attributes"})
    if (!j.contains(field))
      return make_error(Errc::malformed_record,
                        std::string("node record missing '") + field + "'");

  ProvNode node;
  auto id = id_from_json(j["id"], "id");
  if (!id.ok()) return id.error();
  node.id = id.take();

  if (!j["kind"].is_string())
    return make_error(Errc::malformed_record, "kind must be a string");
  auto kind = node_kind_from(j["kind"].get<std::string>());
  if (!kind)
    return make_error(Errc::malformed_record,
                      "unknown node kind '" + j["kind"].get<std::string>() + "'");
  node.kind = *kind;

  if (!j["node_type"].is_string())
    return make_error(Errc::malformed_record, "node_type must be a string");
  node.node_type = j["node_type"].get<std::string>();

  if (!j["created_at"].is_number_unsigned() &&
      !(j["created_at"].is_number_integer() && j["created_at"].get<std::int64_t>() >= 0))
    return make_error(Errc::malformed_record,
                      "created_at must be a non-negative integer");
  node.created_at = j["created_at"].get<Tick>();

  auto attrs = attrs_from_json(j["attributes"]);
  if (!attrs.ok()) return attrs.error();
  node.attributes = attrs.take();
  return node;
}

Result<ProvEdge> edge_from_json(const nlohmann::json& j) {
  if (!j.is_object())
    return make_error(Errc::malformed_record, "edge record must be an object");
  for (const char* field : {"source", "target", "kind", "attributes"})
    if (!j.contains(field))
      return make_error(Errc::malformed_record,
                        std::string("edge record missing '") + field + "'");

  ProvEdge edge;
  auto source = id_from_json(j["source"], "source");
  if (!source.ok()) return source.error();
  edge.source = source.take();

  auto target = id_from_json(j["target"], "target");
  if (!target.ok()) return target.error();
  edge.target = target.take();

  if (!j["kind"].is_string())
    return make_error(Errc::malformed_record, "kind must be a string");
  auto kind = edge_kind_from(j["kind"].get<std::string>());
  if (!kind)
    return make_error(Errc::malformed_record,
                      "unknown edge kind '" + j["kind"].get<std::string>() + "'");
  edge.kind = *kind;

  auto attrs = attrs_from_json(j["attributes"]);
  if (!attrs.ok()) return attrs.error();
  edge.attributes = attrs.take();
  return edge;
}

}  // namespace decprov
