#include "decprov/json.hpp"
#include "decprov/model.hpp"

#include <doctest.h>

#include <set>
#include <string>

using namespace decprov;

TEST_CASE("qualified ids parse and reject") {
  auto id = parse_id("orgA:ent-1");
  REQUIRE(id);
  CHECK(id->domain == "orgA");
  CHECK(id->local == "ent-1");
  CHECK(id->text() == "orgA:ent-1");

  for (const char* bad : {"", "orgA", ":ent-1", "orgA:", "org A:x", "a:b:c",
                          "orgA:ent 1", "orgA:ent\t1"}) {
    auto r = parse_id(bad);
    CHECK_FALSE(r);
    if (!r) CHECK(r.error().code == Errc::invalid_identifier);
  }

  CHECK(mint_id("orgA", "x_1.y-2").has_value());
  CHECK_FALSE(mint_id("", "x"));
  CHECK_FALSE(mint_id("orgA", "has colon:"));
}

TEST_CASE("kind names round-trip") {
  for (NodeKind kind : {NodeKind::Entity, NodeKind::Activity, NodeKind::Agent})
    CHECK(node_kind_from(to_string(kind)) == kind);
  for (EdgeKind kind :
       {EdgeKind::Used, EdgeKind::WasGeneratedBy, EdgeKind::WasDerivedFrom,
        EdgeKind::WasAssociatedWith, EdgeKind::ActedOnBehalfOf,
        EdgeKind::WasAttributedTo, EdgeKind::WasInformedBy})
    CHECK(edge_kind_from(to_string(kind)) == kind);
  CHECK(to_string(EdgeKind::WasGeneratedBy) == "wasGeneratedBy");
  CHECK_FALSE(node_kind_from("entity"));  // names are case-sensitive
  CHECK_FALSE(edge_kind_from("wasgeneratedby"));
}

TEST_CASE("edge endpoint constraints") {
  const QualifiedId a{"d", "a"}, b{"d", "b"};
  auto ok = [&](EdgeKind kind, NodeKind source, NodeKind target) {
    return validate_edge(ProvEdge{a, b, kind, {}}, source, target).has_value();
  };

  CHECK(ok(EdgeKind::Used, NodeKind::Activity, NodeKind::Entity));
  CHECK(ok(EdgeKind::WasGeneratedBy, NodeKind::Entity, NodeKind::Activity));
  CHECK(ok(EdgeKind::WasDerivedFrom, NodeKind::Entity, NodeKind::Entity));
  CHECK(ok(EdgeKind::WasAssociatedWith, NodeKind::Activity, NodeKind::Agent));
  CHECK(ok(EdgeKind::ActedOnBehalfOf, NodeKind::Agent, NodeKind::Agent));
  CHECK(ok(EdgeKind::WasAttributedTo, NodeKind::Entity, NodeKind::Agent));
  CHECK(ok(EdgeKind::WasInformedBy, NodeKind::Activity, NodeKind::Activity));

  // Every other combination is rejected with the constraint error.
  const NodeKind kinds[] = {NodeKind::Entity, NodeKind::Activity, NodeKind::Agent};
  const EdgeKind edges[] = {EdgeKind::Used,           EdgeKind::WasGeneratedBy,
                            EdgeKind::WasDerivedFrom, EdgeKind::WasAssociatedWith,
                            EdgeKind::ActedOnBehalfOf, EdgeKind::WasAttributedTo,
                            EdgeKind::WasInformedBy};
  int allowed = 0;
  for (EdgeKind e : edges)
    for (NodeKind s : kinds)
      for (NodeKind t : kinds) {
        auto r = validate_edge(ProvEdge{a, b, e, {}}, s, t);
        if (r) {
          ++allowed;
        } else {
          CHECK(r.error().code == Errc::kind_constraint_violation);
        }
      }
  CHECK(allowed == 7);
}

TEST_CASE("node validation enforces domain and reserved keys") {
  ProvNode node;
  node.id = {"orgA", "ent-1"};
  node.kind = NodeKind::Entity;
  node.node_type = "record";
  CHECK(validate_node(node, "orgA"));
  auto foreign = validate_node(node, "orgB");
  REQUIRE_FALSE(foreign);
  CHECK(foreign.error().code == Errc::validation_failed);

  SUBCASE("purpose must be a string set") {
    node.attributes.emplace(attr::kPurpose, std::string("advertising"));
    CHECK_FALSE(validate_node(node, "orgA"));
  }
  SUBCASE("personal_data must be a bool") {
    node.attributes.emplace(attr::kPersonalData, std::int64_t{1});
    CHECK_FALSE(validate_node(node, "orgA"));
  }
  SUBCASE("expiry must be a timestamp") {
    node.attributes.emplace(attr::kExpiry, std::int64_t{9});
    CHECK_FALSE(validate_node(node, "orgA"));
    node.attributes[std::string(attr::kExpiry)] = TimeVal{9};
    CHECK(validate_node(node, "orgA"));
  }
  SUBCASE("automated_decision is for activities") {
    node.attributes.emplace(attr::kAutomatedDecision, true);
    CHECK_FALSE(validate_node(node, "orgA"));
    node.kind = NodeKind::Activity;
    CHECK(validate_node(node, "orgA"));
  }
  SUBCASE("alias_of must name a well-formed foreign id") {
    node.attributes.emplace(attr::kAliasOf, std::string("not an id"));
    CHECK_FALSE(validate_node(node, "orgA"));
    node.attributes[std::string(attr::kAliasOf)] = std::string("orgB:ent-4");
    CHECK(validate_node(node, "orgA"));
    CHECK(node.alias_of()->text() == "orgB:ent-4");
    node.kind = NodeKind::Agent;
    CHECK_FALSE(validate_node(node, "orgA"));
  }
}

TEST_CASE("canonical bytes are injective over representative tweaks") {
  ProvNode node;
  node.id = {"d", "ent-1"};
  node.kind = NodeKind::Entity;
  node.node_type = "record";
  node.created_at = 5;
  node.attributes.emplace("score", std::int64_t{12});

  std::set<std::string> seen;
  auto fresh = [&](const std::string& bytes) { return seen.insert(bytes).second; };

  CHECK(fresh(canonical_serialize(node)));
  ProvNode tweaked = node;
  tweaked.created_at = 6;
  CHECK(fresh(canonical_serialize(tweaked)));
  tweaked = node;
  tweaked.node_type = "recore";
  CHECK(fresh(canonical_serialize(tweaked)));
  tweaked = node;
  tweaked.attributes["score"] = std::int64_t{13};
  CHECK(fresh(canonical_serialize(tweaked)));
  tweaked = node;
  tweaked.attributes["score"] = TimeVal{12};  // same digits, different type
  CHECK(fresh(canonical_serialize(tweaked)));
  tweaked = node;
  tweaked.attributes["score"] = std::string("12");
  CHECK(fresh(canonical_serialize(tweaked)));

  // Key/value boundary shifts must not collide.
  ProvNode left = node, right = node;
  left.attributes.clear();
  right.attributes.clear();
  left.attributes.emplace("ab", std::string("c"));
  right.attributes.emplace("a", std::string("bc"));
  CHECK(canonical_serialize(left) != canonical_serialize(right));

  ProvEdge edge{{"d", "ent-1"}, {"d", "act-1"}, EdgeKind::WasGeneratedBy, {}};
  CHECK(fresh(canonical_serialize(edge)));
  ProvEdge swapped{{"d", "act-1"}, {"d", "ent-1"}, EdgeKind::WasGeneratedBy, {}};
  CHECK(canonical_serialize(edge) != canonical_serialize(swapped));
}

TEST_CASE("attribute json round-trips exactly") {
  AttrMap attrs;
  attrs.emplace("flag", true);
  attrs.emplace("count", std::int64_t{-3});
  attrs.emplace("name", std::string("söme text"));
  attrs.emplace("when", TimeVal{77});
  attrs.emplace("tags", StringSet{"b", "a"});

  const ojson j = attrs_to_json(attrs);
  CHECK(j["when"] == ojson{{"ts", 77}});
  CHECK(j["tags"] == ojson::array({"a", "b"}));

  auto back = attrs_from_json(j);
  REQUIRE(back);
  CHECK(*back == attrs);
}

TEST_CASE("floating point attributes are rejected") {
  auto r = attr_value_from_json(nlohmann::json::parse("1.5"));
  REQUIRE_FALSE(r);
  CHECK(r.error().code == Errc::malformed_record);
  CHECK_FALSE(attrs_from_json(nlohmann::json::parse(R"({"x": 2.0})")));
  CHECK_FALSE(attr_value_from_json(nlohmann::json::parse(R"({"ts": 1.5})")));
  CHECK_FALSE(attr_value_from_json(nlohmann::json::parse(R"({"ts": -1})")));
}

TEST_CASE("node and edge json round-trips") {
  ProvNode node;
  node.id = {"orgA", "ent-9"};
  node.kind = NodeKind::Entity;
  node.node_type = "profile";
  node.created_at = 3;
  node.attributes.emplace(attr::kPersonalData, true);
  node.attributes.emplace(attr::kDataSubject, std::string("user-1"));

  auto node_back = node_from_json(node_to_json(node));
  REQUIRE(node_back);
  CHECK(*node_back == node);

  ProvEdge edge{{"orgA", "act-1"}, {"orgA", "ent-9"}, EdgeKind::Used, {}};
  edge.attributes.emplace("at", TimeVal{3});
  auto edge_back = edge_from_json(edge_to_json(edge));
  REQUIRE(edge_back);
  CHECK(*edge_back == edge);

  auto bad = node_from_json(nlohmann::json::parse(
      R"({"rectype":"node","id":"orgA:x","kind":"nope","node_type":"t","created_at":0,"attributes":{}})"));
  REQUIRE_FALSE(bad);
  CHECK(bad.error().code == Errc::malformed_record);
}
