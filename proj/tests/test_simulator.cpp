#include "decprov/simulator.hpp"

#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

using namespace decprov;

namespace {

const char* kTwoDomainScenario = R"({
  "seed": 5,
  "domains": [
    {"name": "lab", "agents": [{"id": "lab-ops", "type": "organization"}]},
    {"name": "hub", "agents": [{"id": "hub-ops", "type": "organization"}]}
  ],
  "components": [
    {"id": "s1", "domain": "lab", "kind": "sensor"},
    {"id": "proc", "domain": "lab", "kind": "process"},
    {"id": "mdl", "domain": "hub", "kind": "model",
     "attributes": {"accepted_sources": ["reading"]}}
  ],
  "script": [
    {"at": 1, "event": "emit", "component": "s1", "node_type": "reading",
     "attributes": {"unit": "C"}},
    {"at": 2, "event": "emit", "component": "s1", "node_type": "reading"},
    {"at": 3, "event": "process", "component": "proc", "inputs": ["s1"],
     "node_type": "result"},
    {"at": 4, "event": "transfer", "entity": "proc", "from": "lab", "to": "hub"},
    {"at": 5, "event": "process", "component": "mdl", "inputs": ["proc"],
     "node_type": "decision"}
  ]
})";

Scenario load_ok(const char* text) {
  auto scenario = load_scenario(text);
  REQUIRE(scenario);
  return std::move(scenario.value());
}

void check_load_error(const char* text, Errc code, const char* needle = nullptr) {
  auto scenario = load_scenario(text);
  REQUIRE_FALSE(scenario);
  CHECK(scenario.error().code == code);
  if (needle)
    CHECK(scenario.error().message.find(needle) != std::string::npos);
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() /
             ("decprov-sim-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("scenario loading pinpoints mistakes") {
  check_load_error("{\n  \"domains\": [\n  broken\n", Errc::parse_error, "line 3");
  check_load_error(R"({"domains": [], "script": [], "surprise": 1})",
                   Errc::parse_error, "surprise");
  check_load_error(R"({"domains": [{"name": "regulator"}], "script": []})",
                   Errc::parse_error, "regulator");
  check_load_error(R"({"domains": [{"name": "a"}, {"name": "a"}], "script": []})",
                   Errc::parse_error, "duplicate domain");
  check_load_error(
      R"({"domains": [{"name": "a"}],
          "components": [{"id": "x", "domain": "a", "kind": "turbine"}],
          "script": []})",
      Errc::parse_error, "turbine");
  check_load_error(
      R"({"domains": [{"name": "a"}],
          "components": [{"id": "x", "domain": "b", "kind": "sensor"}],
          "script": []})",
      Errc::unknown_domain, "b");
  check_load_error(
      R"({"domains": [{"name": "a"}],
          "components": [{"id": "x", "domain": "a", "kind": "sensor"},
                         {"id": "x", "domain": "a", "kind": "process"}],
          "script": []})",
      Errc::parse_error, "duplicate component");
  check_load_error(
      R"({"domains": [{"name": "a"}],
          "script": [{"at": 0, "event": "emit", "component": "ghost",
                      "node_type": "x"}]})",
      Errc::unknown_component, "script[0]");
  check_load_error(
      R"({"domains": [{"name": "a"}],
          "components": [{"id": "x", "domain": "a", "kind": "sensor"}],
          "script": [{"at": 5, "event": "emit", "component": "x", "node_type": "t"},
                     {"at": 4, "event": "emit", "component": "x", "node_type": "t"}]})",
      Errc::non_monotone_timestamps, "script[1]");
  check_load_error(
      R"({"domains": [{"name": "a"}],
          "components": [{"id": "x", "domain": "a", "kind": "sensor"}],
          "script": [{"at": -2, "event": "emit", "component": "x",
                      "node_type": "t"}]})",
      Errc::tick_out_of_range, "script[0]");
  check_load_error(R"({"domains": [{"name": "a"}], "script": [], "seed": -1})",
                   Errc::parse_error, "seed");
  check_load_error(
      R"({"domains": [{"name": "a"}],
          "script": [{"at": 0, "event": "detonate"}]})",
      Errc::parse_error, "detonate");
  check_load_error(
      R"({"domains": [{"name": "a"}],
          "components": [{"id": "x", "domain": "a", "kind": "sensor"}],
          "script": [{"at": 0, "event": "emit", "component": "x",
                      "node_type": "t", "bonus": true}]})",
      Errc::parse_error, "bonus");
  check_load_error(
      R"({"domains": [{"name": "a"}],
          "components": [{"id": "x", "domain": "a", "kind": "sensor"}],
          "script": [{"at": 0, "event": "process", "component": "x",
                      "inputs": ["missing"], "node_type": "t"}]})",
      Errc::unknown_component, "missing");
}

TEST_CASE("a scripted run produces the captured graph") {
  const Scenario scenario = load_ok(kTwoDomainScenario);
  auto outcome = run(scenario);
  REQUIRE(outcome);
  RunResult& result = outcome.value();

  REQUIRE(result.events.size() == scenario.script.size());
  for (const EventRecord& event : result.events) {
    CHECK(event.outcome == "ok");
    CHECK(event.verdicts.empty());  // no rules in play
  }
  CHECK(result.alerts.empty());

  const ProvStore* lab = result.federation.store("lab");
  const ProvStore* hub = result.federation.store("hub");
  REQUIRE(lab);
  REQUIRE(hub);

  // First emit: generated entity carries the declared attributes.
  REQUIRE(result.events[0].produced);
  const ProvNode* reading = lab->find_node(result.events[0].produced->text());
  REQUIRE(reading);
  CHECK(reading->node_type == "reading");
  CHECK(reading->created_at == 1);
  CHECK(reading->attr_string("unit") == "C");

  // The bare-component selector resolves to the latest credited output.
  REQUIRE(result.events[2].produced);
  const ProvNode* combined = lab->find_node(result.events[2].produced->text());
  REQUIRE(combined);
  std::vector<std::string> derived_from;
  for (const ProvEdge* edge : lab->out_edges(combined->id.text()))
    if (edge->kind == EdgeKind::WasDerivedFrom)
      derived_from.push_back(edge->target.text());
  REQUIRE(derived_from.size() == 1);
  CHECK(derived_from[0] == result.events[1].produced->text());

  // Transfer materialized an alias in the receiving domain.
  REQUIRE(result.events[3].produced);
  const ProvNode* alias = hub->find_node(result.events[3].produced->text());
  REQUIRE(alias);
  CHECK(alias->alias_of()->text() == result.events[2].produced->text());

  // The model step consumed the alias (credited back to "proc") plus its
  // own model entity, marked as an automated decision.
  REQUIRE(result.events[4].produced);
  const ProvNode* decision = hub->find_node(result.events[4].produced->text());
  REQUIRE(decision);
  const ProvNode* model_entity = hub->find_node("hub:mdl-model");
  REQUIRE(model_entity);
  CHECK(model_entity->attr_set(attr::kAcceptedSources) != nullptr);

  std::vector<const ProvEdge*> generation = hub->out_edges(decision->id.text());
  QualifiedId decided_by;
  for (const ProvEdge* edge : generation)
    if (edge->kind == EdgeKind::WasGeneratedBy) decided_by = edge->target;
  const ProvNode* activity = hub->find_node(decided_by.text());
  REQUIRE(activity);
  CHECK(activity->attr_bool(attr::kAutomatedDecision) == true);

  std::vector<std::string> used;
  for (const ProvEdge* edge : hub->out_edges(decided_by.text()))
    if (edge->kind == EdgeKind::Used) used.push_back(edge->target.text());
  REQUIRE(used.size() == 2);
  CHECK(used[0] == "hub:mdl-model");  // the model is wired in first
  CHECK(used[1] == alias->id.text());

  // Derivation tracks the data input, never the model parameters.
  std::vector<std::string> decision_sources;
  for (const ProvEdge* edge : hub->out_edges(decision->id.text()))
    if (edge->kind == EdgeKind::WasDerivedFrom)
      decision_sources.push_back(edge->target.text());
  CHECK(decision_sources == std::vector<std::string>{alias->id.text()});

  SUBCASE("reruns are bit-identical") {
    auto second = run(scenario);
    REQUIRE(second);
    for (const std::string& domain : {std::string("lab"), std::string("hub")}) {
      CHECK(second->federation.store(domain)->head_hash() ==
            result.federation.store(domain)->head_hash());
    }
  }
}

TEST_CASE("explicit selectors name exact entities") {
  std::string text = kTwoDomainScenario;
  const std::string bare = "\"inputs\": [\"s1\"]";
  text.replace(text.find(bare), bare.size(), "\"inputs\": [\"lab:ent-1\"]");
  auto outcome = run(load_ok(text.c_str()));
  REQUIRE(outcome);
  const RunResult& result = *outcome;
  REQUIRE(result.events[2].produced);
  const ProvStore* lab = result.federation.store("lab");
  std::vector<std::string> sources;
  for (const ProvEdge* edge :
       lab->out_edges(result.events[2].produced->text()))
    if (edge->kind == EdgeKind::WasDerivedFrom) sources.push_back(edge->target.text());
  CHECK(sources == std::vector<std::string>{"lab:ent-1"});
}

TEST_CASE("selector misses are event outcomes, not run failures") {
  auto scenario = load_ok(R"({
    "domains": [{"name": "a", "agents": [{"id": "ops"}]}],
    "components": [{"id": "s", "domain": "a", "kind": "sensor"},
                   {"id": "p", "domain": "a", "kind": "process"}],
    "script": [
      {"at": 0, "event": "process", "component": "p", "inputs": ["s"],
       "node_type": "early"},
      {"at": 1, "event": "emit", "component": "s", "node_type": "reading"}
    ]
  })");
  auto outcome = run(scenario);
  REQUIRE(outcome);
  CHECK(outcome->events[0].outcome == "error:UnknownNode");
  CHECK(outcome->events[0].detail.find("no recorded output") != std::string::npos);
  CHECK_FALSE(outcome->events[0].produced.has_value());
  CHECK(outcome->events[1].outcome == "ok");
}

TEST_CASE("faults mark outputs from their tick onward") {
  auto scenario = load_ok(R"({
    "domains": [{"name": "a", "agents": [{"id": "ops"}]}],
    "components": [{"id": "s", "domain": "a", "kind": "sensor"}],
    "script": [
      {"at": 1, "event": "emit", "component": "s", "node_type": "reading"},
      {"at": 2, "event": "inject_fault", "component": "s", "tick": 4},
      {"at": 3, "event": "emit", "component": "s", "node_type": "reading"},
      {"at": 4, "event": "emit", "component": "s", "node_type": "reading"},
      {"at": 5, "event": "emit", "component": "s", "node_type": "reading"}
    ]
  })");
  auto outcome = run(scenario);
  REQUIRE(outcome);
  const ProvStore* store = outcome->federation.store("a");
  auto faulty_at = [&](int event_index) {
    const ProvNode* node =
        store->find_node(outcome->events[event_index].produced->text());
    REQUIRE(node);
    return node->attr_bool(attr::kFaulty) == true;
  };
  CHECK_FALSE(faulty_at(0));
  CHECK_FALSE(faulty_at(2));  // fault not yet active at tick 3
  CHECK(faulty_at(3));
  CHECK(faulty_at(4));

  SUBCASE("pre-run fault injection covers the whole run") {
    Scenario seeded = load_ok(R"({
      "domains": [{"name": "a", "agents": [{"id": "ops"}]}],
      "components": [{"id": "s", "domain": "a", "kind": "sensor"}],
      "script": [{"at": 1, "event": "emit", "component": "s",
                  "node_type": "reading"}]
    })");
    REQUIRE(inject_fault(seeded, "s", 0));
    CHECK_FALSE(inject_fault(seeded, "nobody", 0));
    auto marked = run(seeded);
    REQUIRE(marked);
    const ProvNode* node = marked->federation.store("a")->find_node(
        marked->events[0].produced->text());
    REQUIRE(node);
    CHECK(node->attr_bool(attr::kFaulty) == true);
  }
}

TEST_CASE("rule files wire policy into runs") {
  const auto dir = temp_dir();
  {
    std::ofstream rules(dir / "limit.rules.json");
    rules << R"([{"id": "purpose-limitation", "trigger": ["transfer"],
                  "condition": {"name": "purpose_incompatible"},
                  "action": {"kind": "block",
                             "message": "{entity} was not collected for this"}}])";
  }
  std::ofstream file(dir / "blocked.scenario");
  file << R"({
    "rules": "limit.rules.json",
    "domains": [
      {"name": "src", "agents": [{"id": "ops"}]},
      {"name": "dst", "agents": [{"id": "ops"}]}
    ],
    "components": [{"id": "intake", "domain": "src", "kind": "process"}],
    "script": [
      {"at": 1, "event": "emit", "component": "intake", "node_type": "profile",
       "attributes": {"personal_data": true, "purpose": ["service"]}},
      {"at": 2, "event": "transfer", "entity": "intake", "from": "src",
       "to": "dst", "purposes": ["advertising"]},
      {"at": 3, "event": "transfer", "entity": "intake", "from": "src",
       "to": "dst", "purposes": ["service"]}
    ]
  })";
  file.close();

  auto scenario = load_scenario_file(dir / "blocked.scenario");
  REQUIRE(scenario);
  CHECK_FALSE(scenario->rules.empty());

  auto outcome = run(*scenario);
  REQUIRE(outcome);
  CHECK(outcome->events[0].outcome == "ok");
  CHECK(outcome->events[1].outcome == "blocked");
  CHECK(outcome->events[1].detail.find("purpose-limitation") != std::string::npos);
  REQUIRE(outcome->events[1].verdicts.size() == 1);
  CHECK(outcome->events[1].verdicts[0].outcome == VerdictOutcome::blocked);
  CHECK(outcome->events[2].outcome == "ok");  // compatible purposes pass

  REQUIRE(outcome->alerts.size() == 1);
  CHECK(outcome->alerts[0].domain == "src");
  const ProvNode* alert =
      outcome->federation.store("src")->find_node(outcome->alerts[0].text());
  REQUIRE(alert);
  CHECK(alert->node_type == "policy-alert");

  // The blocked transfer left nothing in the receiving domain; the allowed
  // one landed exactly one alias.
  std::size_t aliases = 0;
  outcome->federation.store("dst")->for_each_record(
      [&](std::size_t, const LogRecord& record) {
        if (record.node() && record.node()->alias_of()) ++aliases;
      });
  CHECK(aliases == 1);

  std::filesystem::remove_all(dir);
}

TEST_CASE("setup failures abort the run with context") {
  auto scenario = load_ok(R"({
    "domains": [{"name": "a", "agents": [{"id": "ops"}]}],
    "components": [{"id": "m", "domain": "a", "kind": "model",
                    "attributes": {"accepted_sources": "not-a-set"}}],
    "script": []
  })");
  auto outcome = run(scenario);
  REQUIRE_FALSE(outcome);
  CHECK(outcome.error().message.rfind("setup:", 0) == 0);
}
