#pragma once
// Deterministic scenario runner. A scenario file declares domains with
// agent rosters, components bound to those domains, an allowed-flow
// declaration, a policy rule file, and a timestamped event script. Running
// a scenario drives the Recorder API event by event — there are no
// back-door store writes — so identical scenarios always export
// byte-identical logs.

#include "decprov/capture.hpp"
#include "decprov/model.hpp"
#include "decprov/policy.hpp"
#include "decprov/query.hpp"
#include "decprov/result.hpp"
#include "decprov/store.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace decprov {

// The component vocabulary. Components are recorded as Agent nodes acting
// on behalf of their domain's first roster agent; model components
// additionally own a "<id>-model" Entity that their activities use.
inline constexpr std::string_view kComponentKinds[] = {
    "sensor", "model", "datastore", "process", "actuator", "human-input"};

struct RosterAgent {
  std::string id;
  std::string node_type = "organization";
  AttrMap attributes;
};

struct DomainSpec {
  std::string name;
  Visibility visibility = Visibility::full;
  std::vector<RosterAgent> agents;
};

struct ComponentSpec {
  std::string id;      // globally unique; also the selector name in scripts
  std::string domain;
  std::string kind;    // one of kComponentKinds
  AttrMap attributes;  // models: attached to the model entity; others: the agent
};

// emit: a component produces a fresh entity from outside the recorded
// graph (sensor reading, human input).
struct EmitEvent {
  std::string component;
  std::string node_type;
  AttrMap attributes;           // on the produced entity
  AttrMap activity_attributes;  // on the producing activity
};

// process: a component consumes selected inputs and produces one output.
// A selector is either a component id (its most recent output, highest
// created_at then highest id text) or an explicit "domain:local" entity id.
struct ProcessEvent {
  std::string component;
  std::vector<std::string> inputs;
  std::string node_type;  // of the produced entity
  AttrMap attributes;
  AttrMap activity_attributes;
};

// transfer: sends an entity across a domain boundary, materializing an
// alias entity on the receiving side.
struct TransferEvent {
  std::string entity;  // selector; component selectors pick from `from` only
  std::string from;
  std::string to;
  std::optional<StringSet> purposes;  // receiver's declared processing purposes
  AttrMap activity_attributes;
};

// inject_fault: from this point in the script, outputs the component
// produces at or after `tick` carry faulty = true.
struct FaultEvent {
  std::string component;
  Tick tick = 0;
};

struct ScriptEvent {
  Tick at = 0;
  std::variant<EmitEvent, ProcessEvent, TransferEvent, FaultEvent> action;
};

struct Scenario {
  std::vector<DomainSpec> domains;
  std::vector<ComponentSpec> components;
  FlowDeclaration flows;
  std::string rules_path;  // as written in the file; empty = no rules
  RuleSet rules;
  std::vector<ScriptEvent> script;
  std::uint64_t seed = 0;  // reserved; no randomness yet
  std::vector<FaultEvent> faults;  // pre-run marks, active for the whole run
};

// Parses and validates scenario text. Relative `rules` and `flows` file
// references are resolved against base_dir (or the working directory when
// empty). Syntax errors carry the line; reference errors name the
// offending script position.
Result<Scenario> load_scenario(const std::string& text,
                               const std::filesystem::path& base_dir = {});
Result<Scenario> load_scenario_file(const std::filesystem::path& path);

// Marks a component faulty from `tick` onward for the next run. A tick
// beyond the script's range is a valid no-op.
Result<void> inject_fault(Scenario& scenario, const std::string& component,
                          Tick tick);

// One script event's fate. outcome is "ok", "blocked", or "error:<Code>".
struct EventRecord {
  Tick at = 0;
  std::string event;    // e.g. "process mA", "transfer ds orgA->orgB"
  std::string outcome;
  std::vector<PolicyVerdict> verdicts;     // concatenated over capture calls
  std::optional<QualifiedId> produced;     // entity created, when any
  std::string detail;                      // block/error message
};

struct RunResult {
  Federation federation;
  std::vector<EventRecord> events;  // exactly one per script event
  std::vector<QualifiedId> alerts;  // alert nodes appended by blocked events
};

Result<RunResult> run(const Scenario& scenario);

}  // namespace decprov
