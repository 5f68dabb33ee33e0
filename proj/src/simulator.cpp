#include "decprov/simulator.hpp"

#include "decprov/json.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <utility>

namespace decprov {

namespace {

using nlohmann::json;

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

Result<void> check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                        const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      return make_error(Errc::parse_error, where + ": unknown field '" + it.key() + "'");
  }
  return {};
}

Result<std::string> required_string(const json& obj, const char* key,
                                    const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_string() ||
      obj[key].get<std::string>().empty())
    return make_error(Errc::parse_error,
                      where + ": '" + key + "' must be a non-empty string");
  return obj[key].get<std::string>();
}

Result<AttrMap> optional_attrs(const json& obj, const char* key,
                               const std::string& where) {
  if (!obj.contains(key)) return AttrMap{};
  auto attrs = attrs_from_json(obj[key]);
  if (!attrs.ok())
    return make_error(Errc::parse_error, where + ": " + attrs.error().message);
  return attrs.take();
}

Result<Tick> required_tick(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number_integer())
    return make_error(Errc::parse_error, where + ": '" + key + "' must be an integer");
  if (obj[key].is_number_unsigned())
    return static_cast<Tick>(obj[key].get<std::uint64_t>());
  const auto value = obj[key].get<std::int64_t>();
  if (value < 0)
    return make_error(Errc::tick_out_of_range,
                      where + ": '" + key + "' must not be negative");
  return static_cast<Tick>(value);
}

bool known_kind(const std::string& kind) {
  for (std::string_view k : kComponentKinds)
    if (kind == k) return true;
  return false;
}

// Selectors with a colon are explicit entity ids and must parse; bare
// names must match a component.
Result<void> check_selector(const std::string& selector,
                            const std::map<std::string, const ComponentSpec*>& components,
                            const std::string& where) {
  if (selector.empty())
    return make_error(Errc::parse_error, where + ": empty selector");
  if (selector.find(':') != std::string::npos) {
    auto id = parse_id(selector);
    if (!id.ok())
      return make_error(Errc::parse_error, where + ": " + id.error().message);
    return {};
  }
  if (!components.count(selector))
    return make_error(Errc::unknown_component,
                      where + ": unknown component '" + selector + "'");
  return {};
}

// ── Runner state ─────────────────────────────────────────────────────────

struct Produced {
  QualifiedId id;
  Tick at = 0;
};

struct Runner {
  const Scenario& scenario;
  Federation federation;
  std::map<std::string, std::unique_ptr<Recorder>> recorders;
  std::map<std::string, const ComponentSpec*> components;
  std::map<std::string, QualifiedId> org_agents;          // domain -> first roster agent
  std::map<std::string, std::vector<Produced>> credits;   // component -> outputs
  std::map<std::string, std::string> produced_by;         // entity text -> component
  std::vector<FaultEvent> active_faults;

  explicit Runner(const Scenario& s) : scenario(s) { active_faults = s.faults; }

  Recorder& recorder(const std::string& domain) { return *recorders.at(domain); }

  bool faulted(const std::string& component, Tick at) const {
    for (const FaultEvent& fault : active_faults)
      if (fault.component == component && at >= fault.tick) return true;
    return false;
  }

  void credit(const std::string& component, const QualifiedId& id, Tick at) {
    credits[component].push_back({id, at});
    produced_by[id.text()] = component;
  }

  // Most recent output: highest created_at, ties by id text.
  Result<QualifiedId> resolve_selector(const std::string& selector,
                                       const std::string& domain_filter) {
    if (selector.find(':') != std::string::npos) {
      auto id = parse_id(selector);
      if (!id.ok()) return id.error();
      return id.take();
    }
    const Produced* best = nullptr;
    auto it = credits.find(selector);
    if (it != credits.end())
      for (const Produced& candidate : it->second) {
        if (!domain_filter.empty() && candidate.id.domain != domain_filter) continue;
        if (!best || candidate.at > best->at ||
            (candidate.at == best->at && best->id.text() < candidate.id.text()))
          best = &candidate;
      }
    if (!best)
      return make_error(Errc::unknown_node,
                        "component '" + selector + "' has no recorded output" +
                            (domain_filter.empty() ? "" : " in " + domain_filter));
    return best->id;
  }

  Result<void> setup() {
    for (const DomainSpec& domain : scenario.domains) {
      auto& rec = recorders[domain.name];
      rec = std::make_unique<Recorder>(federation, domain.name,
                                       scenario.rules.empty() ? nullptr : &scenario.rules,
                                       domain.visibility);
      for (const RosterAgent& agent : domain.agents) {
        auto id = rec->record_agent(agent.id, agent.node_type, agent.attributes);
        if (!id.ok())
          return make_error(id.error().code, "setup: " + id.error().message);
        if (!org_agents.count(domain.name)) org_agents.emplace(domain.name, id.take());
      }
    }
    for (const ComponentSpec& comp : scenario.components) {
      components.emplace(comp.id, &comp);
      Recorder& rec = recorder(comp.domain);
      const bool is_model = comp.kind == "model";
      auto agent = rec.record_agent(comp.id, comp.kind,
                                    is_model ? AttrMap{} : comp.attributes);
      if (!agent.ok())
        return make_error(agent.error().code, "setup: " + agent.error().message);
      if (auto org = org_agents.find(comp.domain); org != org_agents.end())
        if (auto linked = rec.record_delegation(agent.value(), org->second); !linked.ok())
          return make_error(linked.error().code, "setup: " + linked.error().message);
      if (is_model) {
        auto model = rec.record_entity(comp.id + "-model", "model", comp.attributes);
        if (!model.ok())
          return make_error(model.error().code, "setup: " + model.error().message);
        if (auto owned = rec.record_attribution(model.value(), agent.value());
            !owned.ok())
          return make_error(owned.error().code, "setup: " + owned.error().message);
      }
    }
    return {};
  }

  void set_now(Tick at) {
    for (auto& [name, rec] : recorders) rec->set_now(at);
  }

  // Applies one capture-call result to the event record. Returns true to
  // continue with the event's remaining calls.
  template <typename T>
  bool absorb(const Result<T>& step, Recorder& rec, EventRecord& record) {
    for (const PolicyVerdict& verdict : rec.last_verdicts())
      record.verdicts.push_back(verdict);
    if (step.ok()) return true;
    record.detail = step.error().message;
    record.outcome = step.error().code == Errc::policy_blocked
                         ? "blocked"
                         : std::string("error:") + errc_name(step.error().code);
    return false;
  }

  void run_emit(const EmitEvent& event, Tick at, EventRecord& record) {
    const ComponentSpec& comp = *components.at(event.component);
    Recorder& rec = recorder(comp.domain);
    auto activity = rec.begin_activity(QualifiedId{comp.domain, comp.id}, comp.kind,
                                       event.activity_attributes);
    if (!absorb(activity, rec, record)) return;
    AttrMap attrs = event.attributes;
    if (faulted(comp.id, at)) attrs[std::string(attr::kFaulty)] = AttrValue{true};
    auto entity = rec.record_generation(activity.value(), event.node_type, attrs);
    if (!absorb(entity, rec, record)) return;
    credit(comp.id, entity.value(), at);
    record.produced = entity.take();
  }

  void run_process(const ProcessEvent& event, Tick at, EventRecord& record) {
    const ComponentSpec& comp = *components.at(event.component);
    Recorder& rec = recorder(comp.domain);

    std::vector<QualifiedId> inputs;
    for (const std::string& selector : event.inputs) {
      auto input = resolve_selector(selector, "");
      if (!absorb(input, rec, record)) return;
      inputs.push_back(input.take());
    }

    AttrMap activity_attrs = event.activity_attributes;
    const bool is_model = comp.kind == "model";
    if (is_model)
      activity_attrs.emplace(std::string(attr::kAutomatedDecision), AttrValue{true});
    auto activity =
        rec.begin_activity(QualifiedId{comp.domain, comp.id}, comp.kind, activity_attrs);
    if (!absorb(activity, rec, record)) return;

    if (is_model) {
      // The model itself is an input; screening rules key on its presence.
      QualifiedId model{comp.domain, comp.id + "-model"};
      if (!absorb(rec.record_use(activity.value(), model), rec, record)) return;
    }
    for (const QualifiedId& input : inputs)
      if (!absorb(rec.record_use(activity.value(), input), rec, record)) return;

    AttrMap attrs = event.attributes;
    if (faulted(comp.id, at)) attrs[std::string(attr::kFaulty)] = AttrValue{true};
    auto entity = rec.record_generation(activity.value(), event.node_type, attrs);
    if (!absorb(entity, rec, record)) return;
    if (!inputs.empty())
      if (!absorb(rec.record_derivation(entity.value(), inputs), rec, record)) return;

    credit(comp.id, entity.value(), at);
    record.produced = entity.take();
  }

  void run_transfer(const TransferEvent& event, Tick at, EventRecord& record) {
    Recorder& sender = recorder(event.from);
    Recorder& receiver = recorder(event.to);

    auto entity = resolve_selector(event.entity, event.from);
    if (!absorb(entity, sender, record)) return;

    auto sender_agent = org_agents.find(event.from);
    auto receiver_agent = org_agents.find(event.to);
    if (sender_agent == org_agents.end() || receiver_agent == org_agents.end()) {
      record.outcome = std::string("error:") + errc_name(Errc::validation_failed);
      record.detail = "transfer requires an agent roster on both domains";
      return;
    }

    TransferOptions options;
    options.processing_purposes = event.purposes;
    options.activity_attributes = event.activity_attributes;
    auto receipt = Recorder::record_transfer(sender, receiver, entity.value(),
                                             sender_agent->second,
                                             receiver_agent->second, options);
    if (!absorb(receipt, sender, record)) return;

    // The alias inherits the origin component's credit so later selectors
    // in the receiving domain find it.
    if (auto origin = produced_by.find(entity.value().text());
        origin != produced_by.end())
      credit(origin->second, receipt.value().alias_entity, at);
    record.produced = receipt.take().alias_entity;
  }

  Result<RunResult> run() {
    if (auto ready = setup(); !ready.ok()) return ready.error();

    RunResult result;
    for (const ScriptEvent& script_event : scenario.script) {
      set_now(script_event.at);
      EventRecord record;
      record.at = script_event.at;
      record.outcome = "ok";

      if (const auto* emit = std::get_if<EmitEvent>(&script_event.action)) {
        record.event = "emit " + emit->component;
        run_emit(*emit, script_event.at, record);
      } else if (const auto* process = std::get_if<ProcessEvent>(&script_event.action)) {
        record.event = "process " + process->component;
        run_process(*process, script_event.at, record);
      } else if (const auto* transfer =
                     std::get_if<TransferEvent>(&script_event.action)) {
        record.event =
            "transfer " + transfer->entity + " " + transfer->from + "->" + transfer->to;
        run_transfer(*transfer, script_event.at, record);
      } else if (const auto* fault = std::get_if<FaultEvent>(&script_event.action)) {
        record.event =
            "inject_fault " + fault->component + "@" + std::to_string(fault->tick);
        active_faults.push_back(*fault);
      }

      if (record.outcome == "blocked") {
        const std::string domain =
            std::get_if<TransferEvent>(&script_event.action)
                ? std::get_if<TransferEvent>(&script_event.action)->from
                : components.at(event_component(script_event))->domain;
        if (auto alert = recorder(domain).last_alert())
          result.alerts.push_back(*alert);
      }
      result.events.push_back(std::move(record));
    }
    result.federation = std::move(federation);
    return result;
  }

  static std::string event_component(const ScriptEvent& script_event) {
    if (const auto* emit = std::get_if<EmitEvent>(&script_event.action))
      return emit->component;
    if (const auto* process = std::get_if<ProcessEvent>(&script_event.action))
      return process->component;
    if (const auto* fault = std::get_if<FaultEvent>(&script_event.action))
      return fault->component;
    return {};
  }
};

// ── Scenario parsing ─────────────────────────────────────────────────────

Result<DomainSpec> parse_domain(const json& obj, const std::string& where) {
  if (!obj.is_object())
    return make_error(Errc::parse_error, where + ": must be an object");
  if (auto keys = check_keys(obj, {"name", "visibility", "agents"}, where); !keys.ok())
    return keys.error();
  DomainSpec domain;
  auto name = required_string(obj, "name", where);
  if (!name.ok()) return name.error();
  domain.name = name.take();
  if (domain.name == kRegulatorDomain)
    return make_error(Errc::parse_error,
                      where + ": domain name '" + domain.name + "' is reserved");
  if (auto checked = mint_id(domain.name, "x"); !checked.ok())
    return make_error(Errc::parse_error, where + ": " + checked.error().message);
  if (obj.contains("visibility")) {
    if (!obj["visibility"].is_string())
      return make_error(Errc::parse_error, where + ": 'visibility' must be a string");
    auto visibility = visibility_from(obj["visibility"].get<std::string>());
    if (!visibility)
      return make_error(Errc::parse_error,
                        where + ": unknown visibility '" +
                            obj["visibility"].get<std::string>() + "'");
    domain.visibility = *visibility;
  }
  if (obj.contains("agents")) {
    if (!obj["agents"].is_array())
      return make_error(Errc::parse_error, where + ": 'agents' must be an array");
    std::size_t index = 0;
    for (const json& entry : obj["agents"]) {
      const std::string agent_where =
          where + ".agents[" + std::to_string(index++) + "]";
      if (!entry.is_object())
        return make_error(Errc::parse_error, agent_where + ": must be an object");
      if (auto keys = check_keys(entry, {"id", "type", "attributes"}, agent_where);
          !keys.ok())
        return keys.error();
      RosterAgent agent;
      auto id = required_string(entry, "id", agent_where);
      if (!id.ok()) return id.error();
      agent.id = id.take();
      if (auto checked = mint_id(domain.name, agent.id); !checked.ok())
        return make_error(Errc::parse_error,
                          agent_where + ": " + checked.error().message);
      if (entry.contains("type")) {
        auto type = required_string(entry, "type", agent_where);
        if (!type.ok()) return type.error();
        agent.node_type = type.take();
      }
      auto attrs = optional_attrs(entry, "attributes", agent_where);
      if (!attrs.ok()) return attrs.error();
      agent.attributes = attrs.take();
      for (const RosterAgent& existing : domain.agents)
        if (existing.id == agent.id)
          return make_error(Errc::parse_error,
                            agent_where + ": duplicate agent '" + agent.id + "'");
      domain.agents.push_back(std::move(agent));
    }
  }
  return domain;
}

Result<ComponentSpec> parse_component(const json& obj, const Scenario& scenario,
                                      const std::string& where) {
  if (!obj.is_object())
    return make_error(Errc::parse_error, where + ": must be an object");
  if (auto keys = check_keys(obj, {"id", "domain", "kind", "attributes"}, where);
      !keys.ok())
    return keys.error();
  ComponentSpec comp;
  auto id = required_string(obj, "id", where);
  if (!id.ok()) return id.error();
  comp.id = id.take();
  auto domain = required_string(obj, "domain", where);
  if (!domain.ok()) return domain.error();
  comp.domain = domain.take();
  auto kind = required_string(obj, "kind", where);
  if (!kind.ok()) return kind.error();
  comp.kind = kind.take();

  const DomainSpec* home = nullptr;
  for (const DomainSpec& candidate : scenario.domains)
    if (candidate.name == comp.domain) home = &candidate;
  if (!home)
    return make_error(Errc::unknown_domain,
                      where + ": unknown domain '" + comp.domain + "'");
  if (!known_kind(comp.kind))
    return make_error(Errc::parse_error,
                      where + ": unknown component kind '" + comp.kind + "'");
  if (auto checked = mint_id(comp.domain, comp.id); !checked.ok())
    return make_error(Errc::parse_error, where + ": " + checked.error().message);
  for (const ComponentSpec& existing : scenario.components)
    if (existing.id == comp.id)
      return make_error(Errc::parse_error,
                        where + ": duplicate component '" + comp.id + "'");
  for (const RosterAgent& agent : home->agents)
    if (agent.id == comp.id)
      return make_error(Errc::parse_error,
                        where + ": component '" + comp.id +
                            "' collides with a roster agent");
  auto attrs = optional_attrs(obj, "attributes", where);
  if (!attrs.ok()) return attrs.error();
  comp.attributes = attrs.take();
  return comp;
}

Result<ScriptEvent> parse_event(const json& obj, const Scenario& scenario,
                                const std::map<std::string, const ComponentSpec*>& comps,
                                const std::string& where) {
  if (!obj.is_object())
    return make_error(Errc::parse_error, where + ": must be an object");
  ScriptEvent event;
  auto at = required_tick(obj, "at", where);
  if (!at.ok()) return at.error();
  event.at = at.take();
  auto kind = required_string(obj, "event", where);
  if (!kind.ok()) return kind.error();

  auto known_component = [&](const std::string& id) -> Result<void> {
    if (!comps.count(id))
      return make_error(Errc::unknown_component,
                        where + ": unknown component '" + id + "'");
    return {};
  };
  auto known_domain = [&](const std::string& name) -> Result<void> {
    for (const DomainSpec& domain : scenario.domains)
      if (domain.name == name) return {};
    return make_error(Errc::unknown_domain, where + ": unknown domain '" + name + "'");
  };

  if (kind.value() == "emit") {
    if (auto keys = check_keys(
            obj, {"at", "event", "component", "node_type", "attributes",
                  "activity_attributes"},
            where);
        !keys.ok())
      return keys.error();
    EmitEvent emit;
    auto component = required_string(obj, "component", where);
    if (!component.ok()) return component.error();
    emit.component = component.take();
    if (auto checked = known_component(emit.component); !checked.ok())
      return checked.error();
    auto node_type = required_string(obj, "node_type", where);
    if (!node_type.ok()) return node_type.error();
    emit.node_type = node_type.take();
    auto attrs = optional_attrs(obj, "attributes", where);
    if (!attrs.ok()) return attrs.error();
    emit.attributes = attrs.take();
    auto activity_attrs = optional_attrs(obj, "activity_attributes", where);
    if (!activity_attrs.ok()) return activity_attrs.error();
    emit.activity_attributes = activity_attrs.take();
    event.action = std::move(emit);
    return event;
  }

  if (kind.value() == "process") {
    if (auto keys = check_keys(
            obj, {"at", "event", "component", "inputs", "node_type", "attributes",
                  "activity_attributes"},
            where);
        !keys.ok())
      return keys.error();
    ProcessEvent process;
    auto component = required_string(obj, "component", where);
    if (!component.ok()) return component.error();
    process.component = component.take();
    if (auto checked = known_component(process.component); !checked.ok())
      return checked.error();
    if (obj.contains("inputs")) {
      if (!obj["inputs"].is_array())
        return make_error(Errc::parse_error, where + ": 'inputs' must be an array");
      for (const json& entry : obj["inputs"]) {
        if (!entry.is_string())
          return make_error(Errc::parse_error, where + ": selectors must be strings");
        process.inputs.push_back(entry.get<std::string>());
        if (auto checked = check_selector(process.inputs.back(), comps, where);
            !checked.ok())
          return checked.error();
      }
    }
    auto node_type = required_string(obj, "node_type", where);
    if (!node_type.ok()) return node_type.error();
    process.node_type = node_type.take();
    auto attrs = optional_attrs(obj, "attributes", where);
    if (!attrs.ok()) return attrs.error();
    process.attributes = attrs.take();
    auto activity_attrs = optional_attrs(obj, "activity_attributes", where);
    if (!activity_attrs.ok()) return activity_attrs.error();
    process.activity_attributes = activity_attrs.take();
    event.action = std::move(process);
    return event;
  }

  if (kind.value() == "transfer") {
    if (auto keys = check_keys(
            obj, {"at", "event", "entity", "from", "to", "purposes",
                  "activity_attributes"},
            where);
        !keys.ok())
      return keys.error();
    TransferEvent transfer;
    auto entity = required_string(obj, "entity", where);
    if (!entity.ok()) return entity.error();
    transfer.entity = entity.take();
    if (auto checked = check_selector(transfer.entity, comps, where); !checked.ok())
      return checked.error();
    auto from = required_string(obj, "from", where);
    if (!from.ok()) return from.error();
    transfer.from = from.take();
    if (auto checked = known_domain(transfer.from); !checked.ok())
      return checked.error();
    auto to = required_string(obj, "to", where);
    if (!to.ok()) return to.error();
    transfer.to = to.take();
    if (auto checked = known_domain(transfer.to); !checked.ok())
      return checked.error();
    if (obj.contains("purposes")) {
      if (!obj["purposes"].is_array())
        return make_error(Errc::parse_error, where + ": 'purposes' must be an array");
      StringSet purposes;
      for (const json& entry : obj["purposes"]) {
        if (!entry.is_string())
          return make_error(Errc::parse_error, where + ": purposes must be strings");
        purposes.insert(entry.get<std::string>());
      }
      transfer.purposes = std::move(purposes);
    }
    auto activity_attrs = optional_attrs(obj, "activity_attributes", where);
    if (!activity_attrs.ok()) return activity_attrs.error();
    transfer.activity_attributes = activity_attrs.take();
    event.action = std::move(transfer);
    return event;
  }

  if (kind.value() == "inject_fault") {
    if (auto keys = check_keys(obj, {"at", "event", "component", "tick"}, where);
        !keys.ok())
      return keys.error();
    FaultEvent fault;
    auto component = required_string(obj, "component", where);
    if (!component.ok()) return component.error();
    fault.component = component.take();
    if (auto checked = known_component(fault.component); !checked.ok())
      return checked.error();
    auto tick = required_tick(obj, "tick", where);
    if (!tick.ok()) return tick.error();
    fault.tick = tick.take();
    event.action = std::move(fault);
    return event;
  }

  return make_error(Errc::parse_error,
                    where + ": unknown event '" + kind.value() + "'");
}

}  // namespace

Result<Scenario> load_scenario(const std::string& text,
                               const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    return make_error(Errc::parse_error, "line " +
                                             std::to_string(line_of_byte(text, e.byte)) +
                                             ": " + e.what());
  }
  if (!doc.is_object())
    return make_error(Errc::parse_error, "scenario must be a JSON object");
  if (auto keys = check_keys(
          doc, {"domains", "components", "flows", "rules", "script", "seed"},
          "scenario");
      !keys.ok())
    return keys.error();

  Scenario scenario;

  if (!doc.contains("domains") || !doc["domains"].is_array())
    return make_error(Errc::parse_error, "scenario: 'domains' must be an array");
  std::size_t index = 0;
  for (const json& entry : doc["domains"]) {
    auto domain = parse_domain(entry, "domains[" + std::to_string(index++) + "]");
    if (!domain.ok()) return domain.error();
    for (const DomainSpec& existing : scenario.domains)
      if (existing.name == domain.value().name)
        return make_error(Errc::parse_error,
                          "duplicate domain '" + domain.value().name + "'");
    scenario.domains.push_back(domain.take());
  }

  if (doc.contains("components")) {
    if (!doc["components"].is_array())
      return make_error(Errc::parse_error, "scenario: 'components' must be an array");
    index = 0;
    for (const json& entry : doc["components"]) {
      auto comp =
          parse_component(entry, scenario, "components[" + std::to_string(index++) + "]");
      if (!comp.ok()) return comp.error();
      scenario.components.push_back(comp.take());
    }
  }

  if (doc.contains("flows")) {
    if (doc["flows"].is_string()) {
      std::filesystem::path path = doc["flows"].get<std::string>();
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      auto flows = load_flow_declaration(path);
      if (!flows.ok()) return flows.error();
      scenario.flows = flows.take();
    } else {
      auto flows = load_flow_declaration(doc["flows"]);
      if (!flows.ok()) return flows.error();
      scenario.flows = flows.take();
    }
  }

  if (doc.contains("rules") && !doc["rules"].is_null()) {
    if (!doc["rules"].is_string())
      return make_error(Errc::parse_error, "scenario: 'rules' must be a file path");
    scenario.rules_path = doc["rules"].get<std::string>();
    if (!scenario.rules_path.empty()) {
      std::filesystem::path path = scenario.rules_path;
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      auto rules = RuleSet::load_file(path);
      if (!rules.ok()) return rules.error();
      scenario.rules = rules.take();
    }
  }

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned())
      return make_error(Errc::parse_error,
                        "scenario: 'seed' must be a non-negative integer");
    scenario.seed = doc["seed"].get<std::uint64_t>();
  }

  if (!doc.contains("script") || !doc["script"].is_array())
    return make_error(Errc::parse_error, "scenario: 'script' must be an array");
  std::map<std::string, const ComponentSpec*> comps;
  for (const ComponentSpec& comp : scenario.components) comps.emplace(comp.id, &comp);
  index = 0;
  for (const json& entry : doc["script"]) {
    auto event =
        parse_event(entry, scenario, comps, "script[" + std::to_string(index) + "]");
    if (!event.ok()) return event.error();
    if (index > 0 && event.value().at < scenario.script.back().at)
      return make_error(Errc::non_monotone_timestamps,
                        "script[" + std::to_string(index) + "]: timestamp " +
                            std::to_string(event.value().at) + " precedes script[" +
                            std::to_string(index - 1) + "] at " +
                            std::to_string(scenario.script.back().at));
    scenario.script.push_back(event.take());
    ++index;
  }

  return scenario;
}

Result<Scenario> load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    return make_error(Errc::io_error, "cannot open scenario file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_scenario(buffer.str(), path.parent_path());
}

Result<void> inject_fault(Scenario& scenario, const std::string& component, Tick tick) {
  bool known = false;
  for (const ComponentSpec& comp : scenario.components)
    if (comp.id == component) known = true;
  if (!known)
    return make_error(Errc::unknown_component, "unknown component '" + component + "'");
  scenario.faults.push_back(FaultEvent{component, tick});
  return {};
}

Result<RunResult> run(const Scenario& scenario) {
  Runner runner(scenario);
  return runner.run();
}

}  // namespace decprov
