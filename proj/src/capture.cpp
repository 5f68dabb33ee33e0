#include "decprov/capture.hpp"

#include <deque>
#include <map>
#include <unordered_set>
#include <utility>

namespace decprov {

namespace {

AttrMap at_attr(Tick now) {
  AttrMap attrs;
  attrs.emplace("at", AttrValue{TimeVal{now}});
  return attrs;
}

ProvEdge make_edge(const QualifiedId& source, const QualifiedId& target, EdgeKind kind,
                   Tick now) {
  ProvEdge edge;
  edge.source = source;
  edge.target = target;
  edge.kind = kind;
  edge.attributes = at_attr(now);
  return edge;
}

}  // namespace

Recorder::Recorder(Federation& federation, std::string domain, const RuleSet* rules,
                   Visibility visibility)
    : federation_(federation),
      domain_(std::move(domain)),
      store_(federation.add_store(domain_, visibility)),
      rules_(rules) {}

QualifiedId Recorder::mint_local(const char* prefix, std::size_t& counter) const {
  for (;;) {
    ++counter;
    QualifiedId id{domain_, prefix + std::to_string(counter)};
    if (!store_.find_node(id.text())) return id;
  }
}

Result<const ProvNode*> Recorder::require_local(const QualifiedId& id, NodeKind kind,
                                                const char* what) const {
  const ProvNode* node = store_.find_node(id.text());
  if (!node)
    return make_error(Errc::unknown_node, std::string(what) + " " + id.text() +
                                              " not found in store '" + domain_ + "'");
  if (node->kind != kind)
    return make_error(Errc::kind_constraint_violation,
                      std::string(what) + " " + id.text() + " has kind " +
                          std::string(to_string(node->kind)) + ", expected " +
                          std::string(to_string(kind)));
  return node;
}

Result<void> Recorder::stage_checks(const Staged& staged) const {
  std::map<std::string, NodeKind> staged_kinds;
  for (const ProvNode& node : staged.nodes) {
    if (auto checked = store_.check(node); !checked.ok()) return checked;
    if (!staged_kinds.emplace(node.id.text(), node.kind).second)
      return make_error(Errc::validation_failed,
                        "record batch stages id " + node.id.text() + " twice");
  }
  auto kind_of = [&](const QualifiedId& id) -> std::optional<NodeKind> {
    auto it = staged_kinds.find(id.text());
    if (it != staged_kinds.end()) return it->second;
    if (const ProvStore* store = federation_.store(id.domain))
      if (const ProvNode* node = store->find_node(id.text())) return node->kind;
    return std::nullopt;
  };
  for (const ProvEdge& edge : staged.edges) {
    auto source_kind = kind_of(edge.source);
    if (!source_kind)
      return make_error(Errc::dangling_reference,
                        "edge source " + edge.source.text() + " is unknown");
    auto target_kind = kind_of(edge.target);
    if (target_kind) {
      if (auto checked = validate_edge(edge, *source_kind, *target_kind); !checked.ok())
        return checked;
    } else if (edge.target.domain == domain_) {
      return make_error(Errc::dangling_reference,
                        "edge target " + edge.target.text() + " is unknown");
    } else if (*source_kind != required_source_kind(edge.kind)) {
      return make_error(Errc::kind_constraint_violation,
                        std::string(to_string(edge.kind)) + " requires source kind " +
                            std::string(to_string(required_source_kind(edge.kind))));
    }
  }
  return {};
}

Result<void> Recorder::commit(Staged staged) {
  for (ProvNode& node : staged.nodes)
    if (auto receipt = store_.append(std::move(node)); !receipt.ok())
      return receipt.error();
  for (ProvEdge& edge : staged.edges)
    if (auto receipt = store_.append(std::move(edge)); !receipt.ok())
      return receipt.error();
  return {};
}

void Recorder::append_alert(const std::string& rule_id, const std::string& summary,
                            const std::string& explanation) {
  ProvNode alert;
  alert.id = mint_local("alert-", alert_counter_);
  alert.kind = NodeKind::Entity;
  alert.node_type = std::string(kAlertNodeType);
  alert.created_at = now_;
  alert.attributes.emplace("rule_id", AttrValue{rule_id});
  alert.attributes.emplace("summary", AttrValue{summary});
  if (!explanation.empty()) alert.attributes.emplace("explanation", AttrValue{explanation});
  if (auto receipt = store_.append(std::move(alert)); receipt.ok())
    last_alert_ = QualifiedId{domain_, "alert-" + std::to_string(alert_counter_)};
}

Result<void> Recorder::run_policy(CaptureEvent kind, std::vector<Staged*> staged,
                                  const std::vector<const ProvNode*>& subjects,
                                  const std::vector<QualifiedId>& unresolved_subjects,
                                  const ProvNode* activity,
                                  std::optional<StringSet> processing_purposes,
                                  const std::string& summary) {
  last_verdicts_.clear();
  last_alert_.reset();
  if (!rules_ || rules_->empty()) return {};

  PolicyEvent event;
  event.kind = kind;
  event.now = now_;
  event.federation = &federation_;
  event.subjects = subjects;
  event.unresolved_subjects = unresolved_subjects;
  event.activity = activity;
  event.processing_purposes = std::move(processing_purposes);

  EvaluationResult result = evaluate(*rules_, event);
  last_verdicts_ = result.verdicts;
  if (result.blocked) {
    append_alert(result.blocked_rule_id, summary, result.blocked_explanation);
    return make_error(Errc::policy_blocked,
                      "rule " + result.blocked_rule_id + ": " + result.blocked_explanation);
  }
  for (const Annotation& annotation : result.annotations)
    for (Staged* batch : staged) {
      for (ProvNode& node : batch->nodes)
        node.attributes[annotation.key] = annotation.value;
      for (ProvEdge& edge : batch->edges)
        edge.attributes[annotation.key] = annotation.value;
    }
  return {};
}

bool Recorder::same_tick_reaches(const QualifiedId& from, const QualifiedId& needle,
                                 Tick tick) const {
  if (from == needle) return true;
  const std::string target = needle.text();
  std::unordered_set<std::string> visited{from.text()};
  std::deque<QualifiedId> queue{from};
  while (!queue.empty()) {
    QualifiedId u = queue.front();
    queue.pop_front();
    const ProvStore* store = federation_.store(u.domain);
    const ProvNode* node = store ? store->find_node(u.text()) : nullptr;
    if (!node || node->created_at != tick) continue;
    for (const ProvEdge* e : store->out_edges(u.text())) {
      if (e->kind != EdgeKind::Used && e->kind != EdgeKind::WasGeneratedBy &&
          e->kind != EdgeKind::WasDerivedFrom)
        continue;
      if (e->target.text() == target) return true;
      if (visited.insert(e->target.text()).second) queue.push_back(e->target);
    }
  }
  return false;
}

// ── Node primitives ──────────────────────────────────────────────────────

Result<QualifiedId> Recorder::record_agent(std::string local, std::string node_type,
                                           AttrMap attributes) {
  QualifiedId id;
  if (local.empty()) {
    id = mint_local("agent-", agent_counter_);
  } else {
    auto minted = mint_id(domain_, std::move(local));
    if (!minted.ok()) return minted.error();
    id = minted.take();
  }
  Staged staged;
  staged.nodes.push_back(
      ProvNode{id, NodeKind::Agent, std::move(node_type), std::move(attributes), now_});
  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  if (auto policy = run_policy(CaptureEvent::node_append, {&staged}, {}, {}, nullptr,
                               std::nullopt, "append of agent " + id.text());
      !policy.ok())
    return policy.error();
  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  if (auto committed = commit(std::move(staged)); !committed.ok())
    return committed.error();
  return id;
}

Result<QualifiedId> Recorder::record_entity(std::string local, std::string node_type,
                                            AttrMap attributes) {
  QualifiedId id;
  if (local.empty()) {
    id = mint_local("ent-", entity_counter_);
  } else {
    auto minted = mint_id(domain_, std::move(local));
    if (!minted.ok()) return minted.error();
    id = minted.take();
  }
  Staged staged;
  staged.nodes.push_back(
      ProvNode{id, NodeKind::Entity, std::move(node_type), std::move(attributes), now_});
  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  if (auto policy = run_policy(CaptureEvent::node_append, {&staged},
                               {&staged.nodes.front()}, {}, nullptr, std::nullopt,
                               "append of entity " + id.text());
      !policy.ok())
    return policy.error();
  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  if (auto committed = commit(std::move(staged)); !committed.ok())
    return committed.error();
  return id;
}

// ── Activity lifecycle ───────────────────────────────────────────────────

Result<QualifiedId> Recorder::begin_activity(const QualifiedId& agent,
                                             std::string node_type, AttrMap attributes) {
  auto agent_node = require_local(agent, NodeKind::Agent, "agent");
  if (!agent_node.ok()) return agent_node.error();

  const QualifiedId id = mint_local("act-", activity_counter_);
  Staged staged;
  staged.nodes.push_back(
      ProvNode{id, NodeKind::Activity, std::move(node_type), std::move(attributes), now_});
  staged.edges.push_back(make_edge(id, agent, EdgeKind::WasAssociatedWith, now_));

  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  if (auto policy = run_policy(CaptureEvent::node_append, {&staged}, {}, {},
                               &staged.nodes.front(), std::nullopt,
                               "append of activity " + id.text());
      !policy.ok())
    return policy.error();
  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  if (auto committed = commit(std::move(staged)); !committed.ok())
    return committed.error();
  return id;
}

Result<QualifiedId> Recorder::begin_activity(const AgentSpec& agent,
                                             std::string node_type, AttrMap attributes) {
  auto agent_id = mint_id(domain_, agent.local);
  if (!agent_id.ok()) return agent_id.error();

  if (const ProvNode* existing = store_.find_node(agent_id.value().text())) {
    if (existing->kind != NodeKind::Agent)
      return make_error(Errc::kind_constraint_violation,
                        agent_id.value().text() + " exists with kind " +
                            std::string(to_string(existing->kind)) + ", expected Agent");
    return begin_activity(agent_id.value(), std::move(node_type), std::move(attributes));
  }

  const QualifiedId id = mint_local("act-", activity_counter_);
  Staged staged;
  staged.nodes.push_back(ProvNode{agent_id.value(), NodeKind::Agent, agent.node_type,
                                  agent.attributes, now_});
  staged.nodes.push_back(
      ProvNode{id, NodeKind::Activity, std::move(node_type), std::move(attributes), now_});
  staged.edges.push_back(make_edge(id, agent_id.value(), EdgeKind::WasAssociatedWith, now_));

  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  if (auto policy = run_policy(CaptureEvent::node_append, {&staged}, {}, {},
                               &staged.nodes.back(), std::nullopt,
                               "append of activity " + id.text());
      !policy.ok())
    return policy.error();
  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  if (auto committed = commit(std::move(staged)); !committed.ok())
    return committed.error();
  return id;
}

Result<QualifiedId> Recorder::record_generation(const QualifiedId& activity,
                                                std::string node_type,
                                                AttrMap attributes) {
  auto act = require_local(activity, NodeKind::Activity, "activity");
  if (!act.ok()) return act.error();
  if (now_ < act.value()->created_at)
    return make_error(Errc::temporal_violation,
                      "generation at tick " + std::to_string(now_) +
                          " precedes activity " + activity.text() + " begun at tick " +
                          std::to_string(act.value()->created_at));

  // Inputs the activity has consumed so far are what generation-time rules
  // screen (an expired or ill-gotten input taints the output).
  std::vector<const ProvNode*> inputs;
  std::vector<QualifiedId> unresolved;
  for (const ProvEdge* e : store_.out_edges(activity.text())) {
    if (e->kind != EdgeKind::Used) continue;
    Resolution res = federation_.resolve(e->target, kRegulatorDomain);
    if (const ProvNode* const* node = std::get_if<const ProvNode*>(&res))
      inputs.push_back(*node);
    else
      unresolved.push_back(e->target);
  }

  const QualifiedId id = mint_local("ent-", entity_counter_);
  Staged staged;
  staged.nodes.push_back(
      ProvNode{id, NodeKind::Entity, std::move(node_type), std::move(attributes), now_});
  staged.edges.push_back(make_edge(id, activity, EdgeKind::WasGeneratedBy, now_));

  std::optional<StringSet> purposes;
  if (const StringSet* declared = act.value()->attr_set(attr::kPurpose))
    purposes = *declared;

  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  if (auto policy = run_policy(CaptureEvent::generation, {&staged}, inputs, unresolved,
                               act.value(), std::move(purposes),
                               "generation of " + id.text() + " by " + activity.text());
      !policy.ok())
    return policy.error();
  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  if (auto committed = commit(std::move(staged)); !committed.ok())
    return committed.error();
  return id;
}

Result<void> Recorder::record_use(const QualifiedId& activity, const QualifiedId& entity) {
  auto act = require_local(activity, NodeKind::Activity, "activity");
  if (!act.ok()) return act.error();

  const ProvNode* entity_node = nullptr;
  std::vector<QualifiedId> unresolved;
  if (entity.domain == domain_) {
    auto local = require_local(entity, NodeKind::Entity, "entity");
    if (!local.ok()) return local.error();
    entity_node = local.value();
  } else {
    Resolution res = federation_.resolve(entity, kRegulatorDomain);
    if (const ProvNode* const* node = std::get_if<const ProvNode*>(&res)) {
      if ((*node)->kind != NodeKind::Entity)
        return make_error(Errc::kind_constraint_violation,
                          "used requires an Entity target, " + entity.text() + " is " +
                              std::string(to_string((*node)->kind)));
      entity_node = *node;
    } else {
      unresolved.push_back(entity);  // foreign reference, resolved lazily
    }
  }

  if (entity_node) {
    if (entity_node->created_at > act.value()->created_at)
      return make_error(Errc::temporal_violation,
                        "activity " + activity.text() + " (tick " +
                            std::to_string(act.value()->created_at) +
                            ") cannot use entity " + entity.text() +
                            " created at tick " +
                            std::to_string(entity_node->created_at));
    if (entity_node->created_at == act.value()->created_at &&
        same_tick_reaches(entity, activity, act.value()->created_at))
      return make_error(Errc::temporal_violation,
                        "use of " + entity.text() + " by " + activity.text() +
                            " would close a same-tick cycle");
  }

  Staged staged;
  staged.edges.push_back(make_edge(activity, entity, EdgeKind::Used, now_));

  std::optional<StringSet> purposes;
  if (const StringSet* declared = act.value()->attr_set(attr::kPurpose))
    purposes = *declared;

  std::vector<const ProvNode*> subjects;
  if (entity_node) subjects.push_back(entity_node);

  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  if (auto policy = run_policy(CaptureEvent::use, {&staged}, subjects, unresolved,
                               act.value(), std::move(purposes),
                               "use of " + entity.text() + " by " + activity.text());
      !policy.ok())
    return policy.error();
  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  return commit(std::move(staged));
}

Result<void> Recorder::record_derivation(const QualifiedId& derived,
                                         const std::vector<QualifiedId>& sources) {
  auto derived_node = require_local(derived, NodeKind::Entity, "derived entity");
  if (!derived_node.ok()) return derived_node.error();
  const Tick derived_at = derived_node.value()->created_at;

  Staged staged;
  std::vector<const ProvNode*> subjects;
  std::vector<QualifiedId> unresolved;
  std::string summary = "derivation of " + derived.text() + " from";
  for (const QualifiedId& source : sources) {
    const ProvNode* source_node = nullptr;
    if (source.domain == domain_) {
      auto local = require_local(source, NodeKind::Entity, "source entity");
      if (!local.ok()) return local.error();
      source_node = local.value();
    } else {
      Resolution res = federation_.resolve(source, kRegulatorDomain);
      if (const ProvNode* const* node = std::get_if<const ProvNode*>(&res)) {
        if ((*node)->kind != NodeKind::Entity)
          return make_error(Errc::kind_constraint_violation,
                            "wasDerivedFrom requires an Entity source, " +
                                source.text() + " is " +
                                std::string(to_string((*node)->kind)));
        source_node = *node;
      } else {
        unresolved.push_back(source);
      }
    }
    if (source_node) {
      if (source_node->created_at > derived_at)
        return make_error(Errc::temporal_violation,
                          "derivation of " + derived.text() + " (tick " +
                              std::to_string(derived_at) + ") from " + source.text() +
                              " created later (tick " +
                              std::to_string(source_node->created_at) + ")");
      if (source_node->created_at == derived_at &&
          same_tick_reaches(source, derived, derived_at))
        return make_error(Errc::temporal_violation,
                          "derivation of " + derived.text() + " from " + source.text() +
                              " would close a same-tick cycle");
      subjects.push_back(source_node);
    }
    staged.edges.push_back(make_edge(derived, source, EdgeKind::WasDerivedFrom, now_));
    summary += " " + source.text();
  }

  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  if (auto policy = run_policy(CaptureEvent::derivation, {&staged}, subjects, unresolved,
                               nullptr, std::nullopt, summary);
      !policy.ok())
    return policy.error();
  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  return commit(std::move(staged));
}

// ── Structural relations ─────────────────────────────────────────────────

Result<void> Recorder::record_attribution(const QualifiedId& entity,
                                          const QualifiedId& agent) {
  if (auto checked = require_local(entity, NodeKind::Entity, "entity"); !checked.ok())
    return checked.error();
  Staged staged;
  staged.edges.push_back(make_edge(entity, agent, EdgeKind::WasAttributedTo, now_));
  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  return commit(std::move(staged));
}

Result<void> Recorder::record_delegation(const QualifiedId& agent,
                                         const QualifiedId& principal) {
  if (auto checked = require_local(agent, NodeKind::Agent, "agent"); !checked.ok())
    return checked.error();
  Staged staged;
  staged.edges.push_back(make_edge(agent, principal, EdgeKind::ActedOnBehalfOf, now_));
  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  return commit(std::move(staged));
}

Result<void> Recorder::record_communication(const QualifiedId& informed,
                                            const QualifiedId& informant) {
  auto informed_node = require_local(informed, NodeKind::Activity, "activity");
  if (!informed_node.ok()) return informed_node.error();
  Resolution res = federation_.resolve(informant, kRegulatorDomain);
  if (const ProvNode* const* node = std::get_if<const ProvNode*>(&res))
    if ((*node)->created_at > informed_node.value()->created_at)
      return make_error(Errc::temporal_violation,
                        informed.text() + " cannot be informed by " + informant.text() +
                            " begun later");
  Staged staged;
  staged.edges.push_back(make_edge(informed, informant, EdgeKind::WasInformedBy, now_));
  if (auto checked = stage_checks(staged); !checked.ok()) return checked.error();
  return commit(std::move(staged));
}

// ── Cross-boundary transfer ──────────────────────────────────────────────

Result<TransferReceipt> Recorder::record_transfer(Recorder& sender, Recorder& receiver,
                                                  const QualifiedId& entity,
                                                  const QualifiedId& sender_agent,
                                                  const QualifiedId& receiver_agent,
                                                  const TransferOptions& options) {
  if (sender.domain_ == receiver.domain_)
    return make_error(Errc::validation_failed,
                      "transfer requires distinct domains, both sides are '" +
                          sender.domain_ + "'");
  auto entity_node = sender.require_local(entity, NodeKind::Entity, "entity");
  if (!entity_node.ok()) return entity_node.error();
  auto sender_node = sender.require_local(sender_agent, NodeKind::Agent, "sender agent");
  if (!sender_node.ok()) return sender_node.error();
  auto receiver_node =
      receiver.require_local(receiver_agent, NodeKind::Agent, "receiver agent");
  if (!receiver_node.ok()) return receiver_node.error();

  const QualifiedId activity_id = sender.mint_local("act-", sender.activity_counter_);
  Staged outbound;
  outbound.nodes.push_back(ProvNode{activity_id, NodeKind::Activity,
                                    std::string(kTransferNodeType),
                                    options.activity_attributes, sender.now_});
  outbound.edges.push_back(make_edge(activity_id, entity, EdgeKind::Used, sender.now_));
  outbound.edges.push_back(
      make_edge(activity_id, sender_agent, EdgeKind::WasAssociatedWith, sender.now_));

  const QualifiedId alias_id = receiver.mint_local("ent-", receiver.entity_counter_);
  ProvNode alias;
  alias.id = alias_id;
  alias.kind = NodeKind::Entity;
  alias.node_type = entity_node.value()->node_type;
  alias.created_at = receiver.now_;
  alias.attributes.emplace(std::string(attr::kAliasOf), AttrValue{entity.text()});
  for (std::string_view key : {attr::kPurpose, attr::kConsentedPurposes,
                               attr::kDataSubject, attr::kPersonalData, attr::kExpiry})
    if (const AttrValue* value = entity_node.value()->attribute(key))
      alias.attributes.emplace(std::string(key), *value);

  Staged inbound;
  inbound.nodes.push_back(std::move(alias));
  inbound.edges.push_back(
      make_edge(alias_id, activity_id, EdgeKind::WasGeneratedBy, receiver.now_));
  inbound.edges.push_back(
      make_edge(alias_id, receiver_agent, EdgeKind::WasAttributedTo, receiver.now_));

  if (auto checked = sender.stage_checks(outbound); !checked.ok())
    return checked.error();
  if (auto checked = receiver.stage_checks(inbound); !checked.ok())
    return checked.error();

  // The boundary rules run on the sender: outbound screening is the
  // sender's responsibility, and a block leaves its alert in the sender's
  // store. The receiver declares its processing purposes explicitly or via
  // its agent's purpose attribute.
  std::optional<StringSet> purposes = options.processing_purposes;
  if (!purposes)
    if (const StringSet* declared = receiver_node.value()->attr_set(attr::kPurpose))
      purposes = *declared;

  if (auto policy = sender.run_policy(
          CaptureEvent::transfer, {&outbound, &inbound}, {entity_node.value()}, {},
          &outbound.nodes.front(), std::move(purposes),
          "transfer of " + entity.text() + " to " + receiver.domain_);
      !policy.ok())
    return policy.error();

  if (auto checked = sender.stage_checks(outbound); !checked.ok())
    return checked.error();
  if (auto checked = receiver.stage_checks(inbound); !checked.ok())
    return checked.error();

  if (auto committed = sender.commit(std::move(outbound)); !committed.ok())
    return committed.error();
  if (auto committed = receiver.commit(std::move(inbound)); !committed.ok())
    return committed.error();

  TransferReceipt receipt;
  receipt.source_entity = entity;
  receipt.alias_entity = alias_id;
  receipt.transfer_activity = activity_id;
  receipt.sender_agent = sender_agent;
  receipt.receiver_agent = receiver_agent;
  receipt.at = sender.now_;
  return receipt;
}

}  // namespace decprov
