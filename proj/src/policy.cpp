#include "decprov/policy.hpp"

#include "decprov/json.hpp"

#include <algorithm>
#include <fstream>

namespace decprov {

std::string_view to_string(CaptureEvent event) {
  switch (event) {
    case CaptureEvent::node_append: return "node-append";
    case CaptureEvent::use: return "use";
    case CaptureEvent::derivation: return "derivation";
    case CaptureEvent::transfer: return "transfer";
    case CaptureEvent::generation: return "generation";
  }
  return "?";
}

std::optional<CaptureEvent> capture_event_from(std::string_view name) {
  if (name == "node-append") return CaptureEvent::node_append;
  if (name == "use") return CaptureEvent::use;
  if (name == "derivation") return CaptureEvent::derivation;
  if (name == "transfer") return CaptureEvent::transfer;
  if (name == "generation") return CaptureEvent::generation;
  return std::nullopt;
}

std::string_view to_string(VerdictOutcome outcome) {
  switch (outcome) {
    case VerdictOutcome::pass: return "pass";
    case VerdictOutcome::blocked: return "blocked";
    case VerdictOutcome::alerted: return "alerted";
    case VerdictOutcome::annotated: return "annotated";
  }
  return "?";
}

namespace {

std::string join(const StringSet& set) {
  std::string out = "{";
  bool first = true;
  for (const std::string& s : set) {
    if (!first) out += ", ";
    out += s;
    first = false;
  }
  out += "}";
  return out;
}

const std::set<std::string, std::less<>> kConditionNames = {
    "purpose_incompatible", "expired", "untrusted_lineage",
    "consent_missing_for_automated_decision", "model_admission_violation"};

Result<ConditionSpec> parse_condition(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("name") || !j["name"].is_string())
    return make_error(Errc::parse_error, "condition must be an object with a name");
  ConditionSpec spec;
  spec.name = j["name"].get<std::string>();
  if (!kConditionNames.count(spec.name))
    return make_error(Errc::parse_error, "unknown condition '" + spec.name + "'");

  nlohmann::json params = j.value("params", nlohmann::json::object());
  if (!params.is_object())
    return make_error(Errc::parse_error, "condition params must be an object");
  for (const auto& [key, value] : params.items()) {
    if (spec.name == "untrusted_lineage" && key == "blacklist" && value.is_array()) {
      for (const auto& item : value) {
        if (!item.is_string())
          return make_error(Errc::parse_error, "blacklist entries must be strings");
        spec.blacklist.insert(item.get<std::string>());
      }
      continue;
    }
    if (spec.name == "model_admission_violation" && key == "model_type" &&
        value.is_string()) {
      spec.model_type = value.get<std::string>();
      continue;
    }
    return make_error(Errc::parse_error, "condition '" + spec.name +
                                             "' does not take parameter '" + key + "'");
  }
  for (const auto& [key, value] : j.items())
    if (key != "name" && key != "params")
      return make_error(Errc::parse_error, "unexpected condition field '" + key + "'");
  return spec;
}

Result<PolicyRule> parse_rule(const nlohmann::json& j) {
  if (!j.is_object())
    return make_error(Errc::parse_error, "rule must be an object");
  PolicyRule rule;
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty())
    return make_error(Errc::parse_error, "rule needs a non-empty string id");
  rule.id = j["id"].get<std::string>();

  if (!j.contains("trigger") || !j["trigger"].is_array())
    return make_error(Errc::parse_error, "rule '" + rule.id + "' needs a trigger array");
  for (const auto& t : j["trigger"]) {
    if (!t.is_string())
      return make_error(Errc::parse_error, "rule '" + rule.id + "': triggers are strings");
    auto event = capture_event_from(t.get<std::string>());
    if (!event)
      return make_error(Errc::parse_error, "rule '" + rule.id + "': unknown trigger '" +
                                               t.get<std::string>() + "'");
    rule.triggers.insert(*event);
  }

  if (!j.contains("condition"))
    return make_error(Errc::parse_error, "rule '" + rule.id + "' needs a condition");
  auto condition = parse_condition(j["condition"]);
  if (!condition.ok())
    return make_error(Errc::parse_error,
                      "rule '" + rule.id + "': " + condition.error().message);
  rule.condition = condition.take();

  if (!j.contains("action") || !j["action"].is_object() ||
      !j["action"].contains("kind") || !j["action"]["kind"].is_string())
    return make_error(Errc::parse_error,
                      "rule '" + rule.id + "' needs an action with a kind");
  const nlohmann::json& action = j["action"];
  const auto kind = action["kind"].get<std::string>();
  if (kind == "block") {
    rule.action = RuleAction::block;
    rule.message = action.value("message", std::string());
  } else if (kind == "alert") {
    rule.action = RuleAction::alert;
    rule.message = action.value("message", std::string());
  } else if (kind == "annotate") {
    rule.action = RuleAction::annotate;
    if (!action.contains("key") || !action["key"].is_string() ||
        !action.contains("value"))
      return make_error(Errc::parse_error,
                        "rule '" + rule.id + "': annotate needs key and value");
    rule.annotate_key = action["key"].get<std::string>();
    auto value = attr_value_from_json(action["value"]);
    if (!value.ok())
      return make_error(Errc::parse_error,
                        "rule '" + rule.id + "': " + value.error().message);
    rule.annotate_value = value.take();
  } else {
    return make_error(Errc::parse_error,
                      "rule '" + rule.id + "': unknown action kind '" + kind + "'");
  }

  rule.fail = rule.action == RuleAction::block ? FailMode::closed : FailMode::open;
  if (j.contains("fail")) {
    if (j["fail"] == "open")
      rule.fail = FailMode::open;
    else if (j["fail"] == "closed")
      rule.fail = FailMode::closed;
    else
      return make_error(Errc::parse_error,
                        "rule '" + rule.id + "': fail must be \"open\" or \"closed\"");
  }
  return rule;
}

}  // namespace

Result<RuleSet> RuleSet::load(const nlohmann::json& doc) {
  const nlohmann::json* rules = nullptr;
  if (doc.is_array()) {
    rules = &doc;
  } else if (doc.is_object() && doc.contains("rules") && doc["rules"].is_array()) {
    rules = &doc["rules"];
  } else {
    return make_error(Errc::parse_error,
                      "rule file must be an array or an object with a 'rules' array");
  }

  RuleSet set;
  for (const auto& item : *rules) {
    auto rule = parse_rule(item);
    if (!rule.ok()) return rule.error();
    set.rules_.push_back(rule.take());
  }
  std::sort(set.rules_.begin(), set.rules_.end(),
            [](const PolicyRule& a, const PolicyRule& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < set.rules_.size(); ++i)
    if (set.rules_[i - 1].id == set.rules_[i].id)
      return make_error(Errc::parse_error, "duplicate rule id '" + set.rules_[i].id + "'");
  return set;
}

Result<RuleSet> RuleSet::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    return make_error(Errc::io_error, "cannot open " + path.string() + " for reading");
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded())
    return make_error(Errc::parse_error, path.string() + ": not valid JSON");
  return load(doc);
}

// ── Built-in conditions ──────────────────────────────────────────────────

CondEval cond_purpose_incompatible(const ProvNode& entity,
                                   const std::optional<StringSet>& processing) {
  CondEval out;
  if (processing && processing->empty()) return out;  // vacuously compatible
  if (!processing) {
    out.unresolved = true;
    out.witness = "no processing purposes declared for handling " + entity.id.text();
    return out;
  }
  const StringSet* collected = entity.attr_set(attr::kPurpose);
  if (!collected) {
    out.unresolved = true;
    out.witness = entity.id.text() + " declares no purpose set";
    return out;
  }
  StringSet excess;
  for (const std::string& p : *processing)
    if (!collected->count(p)) excess.insert(p);
  if (!excess.empty()) {
    out.value = true;
    out.witness = "processing purposes " + join(excess) + " outside the purposes " +
                  join(*collected) + " that " + entity.id.text() + " was collected for";
  }
  return out;
}

CondEval cond_expired(const ProvNode& entity, Tick now) {
  CondEval out;
  auto expiry = entity.attr_time(attr::kExpiry);
  if (expiry && now > *expiry) {
    out.value = true;
    out.witness = entity.id.text() + " expired at tick " + std::to_string(*expiry) +
                  ", now " + std::to_string(now);
  }
  return out;
}

CondEval cond_untrusted_lineage(const Federation& fed, const QualifiedId& entity,
                                const StringSet& blacklist,
                                const SnapshotBounds* bounds) {
  CondEval out;
  if (blacklist.empty()) return out;
  Closure closure = reach_backward(fed, entity, bounds);
  for (const ProvNode* node : closure.nodes) {
    if (node->kind != NodeKind::Agent) continue;
    if (blacklist.count(node->id.text())) {
      out.value = true;
      out.witness = "agent " + node->id.text() + " in the lineage of " + entity.text();
      return out;
    }
  }
  if (!closure.complete()) {
    out.unresolved = true;
    out.witness = "lineage of " + entity.text() + " has " +
                  std::to_string(closure.unresolved.size()) +
                  " unresolvable reference(s)";
  }
  return out;
}

CondEval cond_consent_missing_for_automated_decision(const ProvNode& entity,
                                                     const ProvNode& activity) {
  CondEval out;
  if (!activity.attr_bool(attr::kAutomatedDecision).value_or(false)) return out;
  if (!entity.attr_bool(attr::kPersonalData).value_or(false)) return out;
  const StringSet* consented = entity.attr_set(attr::kConsentedPurposes);
  if (consented && consented->count(std::string(kAutomatedDecisionPurpose))) return out;
  out.value = true;
  out.witness = entity.id.text() + " is personal data entering automated decision " +
                activity.id.text() + " without '" +
                std::string(kAutomatedDecisionPurpose) + "' consent";
  return out;
}

CondEval cond_model_admission_violation(const Federation& fed, const ProvNode& entity,
                                        const ProvNode& activity,
                                        const std::string& model_type,
                                        const SnapshotBounds* bounds) {
  CondEval out;
  if (entity.node_type == model_type) return out;  // attaching the model itself
  const ProvStore* store = fed.store(activity.id.domain);
  if (!store) return out;

  std::vector<const ProvNode*> models;
  for (const ProvEdge* e : store->out_edges(
           activity.id.text(), Federation::bound_for(bounds, activity.id.domain))) {
    if (e->kind != EdgeKind::Used) continue;
    Resolution res = fed.resolve(e->target, kRegulatorDomain, bounds);
    const ProvNode* const* used = std::get_if<const ProvNode*>(&res);
    if (used && (*used)->node_type == model_type) models.push_back(*used);
  }
  if (models.empty()) return out;

  std::optional<Closure> closure;
  for (const ProvNode* model : models) {
    const StringSet* accepted = model->attr_set(attr::kAcceptedSources);
    if (!accepted) continue;  // admission screening is opt-in per model
    if (!closure) closure = reach_backward(fed, entity.id, bounds);
    if (!closure->complete()) {
      out.unresolved = true;
      out.witness = "lineage of " + entity.id.text() + " has unresolvable references";
      return out;
    }
    for (const ProvNode* root : lineage_roots(fed, *closure, bounds)) {
      if (!accepted->count(root->node_type)) {
        out.value = true;
        out.witness = "origin " + root->id.text() + " of type '" + root->node_type +
                      "' is not among accepted sources " + join(*accepted) +
                      " of model " + model->id.text();
        return out;
      }
    }
  }
  return out;
}

// ── Evaluation ───────────────────────────────────────────────────────────

namespace {

struct ConditionHit {
  CondEval eval;
  const ProvNode* subject = nullptr;
};

// Existential over the event's subjects: a definite hit wins, otherwise
// unresolved context surfaces, otherwise the condition is false.
ConditionHit run_condition(const PolicyRule& rule, const PolicyEvent& event) {
  ConditionHit unresolved_hit;
  const ConditionSpec& spec = rule.condition;

  for (const ProvNode* subject : event.subjects) {
    if (!subject || subject->kind != NodeKind::Entity) continue;
    CondEval eval;
    if (spec.name == "purpose_incompatible") {
      eval = cond_purpose_incompatible(*subject, event.processing_purposes);
    } else if (spec.name == "expired") {
      eval = cond_expired(*subject, event.now);
    } else if (spec.name == "untrusted_lineage") {
      if (!event.federation) {
        eval.unresolved = true;
        eval.witness = "no graph context supplied";
      } else {
        eval = cond_untrusted_lineage(*event.federation, subject->id, spec.blacklist,
                                      event.bounds);
      }
    } else if (spec.name == "consent_missing_for_automated_decision") {
      if (event.activity)
        eval = cond_consent_missing_for_automated_decision(*subject, *event.activity);
    } else if (spec.name == "model_admission_violation") {
      if (event.activity) {
        if (!event.federation) {
          eval.unresolved = true;
          eval.witness = "no graph context supplied";
        } else {
          eval = cond_model_admission_violation(*event.federation, *subject,
                                                *event.activity, spec.model_type,
                                                event.bounds);
        }
      }
    }
    if (eval.value) return ConditionHit{eval, subject};
    if (eval.unresolved && !unresolved_hit.eval.unresolved)
      unresolved_hit = ConditionHit{eval, subject};
  }
  if (!unresolved_hit.eval.unresolved && !event.unresolved_subjects.empty()) {
    unresolved_hit.eval.unresolved = true;
    unresolved_hit.eval.witness =
        "subject " + event.unresolved_subjects.front().text() + " is unresolvable";
  }
  return unresolved_hit;
}

std::string render_message(const PolicyRule& rule, const ConditionHit& hit) {
  std::string text = rule.message;
  const std::string placeholder = "{entity}";
  if (hit.subject) {
    std::size_t at;
    while ((at = text.find(placeholder)) != std::string::npos)
      text.replace(at, placeholder.size(), hit.subject->id.text());
  }
  if (text.empty()) return hit.eval.witness;
  if (!hit.eval.witness.empty()) text += ": " + hit.eval.witness;
  return text;
}

}  // namespace

EvaluationResult evaluate(const RuleSet& rules, const PolicyEvent& event) {
  EvaluationResult result;
  for (const PolicyRule& rule : rules.rules()) {
    if (!rule.triggers.count(event.kind)) continue;

    ConditionHit hit = run_condition(rule, event);
    bool fired = hit.eval.value;
    if (hit.eval.unresolved) {
      fired = rule.fail == FailMode::closed;
      hit.eval.witness = "unresolved context (" + hit.eval.witness + "), fail-" +
                         (rule.fail == FailMode::closed ? "closed" : "open");
    }

    PolicyVerdict verdict;
    verdict.rule_id = rule.id;
    if (!fired) {
      verdict.outcome = VerdictOutcome::pass;
      result.verdicts.push_back(std::move(verdict));
      continue;
    }

    verdict.explanation = render_message(rule, hit);
    switch (rule.action) {
      case RuleAction::block:
        verdict.outcome = VerdictOutcome::blocked;
        if (verdict.explanation.empty())
          verdict.explanation = "rule " + rule.id + " blocked the event";
        result.blocked = true;
        result.blocked_rule_id = rule.id;
        result.blocked_explanation = verdict.explanation;
        result.verdicts.push_back(std::move(verdict));
        return result;  // first block short-circuits
      case RuleAction::alert:
        verdict.outcome = VerdictOutcome::alerted;
        break;
      case RuleAction::annotate:
        verdict.outcome = VerdictOutcome::annotated;
        result.annotations.push_back(Annotation{rule.annotate_key, rule.annotate_value});
        break;
    }
    result.verdicts.push_back(std::move(verdict));
  }
  return result;
}

}  // namespace decprov
