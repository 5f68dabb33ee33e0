#pragma once
// Event-condition-action rules evaluated synchronously at capture time.
// Rules fire on capture events; the first Block short-circuits so the
// capture layer can reject the append and record an alert node instead.
// Alert and Annotate actions accumulate without stopping the event.

#include "decprov/model.hpp"
#include "decprov/query.hpp"
#include "decprov/result.hpp"
#include "decprov/store.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace decprov {

enum class CaptureEvent { node_append, use, derivation, transfer, generation };

std::string_view to_string(CaptureEvent event);
std::optional<CaptureEvent> capture_event_from(std::string_view name);

enum class RuleAction { block, alert, annotate };
enum class FailMode { open, closed };

// Condition parameters, fixed per built-in. Unknown names or stray
// parameters are load-time errors.
struct ConditionSpec {
  std::string name;
  StringSet blacklist;               // untrusted_lineage
  std::string model_type = "model";  // model_admission_violation
};

struct PolicyRule {
  std::string id;
  std::set<CaptureEvent> triggers;
  ConditionSpec condition;
  RuleAction action = RuleAction::alert;
  std::string message;       // alert template; "{entity}" names the witness
  std::string annotate_key;  // annotate target attribute
  AttrValue annotate_value;
  // Unresolvable context counts as a hit under fail-closed and as a pass
  // under fail-open. Block rules default closed, everything else open.
  FailMode fail = FailMode::open;
};

class RuleSet {
 public:
  static Result<RuleSet> load(const nlohmann::json& doc);
  static Result<RuleSet> load_file(const std::filesystem::path& path);

  const std::vector<PolicyRule>& rules() const { return rules_; }  // id ascending
  bool empty() const { return rules_.empty(); }

 private:
  std::vector<PolicyRule> rules_;
};

enum class VerdictOutcome { pass, blocked, alerted, annotated };

std::string_view to_string(VerdictOutcome outcome);

struct PolicyVerdict {
  std::string rule_id;
  VerdictOutcome outcome = VerdictOutcome::pass;
  std::string explanation;
};

// What one capture event exposes to the rules. The capture layer fills
// subjects per event kind: the appended entity (node-append), the used or
// transferred entity, the derivation source, or the inputs an activity had
// used at generation time.
struct PolicyEvent {
  CaptureEvent kind = CaptureEvent::node_append;
  Tick now = 0;
  const Federation* federation = nullptr;  // graph context for lineage walks
  const SnapshotBounds* bounds = nullptr;
  std::vector<const ProvNode*> subjects;
  // Subject references the capture layer could not resolve; any of these
  // makes entity-examining conditions unresolved rather than silently false.
  std::vector<QualifiedId> unresolved_subjects;
  const ProvNode* activity = nullptr;  // processing/receiving activity
  // Purposes the receiving side declares for this processing step; nullopt
  // means undeclared, which purpose rules treat as unresolved context.
  std::optional<StringSet> processing_purposes;
};

struct Annotation {
  std::string key;
  AttrValue value;
};

struct EvaluationResult {
  std::vector<PolicyVerdict> verdicts;  // rule-id order; stops after a block
  bool blocked = false;
  std::string blocked_rule_id;
  std::string blocked_explanation;
  std::vector<Annotation> annotations;
};

EvaluationResult evaluate(const RuleSet& rules, const PolicyEvent& event);

// ── Built-in conditions ──────────────────────────────────────────────────
//
// Exposed individually so they can be checked against naive reference
// evaluations. `unresolved` signals missing context; the rule's fail mode
// decides what that means.

struct CondEval {
  bool value = false;
  bool unresolved = false;
  std::string witness;
};

// The consented_purposes entry that licenses automated decision-making.
inline constexpr std::string_view kAutomatedDecisionPurpose = "automated-decision";

// True iff the declared processing purposes are not a subset of the
// entity's collection purposes. Empty processing set is vacuously
// compatible; missing declarations on either side are unresolved.
CondEval cond_purpose_incompatible(const ProvNode& entity,
                                   const std::optional<StringSet>& processing);

// True iff the entity carries an expiry and now is past it (the expiry
// tick itself is still valid).
CondEval cond_expired(const ProvNode& entity, Tick now);

// True iff any blacklisted agent appears in the entity's full backward
// lineage. Empty blacklist is false without walking.
CondEval cond_untrusted_lineage(const Federation& fed, const QualifiedId& entity,
                                const StringSet& blacklist,
                                const SnapshotBounds* bounds = nullptr);

// True iff the activity decides automatically, the entity is personal
// data, and "automated-decision" is not among its consented purposes.
CondEval cond_consent_missing_for_automated_decision(const ProvNode& entity,
                                                     const ProvNode& activity);

// True iff the activity processes the entity against a model whose
// accepted_sources does not cover every origin node_type in the entity's
// lineage. Models are the activity's used entities of node_type
// `model_type`; a model without accepted_sources admits anything.
CondEval cond_model_admission_violation(const Federation& fed, const ProvNode& entity,
                                        const ProvNode& activity,
                                        const std::string& model_type = "model",
                                        const SnapshotBounds* bounds = nullptr);

}  // namespace decprov
