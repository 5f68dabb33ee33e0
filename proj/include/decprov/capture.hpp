#pragma once
// The disclosed-provenance recording API. Components of a running system
// call a Recorder at data-exchange points; every call stages its records,
// runs the policy rules, and either appends the whole batch or — when a
// Block rule fires — appends a single alert node instead and reports
// PolicyBlocked. The store is never left with partial structures.
//
// Temporal discipline: generated entities are never older than their
// activity, activities never use entities younger than themselves, and
// derivations never point forward in time. Together with a same-tick cycle
// check on use/derivation, this keeps the data-flow subgraph (used,
// wasGeneratedBy, wasDerivedFrom) acyclic.

#include "decprov/model.hpp"
#include "decprov/policy.hpp"
#include "decprov/result.hpp"
#include "decprov/store.hpp"

#include <optional>
#include <string>
#include <vector>

namespace decprov {

inline constexpr std::string_view kAlertNodeType = "policy-alert";
inline constexpr std::string_view kTransferNodeType = "transfer";

// Agent to append atomically with the activity that first mentions it.
struct AgentSpec {
  std::string local;  // local identifier, e.g. "acme-corp"
  std::string node_type = "organization";
  AttrMap attributes;
};

struct TransferReceipt {
  QualifiedId source_entity;
  QualifiedId alias_entity;
  QualifiedId transfer_activity;
  QualifiedId sender_agent;
  QualifiedId receiver_agent;
  Tick at = 0;
};

struct TransferOptions {
  // Purposes the receiver declares for processing the transferred data;
  // when absent, the receiver agent's own purpose attribute stands in.
  std::optional<StringSet> processing_purposes;
  AttrMap activity_attributes;  // extra attributes on the transfer activity
};

// Single-writer recording front end for one domain's store. Minted local
// ids never repeat; each prefix (act-, ent-, alert-) counts independently.
class Recorder {
 public:
  // Registers the domain's store in the federation when absent. The rule
  // set may be null (no policy). Both referents must outlive the Recorder.
  Recorder(Federation& federation, std::string domain, const RuleSet* rules = nullptr,
           Visibility visibility = Visibility::full);

  const std::string& domain() const { return domain_; }
  ProvStore& store() { return store_; }
  const ProvStore& store() const { return store_; }

  void set_now(Tick now) { now_ = now; }
  Tick now() const { return now_; }

  // Verdicts produced by the most recent capture call (empty when no rules
  // matched), plus the alert node appended if that call was blocked.
  const std::vector<PolicyVerdict>& last_verdicts() const { return last_verdicts_; }
  std::optional<QualifiedId> last_alert() const { return last_alert_; }

  // ── Node primitives ──────────────────────────────────────────────────
  // Pass an explicit local id or leave it empty to mint one.

  Result<QualifiedId> record_agent(std::string local, std::string node_type,
                                   AttrMap attributes = {});
  Result<QualifiedId> record_entity(std::string local, std::string node_type,
                                    AttrMap attributes = {});

  // ── Activity lifecycle ───────────────────────────────────────────────

  Result<QualifiedId> begin_activity(const QualifiedId& agent, std::string node_type,
                                     AttrMap attributes = {});
  Result<QualifiedId> begin_activity(const AgentSpec& agent, std::string node_type,
                                     AttrMap attributes = {});

  Result<QualifiedId> record_generation(const QualifiedId& activity,
                                        std::string node_type, AttrMap attributes = {});
  Result<void> record_use(const QualifiedId& activity, const QualifiedId& entity);
  Result<void> record_derivation(const QualifiedId& derived,
                                 const std::vector<QualifiedId>& sources);

  // ── Structural relations (no policy event) ───────────────────────────

  Result<void> record_attribution(const QualifiedId& entity, const QualifiedId& agent);
  Result<void> record_delegation(const QualifiedId& agent, const QualifiedId& principal);
  Result<void> record_communication(const QualifiedId& informed,
                                    const QualifiedId& informant);

  // ── Cross-boundary transfer ──────────────────────────────────────────
  // Sender side appends a transfer activity; receiver side appends an alias
  // entity carrying alias_of and copies of the source's reserved
  // attributes. Each side is atomic; a block leaves only the sender's
  // alert node.

  static Result<TransferReceipt> record_transfer(Recorder& sender, Recorder& receiver,
                                                 const QualifiedId& entity,
                                                 const QualifiedId& sender_agent,
                                                 const QualifiedId& receiver_agent,
                                                 const TransferOptions& options = {});

 private:
  struct Staged {
    std::vector<ProvNode> nodes;  // appended in order, before edges
    std::vector<ProvEdge> edges;
  };

  QualifiedId mint_local(const char* prefix, std::size_t& counter) const;
  Result<const ProvNode*> require_local(const QualifiedId& id, NodeKind kind,
                                        const char* what) const;
  Result<void> stage_checks(const Staged& staged) const;
  Result<void> commit(Staged staged);

  // Runs the rules; on Block, appends the alert node, records verdicts, and
  // returns the PolicyBlocked error. On pass, applies annotations to the
  // staged records.
  Result<void> run_policy(CaptureEvent kind, std::vector<Staged*> staged,
                          const std::vector<const ProvNode*>& subjects,
                          const std::vector<QualifiedId>& unresolved_subjects,
                          const ProvNode* activity,
                          std::optional<StringSet> processing_purposes,
                          const std::string& summary);

  // True when `needle` is reachable from `from` over data-flow edges
  // (used, wasGeneratedBy, wasDerivedFrom) visiting only nodes created at
  // `tick` — the only way a new edge could close a cycle.
  bool same_tick_reaches(const QualifiedId& from, const QualifiedId& needle,
                         Tick tick) const;

  void append_alert(const std::string& rule_id, const std::string& summary,
                    const std::string& explanation);

  Federation& federation_;
  std::string domain_;
  ProvStore& store_;
  const RuleSet* rules_;
  Tick now_ = 0;
  std::size_t activity_counter_ = 0;
  std::size_t entity_counter_ = 0;
  std::size_t agent_counter_ = 0;
  std::size_t alert_counter_ = 0;
  std::vector<PolicyVerdict> last_verdicts_;
  std::optional<QualifiedId> last_alert_;
};

}  // namespace decprov
