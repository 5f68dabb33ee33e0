#pragma once
// Seeded random federation builder. Drives the Recorder API with a mix of
// captures — including cross-domain transfers and references to ids that
// were never recorded — so query and policy tests can compare the engine
// against the naive oracles on irregular graphs. Capture calls that the
// engine legitimately rejects (temporal order, same-tick cycles) are simply
// skipped; the builder only tracks what actually landed in a store.

#include "decprov/capture.hpp"
#include "decprov/store.hpp"

#include <memory>
#include <random>
#include <string>
#include <vector>

namespace testutil {

using namespace decprov;

class RandomWorld {
 public:
  explicit RandomWorld(std::uint64_t seed, std::size_t domain_count = 3)
      : rng_(seed) {
    static const char* kNames[] = {"alpha", "beta", "gamma", "delta"};
    domain_count = std::min<std::size_t>(std::max<std::size_t>(domain_count, 2), 4);
    for (std::size_t i = 0; i < domain_count; ++i) {
      recorders_.push_back(std::make_unique<Recorder>(fed_, kNames[i]));
      agents_.emplace_back();
      activities_.emplace_back();
      entities_.emplace_back();
    }
    for (std::size_t i = 0; i < recorders_.size(); ++i) {
      auto agent = recorders_[i]->record_agent("", "organization");
      agents_[i].push_back(agent.value());
      node_ids_.push_back(agent.value());
    }
  }

  RandomWorld(const RandomWorld&) = delete;
  RandomWorld& operator=(const RandomWorld&) = delete;

  Federation& federation() { return fed_; }
  const Federation& federation() const { return fed_; }
  Recorder& recorder(std::size_t i) { return *recorders_[i]; }
  std::size_t domain_count() const { return recorders_.size(); }
  const std::vector<QualifiedId>& node_ids() const { return node_ids_; }
  const std::vector<QualifiedId>& entities(std::size_t i) const { return entities_[i]; }

  std::size_t total_records() const {
    std::size_t n = 0;
    for (const std::string& d : fed_.domains()) n += fed_.store(d)->size();
    return n;
  }

  std::uint64_t roll(std::uint64_t n) { return rng_() % n; }

  // Grows the federation until at least `target` records exist.
  void populate(std::size_t target) {
    std::size_t attempts_left = target * 60 + 1000;
    while (total_records() < target && attempts_left-- > 0) step();
  }

  // Grows one domain's store to exactly `target` records, padding with
  // plain entity captures (one record each) for the final stretch.
  void populate_exact(std::size_t domain, std::size_t target) {
    const ProvStore& store = recorders_[domain]->store();
    std::size_t attempts_left = target * 60 + 1000;
    while (store.size() + 8 < target && attempts_left-- > 0) step(domain);
    while (store.size() < target) add_entity(domain);
  }

  // One random capture against a random (or fixed) domain. Returns true
  // when the store grew.
  bool step(std::size_t forced_domain = static_cast<std::size_t>(-1)) {
    const std::size_t d = forced_domain < recorders_.size()
                              ? forced_domain
                              : static_cast<std::size_t>(roll(recorders_.size()));
    if (roll(4) == 0) tick_ += 1 + roll(3);
    for (auto& rec : recorders_) rec->set_now(tick_);
    switch (roll(20)) {
      case 0:
        return add_agent(d);
      case 1:
      case 2:
      case 3:
        return add_activity(d);
      case 4:
      case 5:
        return add_entity(d);
      case 6:
      case 7:
      case 8:
      case 9:
        return add_generation(d);
      case 10:
      case 11:
      case 12:
        return add_use(d, d);
      case 13:
        return add_use(d, static_cast<std::size_t>(roll(recorders_.size())));
      case 14:
        return add_ghost_use(d);
      case 15:
      case 16:
        return add_derivation(d);
      case 17:
        return add_attribution(d);
      default:
        return forced_domain < recorders_.size() ? add_generation(d) : add_transfer();
    }
  }

 private:
  template <typename T>
  const T& pick(const std::vector<T>& pool) {
    return pool[roll(pool.size())];
  }

  AttrMap random_entity_attrs() {
    AttrMap attrs;
    if (roll(3) == 0) {
      attrs.emplace(attr::kPersonalData, true);
      attrs.emplace(attr::kDataSubject,
                    "user-" + std::to_string(roll(10)));
    }
    if (roll(3) == 0) attrs.emplace(attr::kPurpose, random_purposes());
    if (roll(6) == 0) attrs.emplace(attr::kExpiry, TimeVal{tick_ + roll(12)});
    return attrs;
  }

  StringSet random_purposes() {
    static const char* kPurposes[] = {"service", "billing", "analytics",
                                      "advertising", "research"};
    StringSet set;
    const std::size_t n = 1 + roll(3);
    for (std::size_t i = 0; i < n; ++i) set.insert(kPurposes[roll(5)]);
    return set;
  }

  std::string random_entity_type() {
    static const char* kTypes[] = {"reading", "record", "profile", "context",
                                   "result"};
    return kTypes[roll(5)];
  }

  bool add_agent(std::size_t d) {
    auto id = recorders_[d]->record_agent("", roll(2) ? "organization" : "person");
    if (!id) return false;
    agents_[d].push_back(id.value());
    node_ids_.push_back(id.value());
    return true;
  }

  bool add_activity(std::size_t d) {
    AttrMap attrs;
    if (roll(3) == 0) attrs.emplace(attr::kPurpose, random_purposes());
    if (roll(5) == 0) attrs.emplace(attr::kAutomatedDecision, true);
    auto id = recorders_[d]->begin_activity(pick(agents_[d]), "processing",
                                            std::move(attrs));
    if (!id) return false;
    activities_[d].push_back(id.value());
    node_ids_.push_back(id.value());
    return true;
  }

  bool add_entity(std::size_t d) {
    auto id = recorders_[d]->record_entity("", random_entity_type(),
                                           random_entity_attrs());
    if (!id) return false;
    entities_[d].push_back(id.value());
    node_ids_.push_back(id.value());
    return true;
  }

  bool add_generation(std::size_t d) {
    if (activities_[d].empty()) return add_activity(d);
    auto id = recorders_[d]->record_generation(pick(activities_[d]),
                                               random_entity_type(),
                                               random_entity_attrs());
    if (!id) return false;
    entities_[d].push_back(id.value());
    node_ids_.push_back(id.value());
    return true;
  }

  bool add_use(std::size_t d, std::size_t source) {
    if (activities_[d].empty() || entities_[source].empty()) return false;
    return recorders_[d]
        ->record_use(pick(activities_[d]), pick(entities_[source]))
        .ok();
  }

  // Reference to an id that no store holds; the edge lands, the endpoint
  // stays a stub for every traversal.
  bool add_ghost_use(std::size_t d) {
    if (activities_[d].empty()) return false;
    const std::size_t other = roll(recorders_.size());
    QualifiedId ghost{recorders_[other]->domain(),
                      "ghost-" + std::to_string(ghost_counter_++)};
    return recorders_[d]->record_use(pick(activities_[d]), ghost).ok();
  }

  bool add_derivation(std::size_t d) {
    if (entities_[d].size() < 2) return false;
    const QualifiedId& derived = pick(entities_[d]);
    std::vector<QualifiedId> sources;
    const std::size_t n = 1 + roll(2);
    for (std::size_t i = 0; i < n; ++i) sources.push_back(pick(entities_[d]));
    return recorders_[d]->record_derivation(derived, sources).ok();
  }

  bool add_attribution(std::size_t d) {
    if (entities_[d].empty()) return false;
    return recorders_[d]
        ->record_attribution(pick(entities_[d]), pick(agents_[d]))
        .ok();
  }

  bool add_transfer() {
    if (recorders_.size() < 2) return false;
    const std::size_t from = roll(recorders_.size());
    std::size_t to = roll(recorders_.size());
    if (from == to) to = (to + 1) % recorders_.size();
    if (entities_[from].empty()) return false;
    TransferOptions options;
    if (roll(2)) options.processing_purposes = random_purposes();
    auto receipt = Recorder::record_transfer(
        *recorders_[from], *recorders_[to], pick(entities_[from]),
        pick(agents_[from]), pick(agents_[to]), options);
    if (!receipt) return false;
    entities_[to].push_back(receipt.value().alias_entity);
    node_ids_.push_back(receipt.value().alias_entity);
    node_ids_.push_back(receipt.value().transfer_activity);
    return true;
  }

  Federation fed_;
  std::vector<std::unique_ptr<Recorder>> recorders_;
  std::vector<std::vector<QualifiedId>> agents_;
  std::vector<std::vector<QualifiedId>> activities_;
  std::vector<std::vector<QualifiedId>> entities_;
  std::vector<QualifiedId> node_ids_;
  std::mt19937_64 rng_;
  Tick tick_ = 1;
  std::uint64_t ghost_counter_ = 0;
};

}  // namespace testutil
