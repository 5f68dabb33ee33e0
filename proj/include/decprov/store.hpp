#pragma once
// Per-domain append-only provenance log with hash-chain integrity, a
// line-oriented persistence format, and the federation registry that lets
// queries span organizational boundaries.

#include "decprov/hash.hpp"
#include "decprov/model.hpp"

#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace decprov {

inline constexpr int kLogFormatVersion = 1;
inline constexpr std::string_view kLogFormatName = "decprov-log";
inline constexpr std::string_view kRegulatorDomain = "regulator";

struct LogRecord {
  std::variant<ProvNode, ProvEdge> record;
  Digest hash{};

  const ProvNode* node() const { return std::get_if<ProvNode>(&record); }
  const ProvEdge* edge() const { return std::get_if<ProvEdge>(&record); }
};

struct AppendReceipt {
  std::size_t position = 0;
  Digest head{};
};

// Single-writer, multi-reader log. Appends extend the hash chain; readers
// work against a position bound so later appends stay invisible to a
// running query. Record storage is a deque, so references handed out stay
// valid across appends.
class ProvStore {
 public:
  explicit ProvStore(std::string domain);

  ProvStore(const ProvStore&) = delete;
  ProvStore& operator=(const ProvStore&) = delete;

  const std::string& domain() const { return domain_; }

  std::size_t size() const;
  Digest head_hash() const;

  // Validates first; on any failure the store is untouched.
  Result<AppendReceipt> append(ProvNode node);
  Result<AppendReceipt> append(ProvEdge edge);

  // Dry-run of the append validation, for callers that must stage several
  // records and reject the batch before touching the log.
  Result<void> check(const ProvNode& node) const;
  Result<void> check(const ProvEdge& edge) const;

  // Recomputes the chain; nullopt when every stored hash matches, else the
  // smallest mismatching position. Truncation of a suffix is not detectable
  // here: the chain property covers the remaining prefix, so pin head_hash
  // externally when truncation matters.
  std::optional<std::size_t> verify_chain() const;

  const LogRecord& record_at(std::size_t pos) const;

  // Reads below take an optional position bound (records at pos >= bound are
  // treated as absent); kNoBound means "everything currently appended".
  static constexpr std::size_t kNoBound = static_cast<std::size_t>(-1);

  const ProvNode* find_node(const std::string& id_text,
                            std::size_t bound = kNoBound) const;
  std::optional<std::size_t> node_position(const std::string& id_text) const;

  std::vector<const ProvEdge*> out_edges(const std::string& id_text,
                                         std::size_t bound = kNoBound) const;
  std::vector<const ProvEdge*> in_edges(const std::string& id_text,
                                        std::size_t bound = kNoBound) const;
  // Local alias entities whose alias_of names the given id.
  std::vector<const ProvNode*> aliases_of(const std::string& id_text,
                                          std::size_t bound = kNoBound) const;
  // Local entities whose data_subject equals the given subject.
  std::vector<const ProvNode*> entities_of_subject(const std::string& subject,
                                                   std::size_t bound = kNoBound) const;

  // fn runs outside the store lock (records are immutable once appended).
  void for_each_record(const std::function<void(std::size_t, const LogRecord&)>& fn,
                       std::size_t bound = kNoBound) const;

 private:
  Result<void> validate_for_append(const ProvNode& node) const;
  Result<void> validate_for_append(const ProvEdge& edge) const;
  AppendReceipt append_unlocked(std::variant<ProvNode, ProvEdge> record,
                                const std::string& bytes);
  void index_record(std::size_t pos);

  mutable std::shared_mutex mutex_;
  std::string domain_;
  std::deque<LogRecord> records_;
  Digest head_ = kGenesisDigest;
  std::unordered_map<std::string, std::size_t> node_pos_;
  std::unordered_map<std::string, std::vector<std::size_t>> out_edges_;
  std::unordered_map<std::string, std::vector<std::size_t>> in_edges_;
  std::unordered_map<std::string, std::vector<std::size_t>> alias_in_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_subject_;
};

// ── Persistence ──────────────────────────────────────────────────────────
//
// One record per line, UTF-8 JSON:
//   {"format":"decprov-log","version":1,"domain":"orgA"}
//   {"seq":0,"hash":"<64 lowercase hex>","record":{...}}
// Files are bit-exact reproducible from the same capture sequence.

Result<void> export_store(const ProvStore& store, std::ostream& out);
Result<void> export_store(const ProvStore& store, const std::filesystem::path& path);

// Strict import: parse failures surface as MalformedRecord (with the line
// number), declared hashes that do not match recomputation as ChainMismatch.
// An entirely empty stream yields an empty, unnamed store.
Result<std::unique_ptr<ProvStore>> import_store(std::istream& in);
Result<std::unique_ptr<ProvStore>> import_store(const std::filesystem::path& path);

// Integrity scan of a persisted log. Unlike import, per-record damage is a
// finding, not an error: any unparseable, out-of-sequence, or hash-mismatched
// line is reported as the first corrupt position. Only file-level problems
// (unreadable, missing/invalid header) fail.
struct FileVerifyReport {
  std::string domain;
  std::size_t records = 0;  // records verified before the first corruption
  std::optional<std::size_t> first_corrupt;
};

Result<FileVerifyReport> verify_log_file(const std::filesystem::path& path);

// ── Federation ───────────────────────────────────────────────────────────

enum class Visibility { full, agents_only };

std::string_view to_string(Visibility v);
std::optional<Visibility> visibility_from(std::string_view name);

// Redacted stub: id and kind survive so traversals keep their shape.
struct Redacted {
  QualifiedId id;
  NodeKind kind = NodeKind::Entity;
};

struct Unresolvable {
  QualifiedId id;
};

using Resolution = std::variant<const ProvNode*, Redacted, Unresolvable>;

// Per-domain position bounds captured at query start; stores added later, or
// records appended later, are invisible to a query holding the snapshot.
using SnapshotBounds = std::map<std::string, std::size_t>;

// Registry of per-domain stores plus the visibility levels governing what
// foreign requesters may see. The reserved requesting domain "regulator"
// always receives full nodes. Stores are registered during setup; concurrent
// readers are safe once registration is done.
class Federation {
 public:
  Federation() = default;
  Federation(Federation&&) = default;
  Federation& operator=(Federation&&) = default;

  ProvStore& add_store(std::string domain, Visibility visibility = Visibility::full);
  Result<void> adopt_store(std::unique_ptr<ProvStore> store,
                           Visibility visibility = Visibility::full);

  ProvStore* store(const std::string& domain);
  const ProvStore* store(const std::string& domain) const;

  std::vector<std::string> domains() const;  // ascending
  Visibility visibility(const std::string& domain) const;
  void set_visibility(const std::string& domain, Visibility visibility);

  SnapshotBounds snapshot() const;

  // bounds == nullptr reads everything currently appended.
  Resolution resolve(const QualifiedId& id, std::string_view requesting_domain,
                     const SnapshotBounds* bounds = nullptr) const;

  // Convenience: the bound for one domain under an optional snapshot.
  static std::size_t bound_for(const SnapshotBounds* bounds, const std::string& domain);

 private:
  std::map<std::string, std::unique_ptr<ProvStore>> stores_;
  std::map<std::string, Visibility> visibility_;
};

}  // namespace decprov
