#include "decprov/store.hpp"

#include "decprov/json.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>
#include <sstream>
#include <utility>

namespace decprov {

namespace {

std::string record_bytes(const std::variant<ProvNode, ProvEdge>& record) {
  return std::visit([](const auto& r) { return canonical_serialize(r); }, record);
}

ojson record_to_json(const std::variant<ProvNode, ProvEdge>& record) {
  if (const auto* node = std::get_if<ProvNode>(&record)) return node_to_json(*node);
  return edge_to_json(std::get<ProvEdge>(record));
}

bool valid_domain_name(const std::string& domain) {
  if (domain.empty()) return false;
  for (unsigned char c : domain)
    if (c == ':' || std::isspace(c)) return false;
  return true;
}

// Parses one persisted line into its parts. Returns false on any defect so
// verify can treat the line as corrupt; import turns false into an error.
struct ParsedLine {
  std::size_t seq = 0;
  Digest declared{};
  std::variant<ProvNode, ProvEdge> record;
  std::string defect;
};

bool parse_record_line(const std::string& line, ParsedLine& out) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    out.defect = "not a valid JSON object";
    return false;
  }
  if (!j.contains("seq") || !j["seq"].is_number_unsigned()) {
    out.defect = "missing or invalid 'seq'";
    return false;
  }
  out.seq = j["seq"].get<std::size_t>();
  if (!j.contains("hash") || !j["hash"].is_string()) {
    out.defect = "missing or invalid 'hash'";
    return false;
  }
  auto digest = digest_from_hex(j["hash"].get<std::string>());
  if (!digest) {
    out.defect = "hash is not 64 lowercase hex characters";
    return false;
  }
  out.declared = *digest;
  if (!j.contains("record") || !j["record"].is_object() ||
      !j["record"].contains("rectype") || !j["record"]["rectype"].is_string()) {
    out.defect = "missing or invalid 'record'";
    return false;
  }
  const auto rectype = j["record"]["rectype"].get<std::string>();
  if (rectype == "node") {
    auto node = node_from_json(j["record"]);
    if (!node.ok()) {
      out.defect = node.error().message;
      return false;
    }
    out.record = node.take();
  } else if (rectype == "edge") {
    auto edge = edge_from_json(j["record"]);
    if (!edge.ok()) {
      out.defect = edge.error().message;
      return false;
    }
    out.record = edge.take();
  } else {
    out.defect = "unknown rectype '" + rectype + "'";
    return false;
  }
  return true;
}

Result<std::string> parse_header_line(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object())
    return make_error(Errc::malformed_record, "line 1: header is not a JSON object");
  if (!j.contains("format") || j["format"] != kLogFormatName)
    return make_error(Errc::malformed_record, "line 1: unrecognized log format");
  if (!j.contains("version") || j["version"] != kLogFormatVersion)
    return make_error(Errc::malformed_record, "line 1: unsupported log version");
  if (!j.contains("domain") || !j["domain"].is_string() ||
      !valid_domain_name(j["domain"].get<std::string>()))
    return make_error(Errc::malformed_record, "line 1: missing or invalid domain");
  return j["domain"].get<std::string>();
}

}  // namespace

// ── ProvStore ────────────────────────────────────────────────────────────

ProvStore::ProvStore(std::string domain) : domain_(std::move(domain)) {}

std::size_t ProvStore::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

Digest ProvStore::head_hash() const {
  std::shared_lock lock(mutex_);
  return head_;
}

Result<void> ProvStore::validate_for_append(const ProvNode& node) const {
  if (auto check = validate_node(node, domain_); !check.ok()) return check;
  if (node_pos_.count(node.id.text()))
    return make_error(Errc::validation_failed,
                      "duplicate node id " + node.id.text());
  return {};
}

Result<void> ProvStore::validate_for_append(const ProvEdge& edge) const {
  for (const QualifiedId* end : {&edge.source, &edge.target})
    if (auto checked = mint_id(end->domain, end->local); !checked.ok())
      return checked.error();

  auto source_it = node_pos_.find(edge.source.text());
  if (source_it == node_pos_.end())
    return make_error(Errc::dangling_reference,
                      "edge source " + edge.source.text() + " not present in store '" +
                          domain_ + "'");
  const ProvNode& source = std::get<ProvNode>(records_[source_it->second].record);

  auto target_it = node_pos_.find(edge.target.text());
  if (target_it != node_pos_.end()) {
    const ProvNode& target = std::get<ProvNode>(records_[target_it->second].record);
    return validate_edge(edge, source.kind, target.kind);
  }
  if (edge.target.domain == domain_)
    return make_error(Errc::dangling_reference,
                      "edge target " + edge.target.text() + " not present in store '" +
                          domain_ + "'");
  // Foreign target: resolved lazily across the federation; only the source
  // side of the kind constraint can be checked here.
  if (source.kind != required_source_kind(edge.kind))
    return make_error(Errc::kind_constraint_violation,
                      std::string(to_string(edge.kind)) + " requires source kind " +
                          std::string(to_string(required_source_kind(edge.kind))) +
                          ", got " + std::string(to_string(source.kind)));
  return {};
}

AppendReceipt ProvStore::append_unlocked(std::variant<ProvNode, ProvEdge> record,
                                         const std::string& bytes) {
  LogRecord entry;
  entry.record = std::move(record);
  entry.hash = chain_hash(head_, bytes);
  records_.push_back(std::move(entry));
  head_ = records_.back().hash;
  const std::size_t pos = records_.size() - 1;
  index_record(pos);
  return AppendReceipt{pos, head_};
}

void ProvStore::index_record(std::size_t pos) {
  const LogRecord& entry = records_[pos];
  if (const ProvNode* node = entry.node()) {
    node_pos_.emplace(node->id.text(), pos);
    if (auto alias = node->alias_of()) alias_in_[alias->text()].push_back(pos);
    if (auto subject = node->attr_string(attr::kDataSubject))
      by_subject_[*subject].push_back(pos);
    return;
  }
  const ProvEdge& edge = std::get<ProvEdge>(entry.record);
  out_edges_[edge.source.text()].push_back(pos);
  in_edges_[edge.target.text()].push_back(pos);
}

Result<void> ProvStore::check(const ProvNode& node) const {
  std::shared_lock lock(mutex_);
  return validate_for_append(node);
}

Result<void> ProvStore::check(const ProvEdge& edge) const {
  std::shared_lock lock(mutex_);
  return validate_for_append(edge);
}

Result<AppendReceipt> ProvStore::append(ProvNode node) {
  std::unique_lock lock(mutex_);
  if (auto check = validate_for_append(node); !check.ok()) return check.error();
  std::string bytes = canonical_serialize(node);
  return append_unlocked(std::move(node), bytes);
}

Result<AppendReceipt> ProvStore::append(ProvEdge edge) {
  std::unique_lock lock(mutex_);
  if (auto check = validate_for_append(edge); !check.ok()) return check.error();
  std::string bytes = canonical_serialize(edge);
  return append_unlocked(std::move(edge), bytes);
}

std::optional<std::size_t> ProvStore::verify_chain() const {
  std::shared_lock lock(mutex_);
  Digest running = kGenesisDigest;
  for (std::size_t pos = 0; pos < records_.size(); ++pos) {
    running = chain_hash(running, record_bytes(records_[pos].record));
    if (running != records_[pos].hash) return pos;
  }
  return std::nullopt;
}

const LogRecord& ProvStore::record_at(std::size_t pos) const {
  std::shared_lock lock(mutex_);
  return records_.at(pos);
}

const ProvNode* ProvStore::find_node(const std::string& id_text,
                                     std::size_t bound) const {
  std::shared_lock lock(mutex_);
  auto it = node_pos_.find(id_text);
  if (it == node_pos_.end() || it->second >= bound) return nullptr;
  return records_[it->second].node();
}

std::optional<std::size_t> ProvStore::node_position(const std::string& id_text) const {
  std::shared_lock lock(mutex_);
  auto it = node_pos_.find(id_text);
  if (it == node_pos_.end()) return std::nullopt;
  return it->second;
}

std::vector<const ProvEdge*> ProvStore::out_edges(const std::string& id_text,
                                                  std::size_t bound) const {
  std::shared_lock lock(mutex_);
  std::vector<const ProvEdge*> out;
  auto it = out_edges_.find(id_text);
  if (it == out_edges_.end()) return out;
  for (std::size_t pos : it->second)
    if (pos < bound) out.push_back(records_[pos].edge());
  return out;
}

std::vector<const ProvEdge*> ProvStore::in_edges(const std::string& id_text,
                                                 std::size_t bound) const {
  std::shared_lock lock(mutex_);
  std::vector<const ProvEdge*> out;
  auto it = in_edges_.find(id_text);
  if (it == in_edges_.end()) return out;
  for (std::size_t pos : it->second)
    if (pos < bound) out.push_back(records_[pos].edge());
  return out;
}

std::vector<const ProvNode*> ProvStore::aliases_of(const std::string& id_text,
                                                   std::size_t bound) const {
  std::shared_lock lock(mutex_);
  std::vector<const ProvNode*> out;
  auto it = alias_in_.find(id_text);
  if (it == alias_in_.end()) return out;
  for (std::size_t pos : it->second)
    if (pos < bound) out.push_back(records_[pos].node());
  return out;
}

std::vector<const ProvNode*> ProvStore::entities_of_subject(const std::string& subject,
                                                            std::size_t bound) const {
  std::shared_lock lock(mutex_);
  std::vector<const ProvNode*> out;
  auto it = by_subject_.find(subject);
  if (it == by_subject_.end()) return out;
  for (std::size_t pos : it->second)
    if (pos < bound) out.push_back(records_[pos].node());
  return out;
}

void ProvStore::for_each_record(
    const std::function<void(std::size_t, const LogRecord&)>& fn,
    std::size_t bound) const {
  std::vector<const LogRecord*> view;
  {
    std::shared_lock lock(mutex_);
    const std::size_t limit = std::min(bound, records_.size());
    view.reserve(limit);
    for (std::size_t pos = 0; pos < limit; ++pos) view.push_back(&records_[pos]);
  }
  for (std::size_t pos = 0; pos < view.size(); ++pos) fn(pos, *view[pos]);
}

// ── Persistence ──────────────────────────────────────────────────────────

Result<void> export_store(const ProvStore& store, std::ostream& out) {
  ojson header;
  header["format"] = kLogFormatName;
  header["version"] = kLogFormatVersion;
  header["domain"] = store.domain();
  out << header.dump() << '\n';

  store.for_each_record([&](std::size_t pos, const LogRecord& entry) {
    ojson line;
    line["seq"] = pos;
    line["hash"] = to_hex(entry.hash);
    line["record"] = record_to_json(entry.record);
    out << line.dump() << '\n';
  });

  if (!out)
    return make_error(Errc::io_error, "write failed while exporting store '" +
                                          store.domain() + "'");
  return {};
}

Result<void> export_store(const ProvStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    return make_error(Errc::io_error, "cannot open " + path.string() + " for writing");
  return export_store(store, out);
}

Result<std::unique_ptr<ProvStore>> import_store(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    // Empty stream: degenerate empty store, head stays at the genesis value.
    return std::make_unique<ProvStore>("");
  }
  auto domain = parse_header_line(line);
  if (!domain.ok()) return domain.error();

  auto store = std::make_unique<ProvStore>(domain.take());
  std::size_t line_no = 1;
  std::size_t expected_seq = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string at = "line " + std::to_string(line_no) + ": ";
    ParsedLine parsed;
    if (!parse_record_line(line, parsed))
      return make_error(Errc::malformed_record, at + parsed.defect);
    if (parsed.seq != expected_seq)
      return make_error(Errc::malformed_record,
                        at + "seq " + std::to_string(parsed.seq) + ", expected " +
                            std::to_string(expected_seq));

    Result<AppendReceipt> receipt =
        parsed.record.index() == 0
            ? store->append(std::get<ProvNode>(std::move(parsed.record)))
            : store->append(std::get<ProvEdge>(std::move(parsed.record)));
    if (!receipt.ok())
      return make_error(Errc::malformed_record, at + receipt.error().message);
    if (receipt.value().head != parsed.declared)
      return make_error(Errc::chain_mismatch,
                        at + "declared hash does not match recomputation");
    ++expected_seq;
  }
  if (in.bad()) return make_error(Errc::io_error, "read failed while importing store");
  return store;
}

Result<std::unique_ptr<ProvStore>> import_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    return make_error(Errc::io_error, "cannot open " + path.string() + " for reading");
  return import_store(in);
}

Result<FileVerifyReport> verify_log_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    return make_error(Errc::io_error, "cannot open " + path.string() + " for reading");

  std::string line;
  if (!std::getline(in, line))
    return make_error(Errc::malformed_record, "empty file: missing header line");
  auto domain = parse_header_line(line);
  if (!domain.ok()) return domain.error();

  FileVerifyReport report;
  report.domain = domain.take();

  Digest running = kGenesisDigest;
  std::size_t pos = 0;
  while (std::getline(in, line)) {
    ParsedLine parsed;
    const bool shape_ok = parse_record_line(line, parsed) && parsed.seq == pos;
    if (!shape_ok ||
        chain_hash(running, record_bytes(parsed.record)) != parsed.declared) {
      report.first_corrupt = pos;
      return report;
    }
    running = parsed.declared;
    report.records = ++pos;
  }
  if (in.bad()) return make_error(Errc::io_error, "read failed while verifying " +
                                                      path.string());
  return report;
}

// ── Federation ───────────────────────────────────────────────────────────

std::string_view to_string(Visibility v) {
  return v == Visibility::full ? "full" : "agents-only";
}

std::optional<Visibility> visibility_from(std::string_view name) {
  if (name == "full") return Visibility::full;
  if (name == "agents-only") return Visibility::agents_only;
  return std::nullopt;
}

ProvStore& Federation::add_store(std::string domain, Visibility visibility) {
  auto it = stores_.find(domain);
  if (it != stores_.end()) return *it->second;
  auto store = std::make_unique<ProvStore>(domain);
  ProvStore& ref = *store;
  visibility_[domain] = visibility;
  stores_.emplace(std::move(domain), std::move(store));
  return ref;
}

Result<void> Federation::adopt_store(std::unique_ptr<ProvStore> store,
                                     Visibility visibility) {
  const std::string domain = store->domain();
  if (stores_.count(domain))
    return make_error(Errc::validation_failed,
                      "a store for domain '" + domain + "' is already registered");
  visibility_[domain] = visibility;
  stores_.emplace(domain, std::move(store));
  return {};
}

ProvStore* Federation::store(const std::string& domain) {
  auto it = stores_.find(domain);
  return it == stores_.end() ? nullptr : it->second.get();
}

const ProvStore* Federation::store(const std::string& domain) const {
  auto it = stores_.find(domain);
  return it == stores_.end() ? nullptr : it->second.get();
}

std::vector<std::string> Federation::domains() const {
  std::vector<std::string> out;
  out.reserve(stores_.size());
  for (const auto& [domain, _] : stores_) out.push_back(domain);
  return out;
}

Visibility Federation::visibility(const std::string& domain) const {
  auto it = visibility_.find(domain);
  return it == visibility_.end() ? Visibility::full : it->second;
}

void Federation::set_visibility(const std::string& domain, Visibility visibility) {
  visibility_[domain] = visibility;
}

SnapshotBounds Federation::snapshot() const {
  SnapshotBounds bounds;
  for (const auto& [domain, store] : stores_) bounds[domain] = store->size();
  return bounds;
}

std::size_t Federation::bound_for(const SnapshotBounds* bounds,
                                  const std::string& domain) {
  if (!bounds) return ProvStore::kNoBound;
  auto it = bounds->find(domain);
  return it == bounds->end() ? 0 : it->second;
}

Resolution Federation::resolve(const QualifiedId& id,
                               std::string_view requesting_domain,
                               const SnapshotBounds* bounds) const {
  const ProvStore* owner = store(id.domain);
  if (!owner) return Unresolvable{id};
  const ProvNode* node = owner->find_node(id.text(), bound_for(bounds, id.domain));
  if (!node) return Unresolvable{id};
  if (requesting_domain == id.domain || requesting_domain == kRegulatorDomain ||
      visibility(id.domain) == Visibility::full || node->kind == NodeKind::Agent)
    return node;
  return Redacted{id, node->kind};
}

}  // namespace decprov
