// decprov — command-line front end for the provenance engine.
//
//   decprov run <scenario> -o <dir>     execute a scenario, export the logs
//   decprov query <kind> ...            lineage | impact | inventory | erasure
//                                       | unexpected
//   decprov verify [-C dir]             hash-chain integrity check
//   decprov export [-C dir]             whole-federation graph dump
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 target not found,
// 4 integrity failure.

#include "decprov/capture.hpp"
#include "decprov/json.hpp"
#include "decprov/model.hpp"
#include "decprov/query.hpp"
#include "decprov/report.hpp"
#include "decprov/simulator.hpp"
#include "decprov/store.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using namespace decprov;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;
constexpr int kNotFound = 3;
constexpr int kIntegrity = 4;

int fail(int code, const std::string& message) {
  std::cerr << "decprov: " << message << "\n";
  return code;
}

bool color_enabled() {
  const char* value = std::getenv("DECPROV_COLOR");
  return value && std::string(value) == "1";
}

int exit_code_for(const Error& error) {
  switch (error.code) {
    case Errc::unknown_root:
    case Errc::unknown_node:
      return kNotFound;
    default:
      return kDataError;
  }
}

std::vector<fs::path> provlog_files(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::exists(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".provlog")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

// Reads per-domain visibility out of a run report, when one is present.
std::map<std::string, Visibility> stored_visibility(const fs::path& dir) {
  std::map<std::string, Visibility> levels;
  std::ifstream in(dir / "run-report.json", std::ios::binary);
  if (!in) return levels;
  auto doc = nlohmann::json::parse(in, nullptr, false);
  if (!doc.is_object() || !doc.contains("domains") || !doc["domains"].is_array())
    return levels;
  for (const auto& entry : doc["domains"]) {
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string() ||
        !entry.contains("visibility") || !entry["visibility"].is_string())
      continue;
    if (auto level = visibility_from(entry["visibility"].get<std::string>()))
      levels.emplace(entry["name"].get<std::string>(), *level);
  }
  return levels;
}

struct LoadedFederation {
  Federation federation;
  std::size_t stores = 0;
};

// Imports every .provlog in the directory and restores visibility levels.
Result<LoadedFederation> load_federation(const fs::path& dir) {
  LoadedFederation loaded;
  for (const fs::path& file : provlog_files(dir)) {
    auto store = import_store(file);
    if (!store.ok())
      return make_error(store.error().code,
                        file.filename().string() + ": " + store.error().message);
    if (store.value()->domain().empty())
      return make_error(Errc::malformed_record,
                        file.filename().string() + ": missing header");
    if (auto adopted = loaded.federation.adopt_store(store.take()); !adopted.ok())
      return make_error(adopted.error().code,
                        file.filename().string() + ": " + adopted.error().message);
    ++loaded.stores;
  }
  for (const auto& [domain, level] : stored_visibility(dir))
    if (loaded.federation.store(domain))
      loaded.federation.set_visibility(domain, level);
  return loaded;
}

std::string requester_for(const Federation& fed, const std::string& as_domain,
                          bool regulator) {
  if (regulator) return std::string(kRegulatorDomain);
  if (!as_domain.empty()) return as_domain;
  auto domains = fed.domains();
  return domains.empty() ? std::string(kRegulatorDomain) : domains.front();
}

// ── run ──────────────────────────────────────────────────────────────────

ojson verdicts_to_json(const std::vector<PolicyVerdict>& verdicts) {
  ojson list = ojson::array();
  for (const PolicyVerdict& verdict : verdicts) {
    ojson entry;
    entry["rule"] = verdict.rule_id;
    entry["outcome"] = std::string(to_string(verdict.outcome));
    entry["explanation"] = verdict.explanation;
    list.push_back(std::move(entry));
  }
  return list;
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir) {
  auto scenario = load_scenario_file(scenario_path);
  if (!scenario.ok()) return fail(kDataError, scenario.error().message);
  auto result = run(scenario.value());
  if (!result.ok()) return fail(kDataError, result.error().message);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) return fail(kDataError, "cannot create " + out_dir + ": " + ec.message());

  ojson report;
  report["scenario"] = scenario_path;
  ojson domains = ojson::array();
  for (const std::string& name : result.value().federation.domains()) {
    const ProvStore* store = result.value().federation.store(name);
    const fs::path file = fs::path(out_dir) / (name + ".provlog");
    if (auto exported = export_store(*store, file); !exported.ok())
      return fail(kDataError, exported.error().message);
    ojson entry;
    entry["name"] = name;
    entry["visibility"] =
        std::string(to_string(result.value().federation.visibility(name)));
    entry["store"] = file.filename().string();
    entry["records"] = store->size();
    entry["head_hash"] = to_hex(store->head_hash());
    domains.push_back(std::move(entry));
  }
  report["domains"] = std::move(domains);

  ojson events = ojson::array();
  for (const EventRecord& record : result.value().events) {
    ojson entry;
    entry["at"] = record.at;
    entry["event"] = record.event;
    entry["outcome"] = record.outcome;
    if (record.produced) entry["produced"] = record.produced->text();
    if (!record.detail.empty()) entry["detail"] = record.detail;
    if (!record.verdicts.empty()) entry["verdicts"] = verdicts_to_json(record.verdicts);
    events.push_back(std::move(entry));
  }
  report["events"] = std::move(events);

  ojson alerts = ojson::array();
  for (const QualifiedId& alert : result.value().alerts) alerts.push_back(alert.text());
  report["alerts"] = std::move(alerts);

  std::ofstream out(fs::path(out_dir) / "run-report.json", std::ios::binary);
  if (!out) return fail(kDataError, "cannot write run-report.json");
  out << report.dump(2) << "\n";

  std::size_t blocked = 0;
  for (const EventRecord& record : result.value().events)
    if (record.outcome == "blocked") ++blocked;
  std::cout << result.value().events.size() << " events, " << blocked << " blocked, "
            << result.value().federation.domains().size() << " stores -> " << out_dir
            << "\n";
  return kOk;
}

// ── query ────────────────────────────────────────────────────────────────

int render_pipeline(const DecisionPipeline& pipeline, const std::string& format) {
  if (format == "json")
    std::cout << pipeline_to_json(pipeline).dump(2) << "\n";
  else if (format == "dot")
    std::cout << pipeline_to_dot(pipeline);
  else
    std::cout << pipeline_to_text(pipeline, color_enabled());
  return kOk;
}

int cmd_query(const std::string& kind, const std::string& target,
              const std::string& dir, const std::string& as_domain, bool regulator,
              std::size_t depth, const std::string& format,
              const std::string& flows_path) {
  auto loaded = load_federation(dir);
  if (!loaded.ok()) return fail(kDataError, loaded.error().message);
  const Federation& fed = loaded.value().federation;
  const std::string requester = requester_for(fed, as_domain, regulator);

  if (kind == "lineage" || kind == "impact") {
    auto root = parse_id(target);
    if (!root.ok()) return fail(kUsage, root.error().message);
    auto pipeline = kind == "lineage" ? lineage(fed, root.value(), depth, requester)
                                      : impact(fed, root.value(), depth, requester);
    if (!pipeline.ok())
      return fail(exit_code_for(pipeline.error()), pipeline.error().message);
    return render_pipeline(pipeline.value(), format);
  }

  if (format == "dot") return fail(kUsage, "dot output is for lineage/impact only");

  if (kind == "inventory") {
    auto entries = data_inventory(fed, target, requester);
    if (entries.empty()) return fail(kNotFound, "no entities for subject " + target);
    if (format == "json")
      std::cout << inventory_to_json(target, entries).dump(2) << "\n";
    else
      std::cout << inventory_to_text(target, entries);
    return kOk;
  }

  if (kind == "erasure") {
    ErasureReport report = erasure_set(fed, target);
    if (report.entities.empty())
      return fail(kNotFound, "no entities for subject " + target);
    if (format == "json")
      std::cout << erasure_to_json(target, report).dump(2) << "\n";
    else
      std::cout << erasure_to_text(target, report);
    return kOk;
  }

  // unexpected
  if (flows_path.empty())
    return fail(kUsage, "query unexpected requires --flows <file>");
  auto declaration = load_flow_declaration(fs::path(flows_path));
  if (!declaration.ok()) return fail(kDataError, declaration.error().message);
  auto findings = unexpected_flows(fed, declaration.value());
  if (format == "json")
    std::cout << flows_to_json(findings).dump(2) << "\n";
  else
    std::cout << flows_to_text(findings);
  return kOk;
}

// ── verify ───────────────────────────────────────────────────────────────

int cmd_verify(const std::string& dir) {
  const std::vector<fs::path> files = provlog_files(dir);
  if (files.empty()) {
    std::cout << "0 stores verified\n";
    return kOk;
  }
  bool corrupt = false;
  for (const fs::path& file : files) {
    auto report = verify_log_file(file);
    if (!report.ok())
      return fail(kDataError, file.filename().string() + ": " + report.error().message);
    const std::string name =
        report.value().domain.empty() ? file.filename().string() : report.value().domain;
    if (report.value().first_corrupt) {
      corrupt = true;
      std::cout << name << ": FIRST CORRUPT at record "
                << *report.value().first_corrupt << "\n";
    } else {
      std::cout << name << ": ok (" << report.value().records << " records)\n";
    }
  }
  return corrupt ? kIntegrity : kOk;
}

// ── export ───────────────────────────────────────────────────────────────

int cmd_export(const std::string& dir, const std::string& format) {
  auto loaded = load_federation(dir);
  if (!loaded.ok()) return fail(kDataError, loaded.error().message);
  const Federation& fed = loaded.value().federation;

  if (format == "json") {
    ojson doc;
    for (const std::string& name : fed.domains()) {
      const ProvStore* store = fed.store(name);
      ojson records = ojson::array();
      store->for_each_record([&](std::size_t, const LogRecord& record) {
        if (const ProvNode* node = record.node())
          records.push_back(node_to_json(*node));
        else
          records.push_back(edge_to_json(*record.edge()));
      });
      ojson entry;
      entry["records"] = std::move(records);
      entry["head_hash"] = to_hex(store->head_hash());
      doc[name] = std::move(entry);
    }
    std::cout << doc.dump(2) << "\n";
    return kOk;
  }

  // Whole-graph DOT: every node and edge of every store.
  std::cout << "digraph provenance {\n  rankdir=BT;\n  node [fontsize=10];\n";
  for (const std::string& name : fed.domains()) {
    fed.store(name)->for_each_record([&](std::size_t, const LogRecord& record) {
      auto escape = [](const std::string& text) {
        std::string out;
        for (char c : text) {
          if (c == '"' || c == '\\') out.push_back('\\');
          out.push_back(c);
        }
        return out;
      };
      auto quote = [&](const std::string& text) { return "\"" + escape(text) + "\""; };
      if (const ProvNode* node = record.node()) {
        const char* shape = node->kind == NodeKind::Activity
                                ? "box"
                                : node->kind == NodeKind::Agent ? "house" : "ellipse";
        std::cout << "  " << quote(node->id.text()) << " [label=\""
                  << escape(node->id.text()) << "\\n"
                  << escape(std::string(to_string(node->kind)) + ":" + node->node_type)
                  << "\", shape=" << shape << "];\n";
      } else {
        const ProvEdge* edge = record.edge();
        std::cout << "  " << quote(edge->source.text()) << " -> "
                  << quote(edge->target.text()) << " [label=\""
                  << to_string(edge->kind) << "\"];\n";
      }
    });
  }
  std::cout << "}\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decision provenance: record, verify, and query data flows"};
  app.name("decprov");
  app.require_subcommand(1);

  std::string scenario_path, out_dir = "out";
  CLI::App* run_cmd = app.add_subcommand("run", "execute a scenario");
  run_cmd->add_option("scenario", scenario_path, "scenario file")->required();
  run_cmd->add_option("-o,--out", out_dir, "output directory");

  std::string kind, target, dir = ".", as_domain, format = "text", flows_path;
  bool regulator = false;
  std::size_t depth = 64;
  CLI::App* query_cmd = app.add_subcommand("query", "run an accountability query");
  query_cmd->add_option("kind", kind, "lineage|impact|inventory|erasure|unexpected")
      ->required()
      ->check(CLI::IsMember({"lineage", "impact", "inventory", "erasure", "unexpected"}));
  query_cmd->add_option("target", target, "root id or data subject");
  query_cmd->add_option("-C,--dir", dir, "federation directory");
  query_cmd->add_option("--as", as_domain, "requesting domain");
  query_cmd->add_flag("--regulator", regulator, "query with regulator access");
  query_cmd->add_option("--depth", depth, "traversal depth limit");
  query_cmd->add_option("--format", format, "text|json|dot")
      ->check(CLI::IsMember({"text", "json", "dot"}));
  query_cmd->add_option("--flows", flows_path, "allowed-flow declaration file");

  std::string verify_dir = ".";
  CLI::App* verify_cmd = app.add_subcommand("verify", "check hash-chain integrity");
  verify_cmd->add_option("-C,--dir", verify_dir, "federation directory");

  std::string export_dir = ".", export_format = "dot";
  CLI::App* export_cmd = app.add_subcommand("export", "dump the federation graph");
  export_cmd->add_option("-C,--dir", export_dir, "federation directory");
  export_cmd->add_option("--format", export_format, "dot|json")
      ->check(CLI::IsMember({"dot", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (run_cmd->parsed()) return cmd_run(scenario_path, out_dir);
  if (query_cmd->parsed()) {
    if (kind != "unexpected" && target.empty())
      return fail(kUsage, "query " + kind + " requires a target argument");
    return cmd_query(kind, target, dir, as_domain, regulator, depth, format,
                     flows_path);
  }
  if (verify_cmd->parsed()) return cmd_verify(verify_dir);
  return cmd_export(export_dir, export_format);
}
