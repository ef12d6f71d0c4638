// Command-line entry point: schema inspection, offline AD replay, scripted
// sessions and the live session server.

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "tracelens/behavior.hpp"
#include "tracelens/error.hpp"
#include "tracelens/server.hpp"
#include "tracelens/session.hpp"
#include "tracelens/temporal.hpp"

namespace {

using namespace tracelens;

net::Server* g_server = nullptr;

void HandleSignal(int) {
  if (g_server) g_server->Stop();
}

IngestOptions MakeIngestOptions(const std::string& delimiter, const std::string& types) {
  IngestOptions options;
  if (delimiter.size() != 1) throw Error(ErrorCode::kProtocolError, "delimiter must be one character");
  options.delimiter = delimiter == "\\t" ? '\t' : delimiter.front();
  std::stringstream list(types);
  std::string item;
  while (std::getline(list, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.rfind('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kProtocolError, "type override '" + item + "' is not name=N|Q|T");
    auto type = ParseDatatype(item.substr(eq + 1));
    if (!type) throw Error(ErrorCode::kProtocolError, "unknown datatype in '" + item + "'");
    options.type_overrides[item.substr(0, eq)] = *type;
  }
  return options;
}

TargetSet LoadTargets(const Dataset& dataset, const std::string& path) {
  TargetSet targets(dataset);
  if (path.empty()) return targets;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocolError, std::string("targets file: ") + e.what());
  }
  if (!doc.is_array()) doc = nlohmann::json::array({doc});
  for (const auto& block : doc) targets.Set(TargetFromJson(dataset, block));
  return targets;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interaction-trace engine for visual data exploration"};
  app.require_subcommand(1);

  std::string delimiter = ",";
  std::string types;

  auto* ingest = app.add_subcommand("ingest", "Print the inferred schema of a dataset as JSON");
  std::string ingest_path;
  ingest->add_option("path", ingest_path, "Delimited text or JSON row array")->required();
  ingest->add_option("--delimiter", delimiter, "Field delimiter (use \\t for tab)");
  ingest->add_option("--types", types, "Datatype overrides, e.g. year=T,price=Q");

  auto* replay = app.add_subcommand("replay", "Recompute AD over time from an event log");
  std::string replay_dataset, replay_log, replay_out, replay_targets;
  replay->add_option("dataset", replay_dataset, "Dataset file")->required();
  replay->add_option("log", replay_log, "Session event log (JSONL)")->required();
  replay->add_option("--out", replay_out, "CSV destination (default: stdout)");
  replay->add_option("--targets", replay_targets, "JSON target config block(s)");
  replay->add_option("--delimiter", delimiter, "Field delimiter");
  replay->add_option("--types", types, "Datatype overrides");

  auto* snapshot = app.add_subcommand("snapshot", "Print distribution cards for an event log");
  std::string snapshot_dataset, snapshot_log, snapshot_targets;
  snapshot->add_option("dataset", snapshot_dataset, "Dataset file")->required();
  snapshot->add_option("log", snapshot_log, "Session event log (JSONL)")->required();
  snapshot->add_option("--targets", snapshot_targets, "JSON target config block(s)");
  snapshot->add_option("--delimiter", delimiter, "Field delimiter");
  snapshot->add_option("--types", types, "Datatype overrides");

  auto* script = app.add_subcommand("script", "Apply JSONL client messages to one session, print frames");
  std::string script_input = "-", script_dataset, script_archive, script_events;
  std::string script_condition = "awareness";
  script->add_option("messages", script_input, "JSONL messages (default: stdin)");
  script->add_option("--dataset", script_dataset, "Start the session on this dataset");
  script->add_option("--archive", script_archive, "Write the session archive here afterwards");
  script->add_option("--events", script_events, "Write the event log (JSONL) here afterwards");
  script->add_option("--condition", script_condition, "awareness or control")
      ->check(CLI::IsMember({"awareness", "control"}));
  script->add_option("--delimiter", delimiter, "Field delimiter");
  script->add_option("--types", types, "Datatype overrides");

  auto* serve = app.add_subcommand("serve", "Run the live session server");
  int port = 7400;
  int http_port = 0;
  std::string condition = "awareness";
  std::string host = "127.0.0.1";
  std::string serve_dataset;
  serve->add_option("--port", port, "Framed-channel TCP port")->check(CLI::Range(0, 65535));
  serve->add_option("--http-port", http_port, "HTTP fallback port (default: port + 1)")
      ->check(CLI::Range(0, 65535));
  serve->add_option("--condition", condition, "awareness or control")
      ->check(CLI::IsMember({"awareness", "control"}));
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--dataset", serve_dataset, "Preload every session with this dataset");
  serve->add_option("--delimiter", delimiter, "Field delimiter");
  serve->add_option("--types", types, "Datatype overrides");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const Dataset dataset = IngestFile(ingest_path, MakeIngestOptions(delimiter, types));
      std::cout << SchemaToJson(dataset) << '\n';
      return 0;
    }
    if (*replay) {
      const Dataset dataset = IngestFile(replay_dataset, MakeIngestOptions(delimiter, types));
      const auto events = ReadEventLogFile(replay_log);
      const auto series = ReplaySeries(dataset, events, LoadTargets(dataset, replay_targets));
      if (replay_out.empty()) {
        WriteSeriesCsv(std::cout, series);
      } else {
        std::ofstream out(replay_out, std::ios::binary);
        if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + replay_out + "'");
        WriteSeriesCsv(out, series);
      }
      return 0;
    }
    if (*snapshot) {
      const Dataset dataset = IngestFile(snapshot_dataset, MakeIngestOptions(delimiter, types));
      const TargetSet targets = LoadTargets(dataset, snapshot_targets);
      std::vector<std::string> names;
      for (const auto& a : dataset.schema()) names.push_back(a.name);
      const Ledger ledger =
          ReplayLedger(dataset.row_count(), names, ReadEventLogFile(snapshot_log));
      const BehaviorModel model(dataset);
      nlohmann::ordered_json cards = nlohmann::ordered_json::array();
      for (size_t a = 0; a < names.size(); ++a)
        cards.push_back(SnapshotToJson(
            model.Snapshot(ledger.datapoint_counters(), a, targets.Get(names[a]))));
      std::cout << cards.dump(2) << '\n';
      return 0;
    }
    if (*script) {
      SessionOptions options;
      options.condition = *ParseCondition(script_condition);
      Session session = script_dataset.empty()
                            ? Session(options)
                            : Session(std::make_shared<const Dataset>(IngestFile(
                                          script_dataset, MakeIngestOptions(delimiter, types))),
                                      options);
      std::ifstream file;
      if (script_input != "-") {
        file.open(script_input);
        if (!file) throw Error(ErrorCode::kIoError, "cannot open '" + script_input + "'");
      }
      std::istream& in = script_input == "-" ? std::cin : file;
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        nlohmann::json message;
        try {
          message = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorCode::kProtocolError, std::string("malformed message: ") + e.what());
        }
        for (const Frame& frame : session.HandleMessage(message)) std::cout << frame.dump() << '\n';
      }
      if (!script_archive.empty()) {
        std::ofstream out(script_archive, std::ios::binary);
        if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + script_archive + "'");
        out << session.SaveArchive();
      }
      if (!script_events.empty()) {
        std::ofstream out(script_events, std::ios::binary);
        if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + script_events + "'");
        WriteEventLog(out, session.EventLog());
      }
      return 0;
    }
    if (*serve) {
      net::ServerOptions options;
      options.host = host;
      options.port = static_cast<uint16_t>(port);
      options.http_port = static_cast<uint16_t>(http_port != 0 ? http_port : port == 0 ? 0 : port + 1);
      options.session.condition = *ParseCondition(condition);
      if (!serve_dataset.empty()) {
        options.dataset = std::make_shared<const Dataset>(
            IngestFile(serve_dataset, MakeIngestOptions(delimiter, types)));
      }
      net::Server server(std::move(options));
      server.Start();
      g_server = &server;
      std::signal(SIGINT, HandleSignal);
      std::signal(SIGTERM, HandleSignal);
      std::cerr << "tracelens: framed channel on " << host << ':' << server.port()
                << ", HTTP on " << host << ':' << server.http_port() << " (" << condition
                << ")\n";
      server.Wait();
      g_server = nullptr;
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << ErrorCodeName(e.code()) << ": " << e.what() << '\n';
    return 2;
  }
  return 0;
}
