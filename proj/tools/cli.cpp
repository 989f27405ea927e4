#include "cli.hpp"

#include <CLI11.hpp>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "htwin/error.hpp"
#include "htwin/fixtures.hpp"
#include "htwin/geojson_io.hpp"
#include "htwin/service.hpp"

namespace htwin::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

HttpServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

// Inputs are looked up in the working directory first, then in the data
// directory; relative outputs always land in the data directory.
fs::path input_path(const std::string& p, const ServiceConfig& cfg) {
  const fs::path path(p);
  if (path.is_absolute() || fs::exists(path)) return path;
  return cfg.data_dir / path;
}

fs::path output_path(const std::string& p, const ServiceConfig& cfg) {
  const fs::path path(p);
  return path.is_absolute() ? path : cfg.data_dir / path;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << text;
  f.close();
  if (!f) throw Error(Errc::Io, "cannot write " + p.string());
}

Instant instant_arg(const std::string& text, const char* name) {
  try {
    return parse_instant(text);
  } catch (const Error&) {
    throw CLI::ValidationError(name, "not an RFC 3339 instant or unix seconds: " + text);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heritage-centre digital twin data hub", "htwin"};
  app.require_subcommand(1);
  std::string config_arg;
  app.add_option("--config", config_arg, "Config file (default: $HERITAGE_TWIN_CONFIG, then ./heritage_twin.toml)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string listen_override;
  serve->add_option("--config", config_arg, "Config file");
  serve->add_option("--listen", listen_override, "host:port, overriding the config");

  auto* ingest = app.add_subcommand("ingest", "Ingest an NDJSON file of readings");
  std::string ingest_file;
  ingest->add_option("file", ingest_file, "NDJSON readings")->required();

  auto* simulate = app.add_subcommand("simulate", "Run a flow simulation scenario");
  std::string scenario_file, frames_out;
  simulate->add_option("scenario", scenario_file, "Scenario request JSON")->required();
  simulate->add_option("--out", frames_out, "Frame NDJSON output")->required();

  auto* exp = app.add_subcommand("export", "Write one GeoJSON layer");
  std::string layer_arg, at_arg, from_arg, to_arg, export_out, frames_in;
  std::size_t step = 0;
  exp->add_option("layer", layer_arg, "zones | sensors | hotspots | heritage | flow")->required();
  exp->add_option("--at", at_arg, "Instant for the zones layer (default: now)");
  exp->add_option("--from", from_arg, "Window start for the hotspots layer");
  exp->add_option("--to", to_arg, "Window end for the hotspots layer");
  exp->add_option("--frames", frames_in, "Frame NDJSON for the flow layer");
  exp->add_option("--step", step, "Frame step for the flow layer");
  exp->add_option("--out", export_out, "Output file (default: <layer>_<unix>.geojson)");

  auto* report = app.add_subcommand("report", "Print an analytics report");
  auto* corr = report->add_subcommand("correlations", "Density vs environmental metric");
  report->require_subcommand(1);
  std::string zone_arg, metric_arg = "noise_db", corr_from, corr_to;
  corr->add_option("--zone", zone_arg, "Zone id")->required();
  corr->add_option("--metric", metric_arg, "noise_db | temperature_c");
  corr->add_option("--from", corr_from, "Window start");
  corr->add_option("--to", corr_to, "Window end");

  auto* gen = app.add_subcommand("gen-fixtures", "Write a synthetic dataset");
  FixtureOptions fx;
  std::string fixtures_out = "fixtures";
  gen->add_option("--zones", fx.zones, "Zone count")->check(CLI::PositiveNumber);
  gen->add_option("--days", fx.days, "Days of readings")->check(CLI::PositiveNumber);
  gen->add_option("--seed", fx.seed, "Random seed");
  gen->add_option("--readings", fx.readings, "Total NDJSON lines");
  gen->add_option("--out", fixtures_out, "Output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "htwin: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const FixtureSet set = generate_fixtures(fx);
      set.write(fixtures_out);
      out << "wrote fixtures to " << fs::absolute(fixtures_out).string() << "\n";
      return kExitOk;
    }

    const ServiceConfig cfg = [&] {
      try {
        return load_config(resolve_config_path(config_arg.empty() ? std::nullopt : std::optional(config_arg)));
      } catch (const Error& e) {
        throw CLI::ValidationError("--config", e.detail());
      }
    }();

    if (simulate->parsed()) {
      const ZoneSet zones = zones_from_geojson(read_json_file(cfg.zones_path));
      const StreetGraph graph = graph_from_geojson(read_json_file(cfg.graph_path), zones);
      const json doc = read_json_file(input_path(scenario_file, cfg));
      const SimulationRequest req = simulation_request_from_json(doc);
      FlowSimulator sim(graph, req.params, req.scenario);
      const fs::path path = output_path(frames_out, cfg);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      if (!f) throw Error(Errc::Io, "cannot write " + path.string());
      std::size_t frames = 0;
      sim.run([&](const SimFrame& frame) {
        f << frame_to_ndjson_line(frame) << '\n';
        ++frames;
      });
      f.close();
      if (!f) throw Error(Errc::Io, "cannot write " + path.string());
      out << "wrote " << frames << " frames to " << path.string() << "\n";
      return kExitOk;
    }

    // Remaining commands act on the loaded hub.
    const Instant at = at_arg.empty() ? Ingestor::system_now() : instant_arg(at_arg, "--at");
    std::optional<LayerName> layer;
    if (exp->parsed()) {
      layer = parse_layer_name(layer_arg);
      if (!layer) throw CLI::ValidationError("layer", "unknown layer '" + layer_arg + "'");
      if (*layer == LayerName::Flow && frames_in.empty()) {
        throw CLI::ValidationError("--frames", "the flow layer needs --frames");
      }
    }
    Metric corr_metric = Metric::NoiseDb;
    if (corr->parsed()) {
      const auto m = parse_metric(metric_arg);
      if (!m) throw CLI::ValidationError("--metric", "unknown metric '" + metric_arg + "'");
      corr_metric = *m;
    }

    auto hub = Hub::open(cfg);

    if (ingest->parsed()) {
      const fs::path path = input_path(ingest_file, cfg);
      std::ifstream in(path, std::ios::binary);
      if (!in) throw Error(Errc::Io, "cannot read " + path.string());
      Ingestor ingestor = hub->ingestor();
      const IngestReport rep = ingestor.ingest_batch(in);
      out << rep.to_json().dump() << "\n";
      return kExitOk;
    }

    if (layer) {
      const LayerExporter exporter = hub->exporter();
      std::string text;
      switch (*layer) {
        case LayerName::Zones: text = exporter.export_zones(at); break;
        case LayerName::Sensors: text = exporter.export_sensors(); break;
        case LayerName::Hotspots:
          text = exporter.export_hotspots(from_arg.empty() ? kBeginningOfTime : instant_arg(from_arg, "--from"),
                                          to_arg.empty() ? kEndOfTime : instant_arg(to_arg, "--to"));
          break;
        case LayerName::Heritage: text = exporter.export_heritage(); break;
        case LayerName::Flow: {
          const auto frames = frames_from_ndjson(read_file(input_path(frames_in, cfg)));
          text = exporter.export_flow(frames, step);
          break;
        }
      }
      const fs::path path = output_path(export_out.empty() ? layer_file_name(*layer, at) : export_out, cfg);
      write_file(path, text);
      out << "wrote " << path.string() << "\n";
      return kExitOk;
    }

    if (corr->parsed()) {
      const auto rep = hub->analyzer().correlation(zone_arg, corr_metric,
                                                   corr_from.empty() ? kBeginningOfTime : instant_arg(corr_from, "--from"),
                                                   corr_to.empty() ? kEndOfTime : instant_arg(corr_to, "--to"));
      out << rep.to_json().dump(2) << "\n";
      return kExitOk;
    }

    if (serve->parsed()) {
      std::string host = cfg.host;
      int port = cfg.port;
      if (!listen_override.empty()) {
        const auto colon = listen_override.rfind(':');
        if (colon == std::string::npos) throw CLI::ValidationError("--listen", "expected host:port");
        host = listen_override.substr(0, colon);
        port = std::stoi(listen_override.substr(colon + 1));
      }
      Api api(*hub, {cfg.workers, cfg.auth_token});
      HttpServer server(api);
      const int bound = server.bind(host, port);
      if (bound < 0) throw Error(Errc::Io, "cannot bind " + host + ":" + std::to_string(port));
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      out << "listening on " << host << ":" << bound << std::endl;
      server.listen();
      g_server = nullptr;
      return kExitOk;
    }
  } catch (const CLI::ValidationError& e) {
    err << "htwin: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "htwin: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "htwin: " << e.what() << "\n";
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace htwin::cli
