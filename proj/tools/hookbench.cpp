// hookbench: command line front end.
//
//   hookbench serve --port P [--delay-us D]
//   hookbench load --target HOST:PORT --requests N [--keyword K --keyword-every M] [--reconnect] --out samples.csv
//   hookbench analyze --a A.csv --b B.csv --warmup W --alpha X --out report.json
//   hookbench run --config FILE
//   hookbench manifests --mode same-pod|cross-node --out DIR
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime failure.

#include <signal.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hookbench/hookbench.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::atomic<bool> g_stop{false};

extern "C" void on_terminate(int) { g_stop.store(true); }

void install_signal_handlers() {
  struct sigaction sa {};
  sa.sa_handler = on_terminate;
  sigemptyset(&sa.sa_mask);
  ::sigaction(SIGTERM, &sa, nullptr);
  ::sigaction(SIGINT, &sa, nullptr);
  ::signal(SIGPIPE, SIG_IGN);
}

struct ServeArgs {
  std::uint16_t port = 18080;
  std::uint32_t delay_us = 0;
  std::size_t max_connections = 128;
};

int cmd_serve(const ServeArgs& args) {
  install_signal_handlers();
  hookbench::sut::SutConfig cfg{args.port, args.delay_us, args.max_connections};
  std::optional<hookbench::sut::Server> server;
  try {
    server.emplace(cfg);
  } catch (const hookbench::Error& e) {
    std::cerr << "serve: " << e.what() << "\n";
    return kExitRuntime;
  }
  std::cerr << "serving on port " << server->port() << " (delay " << args.delay_us << " us)\n";
  server->run(g_stop);
  std::cerr << "served " << server->requests_served() << " requests\n";
  return 0;
}

struct LoadArgs {
  std::string target;
  std::uint64_t requests = 50000;
  std::optional<std::string> keyword;
  std::optional<std::uint64_t> keyword_every;
  bool reconnect = false;
  std::string out;
};

int cmd_load(const LoadArgs& args) {
  ::signal(SIGPIPE, SIG_IGN);
  hookbench::loadgen::LoadConfig cfg;
  try {
    cfg.target = hookbench::net::parse_endpoint(args.target);
    cfg.total_requests = args.requests;
    cfg.keyword_payload = args.keyword;
    cfg.keyword_every = args.keyword_every;
    cfg.reconnect_per_request = args.reconnect;
    cfg.validate();
    if (cfg.keyword_every && !cfg.keyword_payload) throw hookbench::Error("--keyword-every requires --keyword");
  } catch (const hookbench::Error& e) {
    std::cerr << "load: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    const auto result = hookbench::loadgen::run_load(cfg);
    hookbench::io::write_samples_csv(result.samples, args.out);
    std::cerr << "ok=" << result.ok_count << " blocked=" << result.blocked_count
              << " transport_error=" << result.transport_error_count << "\n";
  } catch (const hookbench::Error& e) {
    std::cerr << "load: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

struct AnalyzeArgs {
  std::string a, b;
  std::string label_a = "a", label_b = "b";
  std::size_t warmup = hookbench::stats::kDefaultWarmup;
  double alpha = hookbench::stats::kDefaultAlpha;
  std::string out;
  std::optional<std::string> plots_dir;
  std::optional<std::string> hook_timing_a, hook_timing_b;
};

int cmd_analyze(const AnalyzeArgs& args) {
  using namespace hookbench;
  if (!is_safe_label(args.label_a) || !is_safe_label(args.label_b) || args.label_a == args.label_b) {
    std::cerr << "analyze: labels must be distinct and use [A-Za-z0-9._-]\n";
    return kExitUsage;
  }
  if (!(args.alpha > 0.0 && args.alpha < 1.0)) {
    std::cerr << "analyze: --alpha must lie in (0, 1)\n";
    return kExitUsage;
  }
  try {
    std::array<ConditionInput, 2> inputs;
    const std::array<const std::string*, 2> files{&args.a, &args.b};
    const std::array<const std::string*, 2> labels{&args.label_a, &args.label_b};
    const std::array<const std::optional<std::string>*, 2> timings{&args.hook_timing_a, &args.hook_timing_b};
    for (std::size_t i = 0; i < 2; ++i) {
      inputs[i].descriptor.label = *labels[i];
      inputs[i].samples = io::read_samples_csv(*files[i]);
      inputs[i].samples_file = *files[i];
      if (*timings[i]) {
        inputs[i].hook_timing = io::read_hook_timing_summary(**timings[i]);
        inputs[i].descriptor.hook_layer = HookLayer::library;
      }
    }
    ojson echo;
    echo["a"] = args.a;
    echo["b"] = args.b;
    echo["warmup"] = args.warmup;
    echo["alpha"] = args.alpha;
    const auto report = build_report(std::move(inputs), args.warmup, args.alpha, echo);
    io::write_file(args.out, render_report_json(report));
    if (args.plots_dir) plots::render_plots(report, *args.plots_dir);
    const auto& t = report.t_test;
    std::printf("n=%zu t=%.6f df=%ld s_p=%.3f ns p=%.6g %s at alpha=%g\n", t.n, t.t, t.df, t.pooled_sd, t.p_value,
                t.significant ? "significant" : "not significant", t.alpha);
  } catch (const ParseError& e) {
    std::cerr << "analyze: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "analyze: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

int cmd_run(const std::string& config_path) {
  using namespace hookbench;
  ::signal(SIGPIPE, SIG_IGN);
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }
  try {
    const auto report = run_experiment(cfg);
    const auto& t = report.t_test;
    std::printf("%s vs %s: n=%zu t=%.6f p=%.6g %s (report: %s)\n", report.conditions[0].descriptor.label.c_str(),
                report.conditions[1].descriptor.label.c_str(), t.n, t.t, t.p_value,
                t.significant ? "significant" : "not significant", (cfg.output_dir / "report.json").c_str());
  } catch (const Error& e) {
    std::cerr << "run: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

struct ManifestArgs {
  std::string mode;
  std::string out;
  hookbench::manifests::ManifestOptions options;
  std::optional<std::string> hook_library;
  std::vector<std::string> hook_keywords;
};

int cmd_manifests(ManifestArgs args) {
  using namespace hookbench;
  manifests::Mode mode;
  try {
    mode = manifests::parse_mode(args.mode);
  } catch (const Error& e) {
    std::cerr << "manifests: " << e.what() << "\n";
    return kExitUsage;
  }
  args.options.hook_library = args.hook_library;
  args.options.hook_keywords = args.hook_keywords;
  try {
    for (const auto& p : manifests::generate_manifests(mode, args.out, args.options)) std::cout << p.string() << "\n";
  } catch (const RuntimeFailure& e) {
    std::cerr << "manifests: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const Error& e) {
    std::cerr << "manifests: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latency benchmark harness for library-level function hooks"};
  app.require_subcommand(1);

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the Hello World HTTP server");
  serve_cmd->add_option("--port", serve.port, "TCP port to listen on")->required();
  serve_cmd->add_option("--delay-us", serve.delay_us, "Busy-wait per request in microseconds");
  serve_cmd->add_option("--max-connections", serve.max_connections, "Concurrent connection limit")
      ->check(CLI::PositiveNumber);

  LoadArgs load;
  auto* load_cmd = app.add_subcommand("load", "Closed-loop load generation with RTT recording");
  load_cmd->add_option("--target", load.target, "HOST:PORT")->required();
  load_cmd->add_option("--requests", load.requests, "Number of request-response interchanges")
      ->check(CLI::PositiveNumber);
  load_cmd->add_option("--keyword", load.keyword, "Payload inserted into the request target");
  load_cmd->add_option("--keyword-every", load.keyword_every, "Insert the keyword into every k-th request")
      ->check(CLI::PositiveNumber);
  load_cmd->add_flag("--reconnect", load.reconnect, "Open a new connection per request");
  load_cmd->add_option("--out", load.out, "Sample CSV output path")->required();

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Trim, test and summarize two sample files");
  analyze_cmd->add_option("--a", analyze.a, "Samples of condition A")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--b", analyze.b, "Samples of condition B")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--warmup", analyze.warmup, "Warm-up samples to drop");
  analyze_cmd->add_option("--alpha", analyze.alpha, "Significance level");
  analyze_cmd->add_option("--out", analyze.out, "Report JSON path")->required();
  analyze_cmd->add_option("--label-a", analyze.label_a, "Label of condition A");
  analyze_cmd->add_option("--label-b", analyze.label_b, "Label of condition B");
  analyze_cmd->add_option("--plots", analyze.plots_dir, "Directory for SVG plots");
  analyze_cmd->add_option("--hook-timing-a", analyze.hook_timing_a, "Hook timing CSV of condition A")
      ->check(CLI::ExistingFile);
  analyze_cmd->add_option("--hook-timing-b", analyze.hook_timing_b, "Hook timing CSV of condition B")
      ->check(CLI::ExistingFile);

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run a full experiment from a JSON config");
  run_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();

  ManifestArgs man;
  auto* man_cmd = app.add_subcommand("manifests", "Generate Kubernetes manifests");
  man_cmd->add_option("--mode", man.mode, "same-pod or cross-node")->required();
  man_cmd->add_option("--out", man.out, "Output directory")->required();
  man_cmd->add_option("--image", man.options.image, "Container image");
  man_cmd->add_option("--port", man.options.port, "SUT port");
  man_cmd->add_option("--requests", man.options.requests, "Requests per run");
  man_cmd->add_option("--delay-us", man.options.delay_us, "SUT synthetic delay");
  man_cmd->add_option("--sut-node", man.options.sut_node, "Node for the SUT pod (cross-node)");
  man_cmd->add_option("--loadgen-node", man.options.loadgen_node, "Node for the load generator pod (cross-node)");
  man_cmd->add_option("--hook-library", man.hook_library, "Preloaded hook path inside the image");
  man_cmd->add_option("--hook-keyword", man.hook_keywords, "Hook keyword (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*serve_cmd) return cmd_serve(serve);
  if (*load_cmd) return cmd_load(load);
  if (*analyze_cmd) return cmd_analyze(analyze);
  if (*run_cmd) return cmd_run(config_path);
  if (*man_cmd) return cmd_manifests(man);
  return kExitUsage;
}
