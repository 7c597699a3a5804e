// Command-line front end: run the pipeline, benchmark synthetic scenarios,
// analyse a single frame pair, and generate scenario sets.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lavawatch/lavawatch.hpp"

namespace fs = std::filesystem;
using namespace lavawatch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int cmd_run(const std::string& config_path) {
  if (!fs::exists(config_path)) {
    std::cerr << "config not found: " << config_path << "\n";
    return kExitConfig;
  }
  PipelineConfig cfg;
  try {
    cfg = load_pipeline_config(config_path);
    cfg.validate();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::ofstream file;
  std::ostream* events = &std::cout;
  if (cfg.events_out != "-") {
    file.open(cfg.events_out, std::ios::trunc);
    if (!file) {
      std::cerr << "cannot open event log " << cfg.events_out << "\n";
      return kExitRuntime;
    }
    events = &file;
  }
  const PipelineMetrics m = run_pipeline(cfg, *events, std::cerr);
  std::cerr << metrics_summary(m) << "\n";
  return kExitOk;
}

int cmd_bench(const std::string& dir, bool json, std::uint64_t seed) {
  std::vector<Scenario> scenarios;
  try {
    scenarios = dir.empty() ? default_benchmark_scenarios(seed) : load_scenario_dir(dir);
  } catch (const ConfigError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitConfig;
  }
  const BenchmarkReport report = run_benchmark(scenarios, AnalyzerParams{});
  std::cout << (json ? report_to_json(report) + "\n" : report_to_text(report));
  return kExitOk;
}

int cmd_detect_once(const std::string& prev_path, const std::string& curr_path, const std::string& config_path) {
  AnalyzerParams params;
  if (!config_path.empty()) {
    try {
      auto kv = KeyValueConfig::load(config_path);
      if (!kv.has("input.dir") && !kv.has("input.stream")) kv.set("input.dir", ".");
      params = pipeline_config_from(kv, fs::path(config_path).parent_path()).analyzer;
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfig;
    }
  }
  Frame prev, curr;
  try {
    prev = load_image(prev_path);
    curr = load_image(curr_path);
  } catch (const Error& e) {
    std::cerr << "cannot load image: " << e.what() << "\n";
    return kExitConfig;
  }
  curr.frame_id = 1;
  const FrameAnalysis a = analyze_pair(prev, curr, {}, params);

  nlohmann::ordered_json flows = nlohmann::ordered_json::array();
  for (const auto& f : a.flows) {
    nlohmann::ordered_json j;
    j["label"] = f.blob.label;
    j["area"] = f.blob.area;
    j["centroid"] = {f.blob.centroid.x, f.blob.centroid.y};
    j["perimeter"] = f.blob.perimeter;
    j["bbox"] = {f.blob.bbox.x_min, f.blob.bbox.y_min, f.blob.bbox.x_max, f.blob.bbox.y_max};
    j["principal_angle"] = f.blob.principal_angle;
    j["eigenvalue_ratio"] = std::isinf(f.blob.eigenvalue_ratio) ? nlohmann::ordered_json("inf")
                                                                 : nlohmann::ordered_json(f.blob.eigenvalue_ratio);
    j["grados"] = f.trajectory.grados;
    j["direction"] = std::string(to_string(f.trajectory.direction));
    j["deviation"] = f.trajectory.displayed_deviation;
    j["source"] = std::string(to_string(f.trajectory.source));
    flows.push_back(std::move(j));
  }
  nlohmann::ordered_json out;
  out["flows"] = std::move(flows);
  std::cout << out.dump() << "\n";
  return kExitOk;
}

int cmd_gen(const std::string& out_dir, std::uint64_t seed, int flows, int quiet, int width, int height, int frames,
            bool render) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "cannot create " << out_dir << ": " << ec.message() << "\n";
    return kExitRuntime;
  }
  const auto scenarios = default_benchmark_scenarios(seed, flows, quiet, width, height, frames);
  for (const auto& s : scenarios) {
    std::ofstream(fs::path(out_dir) / (s.id + ".txt")) << scenario_to_text(s);
    if (render) {
      const fs::path frame_dir = fs::path(out_dir) / s.id;
      fs::create_directories(frame_dir);
      ScenarioRenderer renderer(s);
      while (const auto f = renderer.next()) {
        std::ostringstream name;
        name << "frame_" << std::setw(5) << std::setfill('0') << f->frame_id << ".ppm";
        write_file(frame_dir / name.str(), encode_ppm(*f));
      }
    }
  }
  std::cerr << "wrote " << scenarios.size() << " scenarios to " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lavawatch: lava-flow detection and alerting"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "process a frame directory or stream per a config file");
  run->add_option("--config", config_path, "pipeline config file")->required();

  std::string scenario_dir;
  bool json = false;
  std::uint64_t bench_seed = 2015;
  auto* bench = app.add_subcommand("bench", "run the detection-rate benchmark");
  bench->add_option("--scenarios", scenario_dir, "directory of scenario files (default: built-in set)");
  bench->add_flag("--json", json, "emit JSON instead of a table");
  bench->add_option("--seed", bench_seed, "seed for the built-in scenario set");

  std::string prev_path, curr_path, once_config;
  auto* once = app.add_subcommand("detect-once", "analyse one frame pair and print flows as JSON");
  once->add_option("--prev", prev_path, "previous frame (PPM/PNG)")->required();
  once->add_option("--curr", curr_path, "current frame (PPM/PNG)")->required();
  once->add_option("--config", once_config, "optional pipeline config for detection parameters");

  std::string gen_out;
  std::uint64_t gen_seed = 2015;
  int gen_flows = 50, gen_quiet = 50, gen_w = 320, gen_h = 240, gen_frames = 20;
  bool gen_render = false;
  auto* gen = app.add_subcommand("gen-scenario", "write a scenario set as key-value files");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--flows", gen_flows, "number of flow scenarios")->check(CLI::NonNegativeNumber);
  gen->add_option("--quiet", gen_quiet, "number of flow-free scenarios")->check(CLI::NonNegativeNumber);
  gen->add_option("--width", gen_w, "frame width")->check(CLI::PositiveNumber);
  gen->add_option("--height", gen_h, "frame height")->check(CLI::PositiveNumber);
  gen->add_option("--frames", gen_frames, "frames per scenario")->check(CLI::PositiveNumber);
  gen->add_flag("--render", gen_render, "also render each scenario's frames as PPM files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path);
    if (*bench) return cmd_bench(scenario_dir, json, bench_seed);
    if (*once) return cmd_detect_once(prev_path, curr_path, once_config);
    if (*gen) return cmd_gen(gen_out, gen_seed, gen_flows, gen_quiet, gen_w, gen_h, gen_frames, gen_render);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
