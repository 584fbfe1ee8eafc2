// locpred command-line front end.
//
//   locpred <stage> --config CFG --out WORKDIR [--seed N]
//   locpred run     --config CFG --out DIR [--seed N]
//   locpred predict --bundle DIR --input FASTA [--out FILE]
//   locpred serve   --bundle DIR [--host H] [--port P]
//   locpred synth   --out DIR [--seed N] [--samples N] [--labels L]
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 1 runtime
// failure.

#include "locpred/bundle.hpp"
#include "locpred/pipeline.hpp"
#include "locpred/service.hpp"
#include "locpred/synthetic.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace locpred;

struct StageArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_stage_options(CLI::App* cmd, StageArgs& a, const char* out_help) {
  cmd->add_option("--config", a.config, "Pipeline config (JSON)")->required();
  cmd->add_option("--out", a.out, out_help)->required();
  cmd->add_option("--seed", a.seed, "Override the config seed");
}

int run(int argc, char** argv) {
  CLI::App app{"Multi-label protein subcellular localization pipeline"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress at info level");

  StageArgs stage_args;
  std::vector<std::pair<std::string, CLI::App*>> stages;
  for (const auto& name : pipeline::stage_names()) {
    auto* cmd = app.add_subcommand(name, "Run the " + name + " stage in a work directory");
    add_stage_options(cmd, stage_args, "Work directory shared by the stages");
    stages.emplace_back(name, cmd);
  }

  StageArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run every stage and publish the output directory");
  add_stage_options(run_cmd, run_args, "Output directory");

  std::string bundle, input, predict_out;
  auto* predict_cmd = app.add_subcommand("predict", "Predict locations for a FASTA file");
  predict_cmd->add_option("--bundle", bundle, "Model bundle directory")->required();
  predict_cmd->add_option("--input", input, "FASTA file")->required();
  predict_cmd->add_option("--out", predict_out, "Write the JSON here instead of stdout");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Serve predictions over HTTP");
  serve_cmd->add_option("--bundle", bundle, "Model bundle directory")->required();
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port (0 picks a free one)");

  synthetic::SyntheticOptions synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic fixture and a config for it");
  synth_cmd->add_option("--out", synth_out, "Directory for the fixture")->required();
  synth_cmd->add_option("--seed", synth.seed, "Generator and pipeline seed");
  synth_cmd->add_option("--samples", synth.samples, "Number of sequences");
  synth_cmd->add_option("--labels", synth.labels, "Number of locations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  for (const auto& [name, cmd] : stages) {
    if (!cmd->parsed()) continue;
    const auto config = pipeline::load_config(stage_args.config, stage_args.seed);
    std::filesystem::create_directories(stage_args.out);
    pipeline::run_stage(name, config, stage_args.out);
    return 0;
  }
  if (run_cmd->parsed()) {
    const auto config = pipeline::load_config(run_args.config, run_args.seed);
    const auto report = pipeline::run_pipeline(config, run_args.out);
    std::cout << eval::to_json(report).dump(2) << '\n';
    return 0;
  }
  if (predict_cmd->parsed()) {
    const auto b = bundle::load_bundle(bundle);
    Diagnostics diag;
    const auto records = data::read_fasta_file(input, &diag);
    const auto text = bundle::to_json(bundle::predict_records(b, records)).dump(2) + "\n";
    if (predict_out.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(predict_out, std::ios::binary);
      out << text;
      if (!out) throw Error("cannot write " + predict_out);
    }
    return 0;
  }
  if (serve_cmd->parsed()) {
    auto b = std::make_shared<const bundle::ModelBundle>(bundle::load_bundle(bundle));
    service::Server server(b);
    const int bound = server.bind(host, port);
    spdlog::warn("serving on http://{}:{}", host, bound);
    server.listen();
    return 0;
  }
  if (synth_cmd->parsed()) {
    const auto records = synthetic::generate(synth);
    synthetic::write_fixture(synth_out, "synthetic", records);
    std::ofstream cfg(std::filesystem::path(synth_out) / "config.json", std::ios::binary);
    cfg << synthetic::pipeline_config("synthetic", synth.labels, synth.seed).dump(2) << '\n';
    if (!cfg) throw Error("cannot write config.json");
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const locpred::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
