#include "pufm/cli.hpp"

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pufm/config.hpp"
#include "pufm/errors.hpp"
#include "pufm/pipeline.hpp"

namespace pufm::cli {

namespace {

RunConfig load(const std::string& config_path) {
  RunConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
  apply_env_seed(cfg);
  validate(cfg);
  return cfg;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"pufm: point-cloud upsampling via pre-aligned flow matching"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("-c,--config", config_path, "config file (sections of key=value lines)");

  CLI::App* build = app.add_subcommand("build-data", "sample shapes and write training patches");

  CLI::App* train = app.add_subcommand("train", "train on the built patches");
  bool no_align = false;
  std::string baseline;
  train->add_flag("--no-align", no_align, "skip transport pre-alignment (ablation)");
  train->add_option("--baseline", baseline, "train a baseline instead (ddpm)");

  CLI::App* up = app.add_subcommand("upsample", "upsample a cloud with a trained model");
  std::string in_path, ckpt_path, out_path = "upsampled.ply";
  std::size_t rate = 4;
  double inference_eta = 0.0;
  std::size_t steps = 0;
  up->add_option("input", in_path, "input cloud (.xyz or .ply)")->required();
  up->add_option("-k,--checkpoint", ckpt_path, "trained model checkpoint")->required();
  up->add_option("-r,--rate", rate, "upsampling rate (>= 2)");
  up->add_option("-o,--output", out_path, "output cloud (.xyz or .ply)");
  CLI::Option* eta_opt = up->add_option("--inference-eta", inference_eta,
                                        "densification noise scale at inference")
                             ->check(CLI::NonNegativeNumber);
  CLI::Option* steps_opt =
      up->add_option("--steps", steps, "sampler step count")->check(CLI::PositiveNumber);

  CLI::App* ev = app.add_subcommand("eval", "compare a prediction against ground truth");
  std::string pred, gt, mesh, report_path = "eval_report.txt", table_path = "results.tsv";
  ev->add_option("pred", pred, "predicted cloud")->required();
  ev->add_option("gt", gt, "ground-truth cloud")->required();
  ev->add_option("-m,--mesh", mesh, "reference mesh (.obj) for the point-to-surface metric");
  ev->add_option("--report", report_path, "per-run key=value report file");
  ev->add_option("--table", table_path, "shared results table (appended)");

  CLI::App* toy = app.add_subcommand("toy", "small shape-to-shape transport demo");
  std::string demo = "ring2letter";
  toy->add_option("demo", demo, "ring2letter | sphere2torus");

  CLI::App* pc = app.add_subcommand("print-config", "print the effective config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig cfg = load(config_path);
    if (pc->parsed()) {
      std::cout << print_config(cfg);
    } else if (build->parsed()) {
      cmd_build_data(cfg);
      std::cout << "dataset written to " << cfg.paths.data_dir << "\n";
    } else if (train->parsed()) {
      TrainMethod method = TrainMethod::kFlowAligned;
      if (!baseline.empty()) {
        if (baseline != "ddpm")
          throw ConfigError("unknown baseline '" + baseline + "' (have: ddpm)");
        if (no_align) throw ConfigError("--no-align does not apply to --baseline");
        method = TrainMethod::kBaselineDdpm;
      } else if (no_align) {
        method = TrainMethod::kFlowUnaligned;
      }
      const TrainResult r = cmd_train(cfg, method);
      if (r.diverged)
        std::cerr << "warning: training diverged; kept the last finite parameters\n";
      std::cout << "checkpoint: " << r.checkpoint.string() << "\n"
                << "loss log:   " << r.loss_log.string() << "\n";
      if (!r.losses.empty()) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6g", r.losses.back());
        std::cout << "final loss: " << buf << "\n";
      }
    } else if (up->parsed()) {
      if (rate < 2) throw ConfigError("upsample: rate must be at least 2");
      UpsampleOptions opts;
      if (eta_opt->count() > 0) opts.inference_eta = inference_eta;
      if (steps_opt->count() > 0) opts.num_steps = steps;
      cmd_upsample(cfg, in_path, rate, ckpt_path, out_path, opts);
      std::cout << "wrote " << out_path << "\n";
    } else if (ev->parsed()) {
      std::optional<std::filesystem::path> mesh_path;
      if (!mesh.empty()) mesh_path = mesh;
      const EvalReport rep = cmd_eval(pred, gt, mesh_path, report_path, table_path);
      std::cout << to_key_value(rep);
    } else if (toy->parsed()) {
      const ToyReport rep = cmd_toy(cfg, demo);
      std::cout << "demo " << rep.demo << " written to " << rep.out_dir.string() << "\n";
      for (const ToyMethodResult& mr : rep.methods) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6g", mr.final_loss);
        std::cout << "  " << mr.method << ": final loss " << buf << "\n";
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const ConvergenceError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace pufm::cli
