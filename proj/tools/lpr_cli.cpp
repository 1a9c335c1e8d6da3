// Command-line front end for the place-recognition pipeline:
//   project | describe | fit-metric | evaluate | mine
// All heavy lifting lives in the library; this file only parses arguments,
// loads the config, and maps typed errors to exit status 1.

#include <exception>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "lpr/error.hpp"
#include "lpr/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string output_dir;
  std::vector<std::string> overrides;  // repeated key=value
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* config = cmd->add_option("-c,--config", args.config_path,
                                 "pipeline config file (key = value lines)");
  if (config_required) {
    config->required();
  }
  cmd->add_option("--set", args.overrides,
                  "override a config key, e.g. --set projection.w=900");
  cmd->add_option("-o,--output", args.output_dir, "override output.dir");
}

lpr::PipelineConfig resolve_config(const CommonArgs& args) {
  lpr::PipelineConfig cfg;
  if (!args.config_path.empty()) {
    cfg = lpr::load_pipeline_config(args.config_path);
  }
  for (const std::string& entry : args.overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw lpr::ParseError("--set expects key=value, got '" + entry + "'");
    }
    lpr::apply_config_override(cfg, entry.substr(0, eq), entry.substr(eq + 1));
  }
  if (!args.output_dir.empty()) {
    cfg.output_dir = args.output_dir;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR place recognition: multi-layer projection, learned "
               "Mahalanobis metric, k-NN retrieval, evaluation"};
  app.require_subcommand(1);

  CommonArgs project_args;
  auto* project = app.add_subcommand(
      "project", "project every scan of the sequence and dump PGM channels");
  add_common(project, project_args, /*config_required=*/true);

  CommonArgs describe_args;
  auto* describe = app.add_subcommand(
      "describe", "compute or import descriptors for the sequence");
  add_common(describe, describe_args, /*config_required=*/true);

  CommonArgs fit_args;
  std::string fit_descriptors;
  auto* fit = app.add_subcommand("fit-metric",
                                 "learn the metric from labeled descriptors");
  add_common(fit, fit_args, /*config_required=*/true);
  fit->add_option("--descriptors", fit_descriptors,
                  "descriptor file (default: <output.dir>/descriptors.dsc)");

  CommonArgs eval_args;
  std::string eval_query, eval_db, eval_model;
  std::string eval_mode = "place";
  std::string eval_metric = "mahalanobis";
  auto* evaluate = app.add_subcommand("evaluate", "retrieval metrics for a "
                                                  "query set against a database");
  add_common(evaluate, eval_args, /*config_required=*/false);
  evaluate->add_option("--query", eval_query, "query descriptor file")->required();
  evaluate->add_option("--db", eval_db, "database descriptor file")->required();
  evaluate->add_option("--model", eval_model, "metric model file");
  evaluate->add_option("--mode", eval_mode,
                       "place (cross-session) or loop (same trajectory)")
      ->check(CLI::IsMember({"place", "loop"}));
  evaluate->add_option("--metric", eval_metric,
                       "mahalanobis (needs --model) or euclidean")
      ->check(CLI::IsMember({"mahalanobis", "euclidean"}));

  CommonArgs mine_args;
  std::string mine_descriptors, mine_model;
  double mine_margin = 0.5;
  bool mine_hinge = false;
  auto* mine = app.add_subcommand("mine", "emit hardest triplets per query");
  add_common(mine, mine_args, /*config_required=*/false);
  mine->add_option("--descriptors", mine_descriptors, "descriptor file")->required();
  mine->add_option("--model", mine_model, "metric model file")->required();
  mine->add_option("--margin", mine_margin, "ranking margin");
  mine->add_flag("--hinge", mine_hinge, "clamp losses at zero");

  CLI11_PARSE(app, argc, argv);

  try {
    if (project->parsed()) {
      lpr::cmd_project(resolve_config(project_args));
    } else if (describe->parsed()) {
      lpr::cmd_describe(resolve_config(describe_args));
    } else if (fit->parsed()) {
      lpr::cmd_fit_metric(resolve_config(fit_args), fit_descriptors);
    } else if (evaluate->parsed()) {
      const bool euclidean = eval_metric == "euclidean";
      if (!euclidean && eval_model.empty()) {
        throw lpr::ConfigError("--model is required unless --metric euclidean");
      }
      lpr::cmd_evaluate(resolve_config(eval_args), eval_query, eval_db, eval_model,
                        eval_mode, euclidean);
    } else if (mine->parsed()) {
      lpr::cmd_mine(resolve_config(mine_args), mine_descriptors, mine_model,
                    mine_margin, mine_hinge);
    }
  } catch (const lpr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
