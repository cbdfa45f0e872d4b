#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gg/config.hpp"
#include "gg/pipeline.hpp"

using gg::config::ConfigError;
using gg::config::RunConfig;

namespace {

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<long> steps;
  std::optional<std::string> variant;
  std::optional<double> ood_scale;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, GlobalFlags& flags) {
  cmd->add_option("--config", flags.config_path, "config file (built-in defaults when omitted)");
  cmd->add_option("--seed", flags.seed, "run seed");
  cmd->add_option("--steps", flags.steps, "SAC environment-step budget");
  cmd->add_option("--variant", flags.variant, "latent | latent-env | visual");
  cmd->add_option("--ood-scale", flags.ood_scale, "scale physics ranges about midpoints");
  cmd->add_option("--out", flags.out, "output directory");
}

RunConfig resolve(const GlobalFlags& flags) {
  RunConfig cfg =
      flags.config_path.empty() ? RunConfig::defaults() : RunConfig::from_file(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.steps) cfg.sac_steps = *flags.steps;
  if (flags.variant) cfg.variant = *flags.variant;
  if (flags.ood_scale) cfg.eval_ood_scale = *flags.ood_scale;
  if (flags.out) cfg.out = *flags.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grammarized latent grasp learning pipeline"};
  app.require_subcommand(1);

  GlobalFlags flags;
  std::vector<std::uint64_t> seeds;
  std::string checkpoint;
  std::string curves;
  int trace_episodes = 0;

  CLI::App* pretrain = app.add_subcommand("pretrain", "stage 1: modality encoders");
  add_common(pretrain, flags);
  CLI::App* fuse = app.add_subcommand("fuse", "stage 2: fusion AE + MI certificate");
  add_common(fuse, flags);
  CLI::App* train = app.add_subcommand("train", "stage 3: SAC on one observation variant");
  add_common(train, flags);
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint, optionally OOD");
  add_common(eval, flags);
  eval->add_option("--checkpoint", checkpoint, "actor checkpoint (defaults to the train run)");
  eval->add_option("--trace", trace_episodes, "dump per-step CSV for the first N episodes");
  CLI::App* ablate = app.add_subcommand("ablate", "all variants x seeds comparison");
  add_common(ablate, flags);
  ablate->add_option("--seeds", seeds, "RL seeds (e.g. --seeds 0,1,2)")->delimiter(',');
  CLI::App* verify = app.add_subcommand("verify", "numeric verification suite");
  add_common(verify, flags);
  CLI::App* summarize = app.add_subcommand("summarize", "summary table from train logs");
  add_common(summarize, flags);
  summarize->add_option("--curves", curves, "write gnuplot-style learning curves");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = resolve(flags);
    if (pretrain->parsed()) return gg::pipeline::cmd_pretrain(cfg);
    if (fuse->parsed()) return gg::pipeline::cmd_fuse(cfg);
    if (train->parsed()) return gg::pipeline::cmd_train(cfg);
    if (eval->parsed()) return gg::pipeline::cmd_eval(cfg, checkpoint, trace_episodes);
    if (ablate->parsed()) {
      if (seeds.empty()) seeds = {cfg.seed};
      return gg::pipeline::cmd_ablate(cfg, seeds);
    }
    if (verify->parsed()) return gg::pipeline::cmd_verify(cfg);
    if (summarize->parsed()) return gg::pipeline::cmd_summarize(cfg, curves);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
