#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gg/config.hpp"
#include "gg/metrics.hpp"
#include "gg/repr.hpp"

namespace gg::pipeline {

inline constexpr const char* kCodeVersion = "ggrasp-0.1.0";

// Deterministic run directory names: <out>/<tag>-<hash8>. A run directory is
// reused when its config.lock matches the current canonical config and the
// manifest records completion; identical config+seed therefore reproduce
// byte-identical outputs apart from the manifest's wall-clock line.
std::string run_dir(const config::RunConfig& cfg, const std::string& tag);

struct StageOutcome {
  std::string dir;
  bool reused = false;
};

// Stage 1: pretrain modality encoders; writes weights/stage1.gg + report.
StageOutcome run_pretrain(const config::RunConfig& cfg);

// Stage 2: fusion AE + MI certificate; requires the stage-1 bundle on disk.
StageOutcome run_fuse(const config::RunConfig& cfg);

// Stage 3: one SAC training run for cfg.variant; requires the stage-2 bundle
// for latent variants. Writes logs/train.csv + weights/actor_final.net.
StageOutcome run_train(const config::RunConfig& cfg);

struct EvalResult {
  double success_rate = 0.0;
  double ci_half_width = 0.0;  // normal-approximation 95% interval
  long episodes = 0;
};

// Deterministic-policy evaluation of a trained checkpoint under optionally
// OOD-scaled sampling ranges (context normalization stays fixed).
EvalResult run_eval(const config::RunConfig& cfg, const std::string& checkpoint_path,
                    int trace_episodes);

struct AblateResult {
  std::string root;
  std::vector<metrics::SummaryRow> rows;  // per run + aggregates
  std::vector<std::string> run_dirs;
};

// Full ordering experiment: shared stage-1/2 artifacts, then
// {latent, latent-env, visual} x seeds SAC runs and a comparison CSV.
AblateResult run_ablation(const config::RunConfig& cfg, const std::vector<std::uint64_t>& seeds);

// CLI entry points; return the process exit code (0 ok, 1 assertion or
// acceptance failure, 2 usage/config error).
int cmd_pretrain(const config::RunConfig& cfg);
int cmd_fuse(const config::RunConfig& cfg);
int cmd_train(const config::RunConfig& cfg);
int cmd_eval(const config::RunConfig& cfg, const std::string& checkpoint, int trace_episodes);
int cmd_ablate(const config::RunConfig& cfg, const std::vector<std::uint64_t>& seeds);
int cmd_verify(const config::RunConfig& cfg);
int cmd_summarize(const config::RunConfig& cfg, const std::string& curves_path);

// Helpers shared with tests.
std::string stage1_bundle_path(const config::RunConfig& cfg);
std::string stage2_bundle_path(const config::RunConfig& cfg);
std::string train_run_tag(const config::RunConfig& cfg);
std::string train_run_dir(const config::RunConfig& cfg);
repr::Stage2Data make_stage2_data(const config::RunConfig& cfg);
void make_stage1_data(const config::RunConfig& cfg, Eigen::MatrixXd& x_t, Eigen::MatrixXd& x_g);
std::string file_sha256(const std::string& path);

}  // namespace gg::pipeline
