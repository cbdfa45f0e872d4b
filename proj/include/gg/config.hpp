#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gg/context.hpp"
#include "gg/grasp_env.hpp"
#include "gg/repr.hpp"
#include "gg/sac.hpp"

namespace gg::config {

// usage/config problems map to exit code 2
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every knob that affects results, with documented defaults. Parsed from a
// line-oriented "section.key = value" file with '#' comments; files must be
// complete (a missing key is an error naming the key) and unknown keys are
// rejected.
struct RunConfig {
  // run identity (excluded from the config hash)
  std::uint64_t seed = 0;
  std::string variant = "latent-env";  // latent | latent-env | visual
  std::string out = "out";

  // stage 1: modality autoencoder pretraining
  std::int64_t stage1_dataset = 2000;
  std::int64_t stage1_updates = 5000;
  std::int64_t stage1_batch = 64;
  double stage1_lr = 3e-4;
  double stage1_holdout = 0.1;

  // stage 2: fusion autoencoder + MI critic
  std::int64_t stage2_dataset = 4096;
  std::int64_t stage2_batches = 2000;
  std::int64_t stage2_batch = 64;
  std::int64_t stage2_critic_steps = 5;
  double stage2_lr = 3e-4;
  double stage2_critic_lr = 1e-3;
  std::int64_t stage2_eval_batch = 128;
  std::int64_t stage2_eval_rounds = 16;
  double stage2_holdout = 0.1;

  // representation dims and loss weights
  std::int64_t repr_d_t = 24;
  std::int64_t repr_d_g = 8;
  std::int64_t repr_d_s = 32;
  double repr_lambda_q = 1.0;
  double repr_lambda_e = 1.0;
  double repr_lambda_r = 0.1;
  double repr_lambda_a = 0.01;
  double repr_tau_nce = 0.1;
  double repr_i_max = 0.1;
  double repr_beta = 1.0;

  // stage 3: SAC
  std::int64_t sac_steps = 150000;
  std::int64_t sac_warmup = 2000;
  std::int64_t sac_batch = 256;
  double sac_gamma = 0.99;
  double sac_polyak = 0.005;
  double sac_lr = 3e-4;
  std::int64_t sac_capacity = 200000;
  std::int64_t sac_hidden_latent = 128;
  std::int64_t sac_layers_latent = 2;
  std::int64_t sac_hidden_visual = 256;
  std::int64_t sac_layers_visual = 3;
  double sac_target_entropy = -4.0;
  double sac_init_alpha = 0.2;

  // grasp environment
  std::int64_t env_horizon = 64;
  double env_action_scale = 0.03;
  double env_r0 = 0.02;
  double env_v0 = 0.06;
  double env_h_min = 0.10;
  double env_dt = 0.05;
  double env_c_dist = 1.0;
  double env_b_grasp = 5.0;
  double env_b_lift = 20.0;
  double env_r_succ = 25.0;
  double env_nudge_gain = 0.35;
  double env_wobble_gain = 0.3;

  // physics randomization bounds
  double physics_mu_obj_min = 0.2, physics_mu_obj_max = 1.2;
  double physics_mu_table_min = 0.2, physics_mu_table_max = 1.2;
  double physics_mu_gripper_min = 0.6, physics_mu_gripper_max = 2.0;
  double physics_m_scale_min = 0.6, physics_m_scale_max = 1.6;
  double physics_g_z_min = -11.0, physics_g_z_max = -7.0;
  double physics_c_rest_min = 0.0, physics_c_rest_max = 0.2;
  double physics_d_lin_min = 0.0, physics_d_lin_max = 0.4;
  double physics_d_ang_min = 0.0, physics_d_ang_max = 0.4;

  // metrics
  double metrics_tau = 0.9;
  std::int64_t metrics_window = 10000;  // sustain window, env steps
  std::int64_t metrics_rolling = 100;   // rolling window, episodes

  // evaluation
  std::int64_t eval_episodes = 200;
  double eval_ood_scale = 1.0;

  static RunConfig defaults() { return {}; }
  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text, const std::string& origin = "<string>");

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static std::vector<std::string> keys();

  // sorted "key = value" lines; identity keys (run.seed, run.variant,
  // run.out) are optional so the same text serves as config.lock and as the
  // hash input
  std::string canonical(bool include_identity) const;
  std::string hash() const;  // sha256 of canonical(false)
  std::string hash8() const { return hash().substr(0, 8); }

  // canonical text / hash restricted to keys under the given section
  // prefixes; stage artifacts are cached under these so downstream-only
  // changes do not orphan upstream outputs
  std::string scoped_canonical(const std::vector<std::string>& prefixes) const;
  std::string scoped_hash8(const std::vector<std::string>& prefixes) const;

  void validate() const;  // throws ConfigError

  context::PhysicsRanges physics_ranges() const;
  env::EnvParams env_params() const;
  repr::Dims repr_dims() const;
  repr::Stage1Config stage1_config() const;
  repr::Stage2Config stage2_config() const;
  sac::SacConfig sac_config(env::Variant variant) const;
  sac::TrainConfig train_config(env::Variant variant) const;
};

}  // namespace gg::config
