#include "gg/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "gg/sha256.hpp"

namespace gg::config {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

struct KeySpec {
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::int64_t parse_int(const std::string& key, const std::string& v) {
  size_t pos = 0;
  std::int64_t out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: key " + key + ": not an integer: '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError("config: key " + key + ": not an integer: '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: key " + key + ": not a number: '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError("config: key " + key + ": not a number: '" + v + "'");
  return out;
}

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> specs = [] {
    std::vector<KeySpec> s;
    auto add_u64 = [&s](const char* name, std::uint64_t RunConfig::* f) {
      s.push_back({name,
                   [f](const RunConfig& c) { return std::to_string(c.*f); },
                   [f, name](RunConfig& c, const std::string& v) {
                     const std::int64_t x = parse_int(name, v);
                     if (x < 0) throw ConfigError(std::string("config: key ") + name + ": must be >= 0");
                     c.*f = static_cast<std::uint64_t>(x);
                   }});
    };
    auto add_i64 = [&s](const char* name, std::int64_t RunConfig::* f) {
      s.push_back({name,
                   [f](const RunConfig& c) { return std::to_string(c.*f); },
                   [f, name](RunConfig& c, const std::string& v) { c.*f = parse_int(name, v); }});
    };
    auto add_dbl = [&s](const char* name, double RunConfig::* f) {
      s.push_back({name,
                   [f](const RunConfig& c) { return fmt_double(c.*f); },
                   [f, name](RunConfig& c, const std::string& v) { c.*f = parse_double(name, v); }});
    };
    auto add_str = [&s](const char* name, std::string RunConfig::* f) {
      s.push_back({name,
                   [f](const RunConfig& c) { return c.*f; },
                   [f](RunConfig& c, const std::string& v) { c.*f = v; }});
    };

    add_u64("run.seed", &RunConfig::seed);
    add_str("run.variant", &RunConfig::variant);
    add_str("run.out", &RunConfig::out);

    add_i64("stage1.dataset", &RunConfig::stage1_dataset);
    add_i64("stage1.updates", &RunConfig::stage1_updates);
    add_i64("stage1.batch", &RunConfig::stage1_batch);
    add_dbl("stage1.lr", &RunConfig::stage1_lr);
    add_dbl("stage1.holdout", &RunConfig::stage1_holdout);

    add_i64("stage2.dataset", &RunConfig::stage2_dataset);
    add_i64("stage2.batches", &RunConfig::stage2_batches);
    add_i64("stage2.batch", &RunConfig::stage2_batch);
    add_i64("stage2.critic_steps", &RunConfig::stage2_critic_steps);
    add_dbl("stage2.lr", &RunConfig::stage2_lr);
    add_dbl("stage2.critic_lr", &RunConfig::stage2_critic_lr);
    add_i64("stage2.eval_batch", &RunConfig::stage2_eval_batch);
    add_i64("stage2.eval_rounds", &RunConfig::stage2_eval_rounds);
    add_dbl("stage2.holdout", &RunConfig::stage2_holdout);

    add_i64("repr.d_t", &RunConfig::repr_d_t);
    add_i64("repr.d_g", &RunConfig::repr_d_g);
    add_i64("repr.d_s", &RunConfig::repr_d_s);
    add_dbl("repr.lambda_q", &RunConfig::repr_lambda_q);
    add_dbl("repr.lambda_e", &RunConfig::repr_lambda_e);
    add_dbl("repr.lambda_r", &RunConfig::repr_lambda_r);
    add_dbl("repr.lambda_a", &RunConfig::repr_lambda_a);
    add_dbl("repr.tau_nce", &RunConfig::repr_tau_nce);
    add_dbl("repr.i_max", &RunConfig::repr_i_max);
    add_dbl("repr.beta", &RunConfig::repr_beta);

    add_i64("sac.steps", &RunConfig::sac_steps);
    add_i64("sac.warmup", &RunConfig::sac_warmup);
    add_i64("sac.batch", &RunConfig::sac_batch);
    add_dbl("sac.gamma", &RunConfig::sac_gamma);
    add_dbl("sac.polyak", &RunConfig::sac_polyak);
    add_dbl("sac.lr", &RunConfig::sac_lr);
    add_i64("sac.capacity", &RunConfig::sac_capacity);
    add_i64("sac.hidden_latent", &RunConfig::sac_hidden_latent);
    add_i64("sac.layers_latent", &RunConfig::sac_layers_latent);
    add_i64("sac.hidden_visual", &RunConfig::sac_hidden_visual);
    add_i64("sac.layers_visual", &RunConfig::sac_layers_visual);
    add_dbl("sac.target_entropy", &RunConfig::sac_target_entropy);
    add_dbl("sac.init_alpha", &RunConfig::sac_init_alpha);

    add_i64("env.horizon", &RunConfig::env_horizon);
    add_dbl("env.action_scale", &RunConfig::env_action_scale);
    add_dbl("env.r0", &RunConfig::env_r0);
    add_dbl("env.v0", &RunConfig::env_v0);
    add_dbl("env.h_min", &RunConfig::env_h_min);
    add_dbl("env.dt", &RunConfig::env_dt);
    add_dbl("env.c_dist", &RunConfig::env_c_dist);
    add_dbl("env.b_grasp", &RunConfig::env_b_grasp);
    add_dbl("env.b_lift", &RunConfig::env_b_lift);
    add_dbl("env.r_succ", &RunConfig::env_r_succ);
    add_dbl("env.nudge_gain", &RunConfig::env_nudge_gain);
    add_dbl("env.wobble_gain", &RunConfig::env_wobble_gain);

    add_dbl("physics.mu_obj.min", &RunConfig::physics_mu_obj_min);
    add_dbl("physics.mu_obj.max", &RunConfig::physics_mu_obj_max);
    add_dbl("physics.mu_table.min", &RunConfig::physics_mu_table_min);
    add_dbl("physics.mu_table.max", &RunConfig::physics_mu_table_max);
    add_dbl("physics.mu_gripper.min", &RunConfig::physics_mu_gripper_min);
    add_dbl("physics.mu_gripper.max", &RunConfig::physics_mu_gripper_max);
    add_dbl("physics.m_scale.min", &RunConfig::physics_m_scale_min);
    add_dbl("physics.m_scale.max", &RunConfig::physics_m_scale_max);
    add_dbl("physics.g_z.min", &RunConfig::physics_g_z_min);
    add_dbl("physics.g_z.max", &RunConfig::physics_g_z_max);
    add_dbl("physics.c_rest.min", &RunConfig::physics_c_rest_min);
    add_dbl("physics.c_rest.max", &RunConfig::physics_c_rest_max);
    add_dbl("physics.d_lin.min", &RunConfig::physics_d_lin_min);
    add_dbl("physics.d_lin.max", &RunConfig::physics_d_lin_max);
    add_dbl("physics.d_ang.min", &RunConfig::physics_d_ang_min);
    add_dbl("physics.d_ang.max", &RunConfig::physics_d_ang_max);

    add_dbl("metrics.tau", &RunConfig::metrics_tau);
    add_i64("metrics.window", &RunConfig::metrics_window);
    add_i64("metrics.rolling", &RunConfig::metrics_rolling);

    add_i64("eval.episodes", &RunConfig::eval_episodes);
    add_dbl("eval.ood_scale", &RunConfig::eval_ood_scale);
    return s;
  }();
  return specs;
}

const KeySpec* find_key(const std::string& name) {
  for (const auto& k : schema()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

bool is_identity_key(const std::string& name) {
  return name == "run.seed" || name == "run.variant" || name == "run.out";
}

}  // namespace

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& k : schema()) out.push_back(k.name);
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = find_key(key);
  if (!spec) throw ConfigError("config: unknown key '" + key + "'");
  spec->set(*this, value);
}

std::string RunConfig::get(const std::string& key) const {
  const KeySpec* spec = find_key(key);
  if (!spec) throw ConfigError("config: unknown key '" + key + "'");
  return spec->get(*this);
}

RunConfig RunConfig::from_string(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: " + origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError("config: " + origin + ": duplicate key '" + key + "'");
    }
    cfg.set(key, value);
  }
  for (const auto& k : schema()) {
    if (!seen.count(k.name)) {
      throw ConfigError("config: " + origin + ": missing key '" + k.name + "'");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return from_string(ss.str(), path);
}

std::string RunConfig::canonical(bool include_identity) const {
  std::vector<std::string> names;
  for (const auto& k : schema()) {
    if (!include_identity && is_identity_key(k.name)) continue;
    names.push_back(k.name);
  }
  std::sort(names.begin(), names.end());
  std::string out;
  for (const auto& n : names) out += n + " = " + get(n) + "\n";
  return out;
}

std::string RunConfig::hash() const { return sha256_hex(canonical(false)); }

std::string RunConfig::scoped_canonical(const std::vector<std::string>& prefixes) const {
  std::vector<std::string> names;
  for (const auto& k : schema()) {
    if (is_identity_key(k.name)) continue;
    for (const auto& p : prefixes) {
      if (k.name.rfind(p, 0) == 0) {
        names.push_back(k.name);
        break;
      }
    }
  }
  std::sort(names.begin(), names.end());
  std::string out;
  for (const auto& n : names) out += n + " = " + get(n) + "\n";
  return out;
}

std::string RunConfig::scoped_hash8(const std::vector<std::string>& prefixes) const {
  return sha256_hex(scoped_canonical(prefixes)).substr(0, 8);
}

void RunConfig::validate() const {
  env::variant_from_name(variant);  // throws on unknown names
  physics_ranges().validate();
  if (stage1_holdout <= 0 || stage1_holdout >= 1 || stage2_holdout <= 0 || stage2_holdout >= 1) {
    throw ConfigError("config: holdout fractions must be in (0,1)");
  }
  if (repr_tau_nce <= 0) throw ConfigError("config: repr.tau_nce must be > 0");
  if (repr_i_max < 0) throw ConfigError("config: repr.i_max must be >= 0");
  if (repr_lambda_q < 0 || repr_lambda_e < 0 || repr_lambda_r < 0 || repr_lambda_a < 0 ||
      repr_beta < 0) {
    throw ConfigError("config: repr loss weights must be >= 0");
  }
  if (metrics_tau <= 0 || metrics_tau > 1) throw ConfigError("config: metrics.tau in (0,1]");
  if (metrics_window < 0) throw ConfigError("config: metrics.window must be >= 0");
  if (sac_steps < 0 || sac_batch <= 0 || sac_capacity <= 0) {
    throw ConfigError("config: sac budgets must be positive");
  }
  if (env_horizon <= 0 || env_dt <= 0) throw ConfigError("config: env.horizon/env.dt positive");
  if (eval_ood_scale <= 0) throw ConfigError("config: eval.ood_scale must be > 0");
}

context::PhysicsRanges RunConfig::physics_ranges() const {
  context::PhysicsRanges r;
  r.mu_obj = {physics_mu_obj_min, physics_mu_obj_max};
  r.mu_table = {physics_mu_table_min, physics_mu_table_max};
  r.mu_gripper = {physics_mu_gripper_min, physics_mu_gripper_max};
  r.m_scale = {physics_m_scale_min, physics_m_scale_max};
  r.g_z = {physics_g_z_min, physics_g_z_max};
  r.c_rest = {physics_c_rest_min, physics_c_rest_max};
  r.d_lin = {physics_d_lin_min, physics_d_lin_max};
  r.d_ang = {physics_d_ang_min, physics_d_ang_max};
  return r;
}

env::EnvParams RunConfig::env_params() const {
  env::EnvParams p;
  p.horizon = static_cast<int>(env_horizon);
  p.action_scale = env_action_scale;
  p.r0 = env_r0;
  p.v0 = env_v0;
  p.h_min = env_h_min;
  p.dt = env_dt;
  p.c_dist = env_c_dist;
  p.b_grasp = env_b_grasp;
  p.b_lift = env_b_lift;
  p.r_succ = env_r_succ;
  p.nudge_gain = env_nudge_gain;
  p.wobble_gain = env_wobble_gain;
  return p;
}

repr::Dims RunConfig::repr_dims() const {
  repr::Dims d;
  d.d_t = static_cast<int>(repr_d_t);
  d.d_g = static_cast<int>(repr_d_g);
  d.d_s = static_cast<int>(repr_d_s);
  return d;
}

repr::Stage1Config RunConfig::stage1_config() const {
  repr::Stage1Config c;
  c.updates = static_cast<int>(stage1_updates);
  c.batch = static_cast<int>(stage1_batch);
  c.lr = stage1_lr;
  c.holdout_frac = stage1_holdout;
  c.seed = seed;
  c.dims = repr_dims();
  return c;
}

repr::Stage2Config RunConfig::stage2_config() const {
  repr::Stage2Config c;
  c.batches = static_cast<int>(stage2_batches);
  c.batch = static_cast<int>(stage2_batch);
  c.critic_steps = static_cast<int>(stage2_critic_steps);
  c.lr = stage2_lr;
  c.critic_lr = stage2_critic_lr;
  c.eval_batch = static_cast<int>(stage2_eval_batch);
  c.eval_rounds = static_cast<int>(stage2_eval_rounds);
  c.holdout_frac = stage2_holdout;
  c.seed = seed;
  c.weights = {repr_lambda_q, repr_lambda_e, repr_lambda_r, repr_lambda_a};
  c.tau_nce = repr_tau_nce;
  c.i_max = repr_i_max;
  c.beta = repr_beta;
  return c;
}

sac::SacConfig RunConfig::sac_config(env::Variant v) const {
  sac::SacConfig c;
  const bool visual = v == env::Variant::kVisual;
  const int width = static_cast<int>(visual ? sac_hidden_visual : sac_hidden_latent);
  const int layers = static_cast<int>(visual ? sac_layers_visual : sac_layers_latent);
  c.hidden.assign(layers, width);
  c.lr = sac_lr;
  c.gamma = sac_gamma;
  c.polyak = sac_polyak;
  c.batch = static_cast<int>(sac_batch);
  c.warmup = static_cast<int>(sac_warmup);
  c.capacity = sac_capacity;
  c.target_entropy = sac_target_entropy;
  c.init_alpha = sac_init_alpha;
  c.seed = seed;
  return c;
}

sac::TrainConfig RunConfig::train_config(env::Variant v) const {
  sac::TrainConfig c;
  c.variant = v;
  c.steps = sac_steps;
  c.seed = seed;
  c.sac = sac_config(v);
  return c;
}

}  // namespace gg::config
