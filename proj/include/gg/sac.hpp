#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gg/grasp_env.hpp"
#include "gg/metrics.hpp"
#include "gg/nn.hpp"
#include "gg/rng.hpp"

namespace gg::sac {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct SacConfig {
  int obs_dim = 0;
  int act_dim = 4;
  std::vector<int> hidden{128, 128};
  double lr = 3e-4;
  double gamma = 0.99;
  double polyak = 0.005;
  int batch = 256;
  int warmup = 2000;  // uniform-random steps before updates start
  long capacity = 200000;
  double target_entropy = -4.0;  // -dim(a)
  double init_alpha = 0.2;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  std::uint64_t seed = 0;
};

// Ring buffer of transitions with seeded uniform sampling (no replacement
// inside a batch). Storage is float32; updates run in doubles.
class ReplayBuffer {
 public:
  ReplayBuffer(long capacity, int obs_dim, int act_dim);

  void add(const VectorXd& obs, const VectorXd& act, double reward, const VectorXd& next_obs,
           bool done);
  long size() const { return size_; }
  long capacity() const { return capacity_; }

  struct Batch {
    MatrixXd obs, act, next_obs;
    VectorXd reward, done;
  };
  Batch sample(int batch, Rng& rng) const;

 private:
  long capacity_, size_ = 0, head_ = 0;
  Eigen::MatrixXf obs_, act_, next_obs_;
  Eigen::VectorXf reward_, done_;
};

struct UpdateLosses {
  double critic = 0.0;
  double actor = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
};

// Squashed-Gaussian head evaluated with externally supplied noise, so the
// reparameterized objective is a deterministic function of the parameters.
struct PolicyEval {
  MatrixXd action, u, mean, log_std;
  VectorXd log_prob;
  Eigen::ArrayXXd std_mask;  // 1 where log_std is inside the clamp
  MatrixXd noise;
};

PolicyEval policy_forward(const nn::DenseNet& actor, const MatrixXd& obs, const MatrixXd& noise,
                          double log_std_min, double log_std_max, nn::Tape* tape = nullptr);

// Reparameterized actor objective mean(alpha * logpi - min(Q1,Q2)) and its
// exact gradient w.r.t. the actor parameters; the same assembly the update
// step uses.
double actor_loss_grads(const nn::DenseNet& actor, const nn::DenseNet& q1,
                        const nn::DenseNet& q2, const MatrixXd& obs, const MatrixXd& noise,
                        double alpha, double log_std_min, double log_std_max, nn::Grads* grads,
                        VectorXd* log_prob = nullptr);

class SacAgent {
 public:
  explicit SacAgent(const SacConfig& cfg);

  // stochastic: squashed-Gaussian sample; deterministic: tanh(mean)
  VectorXd act(const VectorXd& obs, bool deterministic);

  // One gradient step each for the twin critics, the actor, and log-alpha,
  // then a polyak update of the targets. Throws on non-finite losses.
  UpdateLosses update(ReplayBuffer& buffer);

  double alpha() const { return std::exp(log_alpha_); }
  const nn::DenseNet& actor_net() const { return actor_; }
  const nn::DenseNet& critic1() const { return q1_; }
  const nn::DenseNet& critic2() const { return q2_; }
  const nn::DenseNet& target1() const { return t1_; }
  const nn::DenseNet& target2() const { return t2_; }
  const SacConfig& config() const { return cfg_; }

  std::string actor_checkpoint() const;  // GGNET text
  void load_actor(const std::string& text);

 private:
  PolicyEval sample_policy(const MatrixXd& obs);
  MatrixXd draw_noise(long rows);

  SacConfig cfg_;
  nn::DenseNet actor_, q1_, q2_, t1_, t2_;
  nn::AdamState opt_actor_, opt_q1_, opt_q2_;
  double log_alpha_;
  double alpha_m_ = 0.0, alpha_v_ = 0.0;  // adam moments for log-alpha
  long alpha_steps_ = 0;
  Rng rng_;
};

struct TrainConfig {
  env::Variant variant = env::Variant::kLatentEnv;
  long steps = 150000;
  std::uint64_t seed = 0;
  SacConfig sac;  // obs_dim is filled from the variant
};

struct TrainResult {
  metrics::SuccessTrace trace;
  std::string repr_checksum;  // empty for the visual variant
  std::string actor_checkpoint;
  long env_steps = 0;
};

// Stage-3 loop: interleaves environment stepping with one update per env
// step after the warm-up; episode seeds derive from the run seed. The frozen
// bundle checksum is verified before and after. Deterministic given cfg.
TrainResult train_run(const context::PhysicsRanges& ranges, const env::EnvParams& env_params,
                      const repr::Bundle* bundle, const TrainConfig& cfg);

}  // namespace gg::sac
