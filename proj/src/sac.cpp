#include "gg/sac.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace gg::sac {

namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// log(1 - tanh(u)^2), numerically stable
double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::log(2.0) - u - softplus(-2.0 * u));
}

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // 0.5*log(2*pi)

}  // namespace

ReplayBuffer::ReplayBuffer(long capacity, int obs_dim, int act_dim) : capacity_(capacity) {
  if (capacity <= 0) throw std::invalid_argument("ReplayBuffer: capacity");
  obs_.resize(capacity, obs_dim);
  act_.resize(capacity, act_dim);
  next_obs_.resize(capacity, obs_dim);
  reward_.resize(capacity);
  done_.resize(capacity);
}

void ReplayBuffer::add(const VectorXd& obs, const VectorXd& act, double reward,
                       const VectorXd& next_obs, bool done) {
  obs_.row(head_) = obs.cast<float>();
  act_.row(head_) = act.cast<float>();
  next_obs_.row(head_) = next_obs.cast<float>();
  reward_[head_] = static_cast<float>(reward);
  done_[head_] = done ? 1.0f : 0.0f;
  head_ = (head_ + 1) % capacity_;  // overwrites the oldest entry when full
  size_ = std::min(size_ + 1, capacity_);
}

ReplayBuffer::Batch ReplayBuffer::sample(int batch, Rng& rng) const {
  if (size_ < batch) throw std::runtime_error("ReplayBuffer: not enough transitions");
  std::unordered_set<long> seen;
  std::vector<long> idx;
  idx.reserve(batch);
  while (static_cast<int>(idx.size()) < batch) {
    const long i = static_cast<long>(rng.uniform_int(size_));
    if (seen.insert(i).second) idx.push_back(i);
  }
  Batch b;
  b.obs.resize(batch, obs_.cols());
  b.act.resize(batch, act_.cols());
  b.next_obs.resize(batch, obs_.cols());
  b.reward.resize(batch);
  b.done.resize(batch);
  for (int r = 0; r < batch; ++r) {
    b.obs.row(r) = obs_.row(idx[r]).cast<double>();
    b.act.row(r) = act_.row(idx[r]).cast<double>();
    b.next_obs.row(r) = next_obs_.row(idx[r]).cast<double>();
    b.reward[r] = reward_[idx[r]];
    b.done[r] = done_[idx[r]];
  }
  return b;
}

SacAgent::SacAgent(const SacConfig& cfg)
    : cfg_(cfg), log_alpha_(std::log(cfg.init_alpha)), rng_(mix_seed(cfg.seed, 0xA1)) {
  if (cfg.obs_dim <= 0) throw std::invalid_argument("SacAgent: obs_dim unset");
  Rng init(mix_seed(cfg.seed, 0xA0));
  actor_ = nn::make_mlp(cfg.obs_dim, cfg.hidden, 2 * cfg.act_dim, nn::Act::kRelu,
                        nn::Act::kIdentity, init);
  q1_ = nn::make_mlp(cfg.obs_dim + cfg.act_dim, cfg.hidden, 1, nn::Act::kRelu,
                     nn::Act::kIdentity, init);
  q2_ = nn::make_mlp(cfg.obs_dim + cfg.act_dim, cfg.hidden, 1, nn::Act::kRelu,
                     nn::Act::kIdentity, init);
  t1_ = q1_;
  t2_ = q2_;
  opt_actor_ = nn::AdamState::init(actor_, cfg.lr);
  opt_q1_ = nn::AdamState::init(q1_, cfg.lr);
  opt_q2_ = nn::AdamState::init(q2_, cfg.lr);
}

PolicyEval policy_forward(const nn::DenseNet& actor, const MatrixXd& obs, const MatrixXd& noise,
                          double log_std_min, double log_std_max, nn::Tape* tape) {
  const long b = obs.rows();
  const int a_dim = static_cast<int>(noise.cols());
  PolicyEval p;
  p.noise = noise;
  const MatrixXd out = nn::forward(actor, obs, tape);
  p.mean = out.leftCols(a_dim);
  p.log_std.resize(b, a_dim);
  p.std_mask.resize(b, a_dim);
  for (long i = 0; i < b; ++i) {
    for (int d = 0; d < a_dim; ++d) {
      const double raw = out(i, a_dim + d);
      p.std_mask(i, d) = (raw > log_std_min && raw < log_std_max) ? 1.0 : 0.0;
      p.log_std(i, d) = std::clamp(raw, log_std_min, log_std_max);
    }
  }
  p.u = p.mean + p.log_std.array().exp().matrix().cwiseProduct(p.noise);
  p.action = p.u.array().tanh().matrix();
  p.log_prob.resize(b);
  for (long i = 0; i < b; ++i) {
    double lp = 0.0;
    for (int d = 0; d < a_dim; ++d) {
      lp += -0.5 * p.noise(i, d) * p.noise(i, d) - p.log_std(i, d) - kLogSqrt2Pi;
      lp -= log_one_minus_tanh_sq(p.u(i, d));
    }
    p.log_prob[i] = lp;
  }
  return p;
}

double actor_loss_grads(const nn::DenseNet& actor, const nn::DenseNet& q1,
                        const nn::DenseNet& q2, const MatrixXd& obs, const MatrixXd& noise,
                        double alpha, double log_std_min, double log_std_max, nn::Grads* grads,
                        VectorXd* log_prob) {
  const long bsz = obs.rows();
  const int a_dim = static_cast<int>(noise.cols());
  nn::Tape tape_actor;
  const PolicyEval pi =
      policy_forward(actor, obs, noise, log_std_min, log_std_max, grads ? &tape_actor : nullptr);
  if (log_prob) *log_prob = pi.log_prob;

  MatrixXd pi_in(bsz, obs.cols() + a_dim);
  pi_in << obs, pi.action;
  nn::Tape tq1, tq2;
  const VectorXd qa1 = nn::forward(q1, pi_in, grads ? &tq1 : nullptr).col(0);
  const VectorXd qa2 = nn::forward(q2, pi_in, grads ? &tq2 : nullptr).col(0);
  VectorXd qmin(bsz);
  MatrixXd dy1 = MatrixXd::Zero(bsz, 1), dy2 = MatrixXd::Zero(bsz, 1);
  for (long i = 0; i < bsz; ++i) {
    if (qa1[i] <= qa2[i]) {
      qmin[i] = qa1[i];
      dy1(i, 0) = -1.0 / bsz;
    } else {
      qmin[i] = qa2[i];
      dy2(i, 0) = -1.0 / bsz;
    }
  }
  const double loss = (alpha * pi.log_prob.array() - qmin.array()).mean();
  if (!grads) return loss;

  const MatrixXd dq_in1 = nn::backward_input(q1, tq1, dy1);
  const MatrixXd dq_in2 = nn::backward_input(q2, tq2, dy2);
  const MatrixXd d_action = dq_in1.rightCols(a_dim) + dq_in2.rightCols(a_dim);

  MatrixXd d_out(bsz, 2 * a_dim);
  for (long i = 0; i < bsz; ++i) {
    for (int d = 0; d < a_dim; ++d) {
      const double a = pi.action(i, d);
      const double dtanh = 1.0 - a * a;
      const double sigma = std::exp(pi.log_std(i, d));
      const double dlp_du = 2.0 * a;  // d(-log(1-tanh^2 u))/du
      const double da = d_action(i, d);
      d_out(i, d) = (alpha / bsz) * dlp_du + da * dtanh;
      const double dls = (alpha / bsz) * (-1.0 + dlp_du * sigma * pi.noise(i, d)) +
                         da * dtanh * sigma * pi.noise(i, d);
      d_out(i, a_dim + d) = dls * pi.std_mask(i, d);  // clamped log-std blocks grads
    }
  }
  nn::backward(actor, tape_actor, d_out, *grads);
  return loss;
}

MatrixXd SacAgent::draw_noise(long rows) {
  MatrixXd noise(rows, cfg_.act_dim);
  for (long i = 0; i < rows; ++i) {
    for (int d = 0; d < cfg_.act_dim; ++d) noise(i, d) = rng_.normal();
  }
  return noise;
}

PolicyEval SacAgent::sample_policy(const MatrixXd& obs) {
  return policy_forward(actor_, obs, draw_noise(obs.rows()), cfg_.log_std_min,
                        cfg_.log_std_max, nullptr);
}

VectorXd SacAgent::act(const VectorXd& obs, bool deterministic) {
  if (obs.size() != cfg_.obs_dim) throw std::invalid_argument("act: obs dim");
  if (deterministic) {
    const VectorXd out = nn::forward(actor_, obs);
    return out.head(cfg_.act_dim).array().tanh().matrix();
  }
  const PolicyEval p = sample_policy(MatrixXd(obs.transpose()));
  return p.action.row(0).transpose();
}

UpdateLosses SacAgent::update(ReplayBuffer& buffer) {
  const int bsz = cfg_.batch;
  ReplayBuffer::Batch batch = buffer.sample(bsz, rng_);
  const int a_dim = cfg_.act_dim;
  const double alpha = std::exp(log_alpha_);
  UpdateLosses losses;
  losses.alpha = alpha;

  // --- critic step: TD target from the twin targets and the entropy term
  const PolicyEval next_pi = sample_policy(batch.next_obs);
  MatrixXd next_in(bsz, cfg_.obs_dim + a_dim);
  next_in << batch.next_obs, next_pi.action;
  const VectorXd tq1 = nn::forward(t1_, next_in).col(0);
  const VectorXd tq2 = nn::forward(t2_, next_in).col(0);
  VectorXd target(bsz);
  for (int i = 0; i < bsz; ++i) {
    const double tq = std::min(tq1[i], tq2[i]) - alpha * next_pi.log_prob[i];
    target[i] = batch.reward[i] + cfg_.gamma * (1.0 - batch.done[i]) * tq;
  }

  MatrixXd q_in(bsz, cfg_.obs_dim + a_dim);
  q_in << batch.obs, batch.act;
  nn::Tape tape_q1, tape_q2;
  const VectorXd q1v = nn::forward(q1_, q_in, &tape_q1).col(0);
  const VectorXd q2v = nn::forward(q2_, q_in, &tape_q2).col(0);
  const VectorXd e1 = q1v - target, e2 = q2v - target;
  losses.critic = 0.5 * (e1.squaredNorm() + e2.squaredNorm()) / bsz;
  {
    nn::Grads g1 = nn::Grads::zeros_like(q1_);
    nn::backward(q1_, tape_q1, MatrixXd(e1 / bsz), g1);
    nn::Grads g2 = nn::Grads::zeros_like(q2_);
    nn::backward(q2_, tape_q2, MatrixXd(e2 / bsz), g2);
    nn::adam_step(q1_, g1, opt_q1_);
    nn::adam_step(q2_, g2, opt_q2_);
  }

  // --- actor step: reparameterized objective alpha*logpi - min(Q1,Q2)
  VectorXd pi_log_prob;
  {
    nn::Grads ga = nn::Grads::zeros_like(actor_);
    losses.actor = actor_loss_grads(actor_, q1_, q2_, batch.obs, draw_noise(bsz), alpha,
                                    cfg_.log_std_min, cfg_.log_std_max, &ga, &pi_log_prob);
    nn::adam_step(actor_, ga, opt_actor_);
  }

  // --- temperature step toward the entropy target
  const double alpha_grad = -(pi_log_prob.array() + cfg_.target_entropy).mean();
  losses.alpha_loss = -log_alpha_ * (pi_log_prob.array() + cfg_.target_entropy).mean();
  alpha_steps_ += 1;
  alpha_m_ = 0.9 * alpha_m_ + 0.1 * alpha_grad;
  alpha_v_ = 0.999 * alpha_v_ + 0.001 * alpha_grad * alpha_grad;
  const double mh = alpha_m_ / (1.0 - std::pow(0.9, alpha_steps_));
  const double vh = alpha_v_ / (1.0 - std::pow(0.999, alpha_steps_));
  log_alpha_ -= cfg_.lr * mh / (std::sqrt(vh) + 1e-8);
  losses.alpha = std::exp(log_alpha_);

  if (!std::isfinite(losses.critic) || !std::isfinite(losses.actor) ||
      !std::isfinite(losses.alpha)) {
    throw std::runtime_error("sac update: non-finite loss");
  }

  // --- polyak trail of the online critics
  for (size_t l = 0; l < q1_.layers.size(); ++l) {
    t1_.layers[l].w = (1.0 - cfg_.polyak) * t1_.layers[l].w + cfg_.polyak * q1_.layers[l].w;
    t1_.layers[l].b = (1.0 - cfg_.polyak) * t1_.layers[l].b + cfg_.polyak * q1_.layers[l].b;
    t2_.layers[l].w = (1.0 - cfg_.polyak) * t2_.layers[l].w + cfg_.polyak * q2_.layers[l].w;
    t2_.layers[l].b = (1.0 - cfg_.polyak) * t2_.layers[l].b + cfg_.polyak * q2_.layers[l].b;
  }
  t1_.version += 1;
  t2_.version += 1;
  return losses;
}

std::string SacAgent::actor_checkpoint() const { return nn::net_to_string(actor_); }

void SacAgent::load_actor(const std::string& text) {
  nn::DenseNet net = nn::net_from_string(text);
  if (net.input_dim() != cfg_.obs_dim || net.output_dim() != 2 * cfg_.act_dim) {
    throw std::runtime_error("load_actor: checkpoint dims do not match the observation variant");
  }
  actor_ = std::move(net);
}

TrainResult train_run(const context::PhysicsRanges& ranges, const env::EnvParams& env_params,
                      const repr::Bundle* bundle, const TrainConfig& cfg) {
  const bool needs_bundle = cfg.variant != env::Variant::kVisual;
  if (needs_bundle && (!bundle || !bundle->has_fusion())) {
    throw std::invalid_argument("train_run: latent variants require a frozen bundle");
  }

  TrainResult result;
  if (needs_bundle) result.repr_checksum = repr::bundle_checksum(*bundle);

  env::GraspEnv env(ranges, env_params);
  if (needs_bundle) env.attach_bundle(bundle);

  SacConfig sac_cfg = cfg.sac;
  sac_cfg.obs_dim =
      env::observation_dim(cfg.variant, needs_bundle ? bundle->encoders.dims.d_s : 32);
  sac_cfg.seed = cfg.seed;
  SacAgent agent(sac_cfg);
  ReplayBuffer buffer(sac_cfg.capacity, sac_cfg.obs_dim, sac_cfg.act_dim);
  Rng explore(mix_seed(cfg.seed, 0xA7));

  long episode = 0;
  double ep_return = 0.0;
  int ep_len = 0;
  UpdateLosses last;
  last.alpha = agent.alpha();
  if (cfg.steps > 0) {
    env.reset(mix_seed(cfg.seed, 0xE0 + episode));
  }
  VectorXd obs = cfg.steps > 0 ? env.observe(cfg.variant).vec : VectorXd();

  for (long step = 1; step <= cfg.steps; ++step) {
    VectorXd action(4);
    if (step <= sac_cfg.warmup) {
      for (int d = 0; d < 4; ++d) action[d] = explore.uniform(-1.0, 1.0);
    } else {
      action = agent.act(obs, false);
    }
    const env::StepResult sr = env.step(action);
    const VectorXd next_obs = env.observe(cfg.variant).vec;
    buffer.add(obs, action, sr.reward, next_obs, sr.done);
    obs = next_obs;
    ep_return += sr.reward;
    ep_len += 1;

    if (step > sac_cfg.warmup) last = agent.update(buffer);

    if (sr.done) {
      metrics::EpisodeRecord rec;
      rec.env_step = step;
      rec.success = sr.success ? 1 : 0;
      rec.ret = ep_return;
      rec.length = ep_len;
      rec.alpha = last.alpha;
      rec.actor_loss = last.actor;
      rec.critic_loss = last.critic;
      result.trace.episodes.push_back(rec);
      episode += 1;
      ep_return = 0.0;
      ep_len = 0;
      if (step < cfg.steps) {
        env.reset(mix_seed(cfg.seed, 0xE0 + episode));
        obs = env.observe(cfg.variant).vec;
      }
    }
  }

  if (needs_bundle && repr::bundle_checksum(*bundle) != result.repr_checksum) {
    throw std::runtime_error("train_run: representation checksum changed mid-run");
  }
  if (cfg.steps > 0) result.actor_checkpoint = agent.actor_checkpoint();
  result.env_steps = cfg.steps;
  return result;
}

}  // namespace gg::sac
