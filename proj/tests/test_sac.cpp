#include <doctest.h>

#include <cmath>
#include <functional>

#include "gg/sac.hpp"

using namespace gg;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using sac::ReplayBuffer;
using sac::SacAgent;
using sac::SacConfig;

namespace {

SacConfig tiny_config(int obs_dim, std::uint64_t seed = 0) {
  SacConfig cfg;
  cfg.obs_dim = obs_dim;
  cfg.hidden = {16, 16};
  cfg.batch = 16;
  cfg.warmup = 0;
  cfg.capacity = 1000;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("sac") {

TEST_CASE("deterministic action at zero mean is the zero vector") {
  SacConfig cfg = tiny_config(3);
  SacAgent agent(cfg);
  // zero the final layer so mean = 0
  nn::DenseNet net = nn::net_from_string(agent.actor_checkpoint());
  net.layers.back().w.setZero();
  net.layers.back().b.setZero();
  SacAgent agent2(cfg);
  agent2.load_actor(nn::net_to_string(net));
  const VectorXd a = agent2.act(VectorXd::Ones(3), true);
  CHECK(a.norm() == doctest::Approx(0.0));
}

TEST_CASE("stochastic actions stay strictly inside the unit box") {
  SacAgent agent(tiny_config(5, 1));
  for (int i = 0; i < 2000; ++i) {
    const VectorXd a = agent.act(VectorXd::Random(5), false);
    for (int d = 0; d < 4; ++d) {
      CHECK(a[d] > -1.0);
      CHECK(a[d] < 1.0);
    }
  }
}

TEST_CASE("empirical action mean vanishes for a symmetric policy") {
  SacConfig cfg = tiny_config(3, 2);
  SacAgent agent(cfg);
  nn::DenseNet net = nn::net_from_string(agent.actor_checkpoint());
  net.layers.back().w.setZero();
  net.layers.back().b.setZero();  // mean 0, log-std 0
  agent.load_actor(nn::net_to_string(net));
  Eigen::Vector4d acc = Eigen::Vector4d::Zero();
  const int n = 10000;
  const VectorXd obs = VectorXd::Zero(3);
  for (int i = 0; i < n; ++i) acc += agent.act(obs, false);
  acc /= n;
  for (int d = 0; d < 4; ++d) CHECK(std::abs(acc[d]) < 0.03);
}

TEST_CASE("action dimension mismatch is rejected") {
  SacAgent agent(tiny_config(3));
  CHECK_THROWS(agent.act(VectorXd::Ones(4), true));
}

TEST_CASE("replay overwrites the oldest entry and samples without replacement") {
  ReplayBuffer buf(8, 2, 4);
  for (int i = 0; i < 12; ++i) {
    buf.add(VectorXd::Constant(2, i), VectorXd::Zero(4), i, VectorXd::Constant(2, i + 1),
            false);
  }
  CHECK(buf.size() == 8);
  Rng rng(3);
  const auto batch = buf.sample(8, rng);
  // buffer holds rewards 4..11 after wraparound; a full-batch draw without
  // replacement must produce each exactly once
  std::vector<int> seen(12, 0);
  for (int i = 0; i < 8; ++i) seen[static_cast<int>(batch.reward[i])] += 1;
  for (int i = 0; i < 4; ++i) CHECK(seen[i] == 0);
  for (int i = 4; i < 12; ++i) CHECK(seen[i] == 1);
  CHECK_THROWS(buf.sample(9, rng));
}

TEST_CASE("fixed-point batch drives the critic loss to zero") {
  SacConfig cfg = tiny_config(2, 4);
  SacAgent agent(cfg);
  ReplayBuffer buf(64, 2, 4);
  // identical transitions with reward 0 and done: TD target is exactly 0
  for (int i = 0; i < 64; ++i) {
    buf.add(VectorXd::Zero(2), VectorXd::Constant(4, 0.3), 0.0, VectorXd::Zero(2), true);
  }
  double last = 0.0;
  for (int i = 0; i < 800; ++i) last = agent.update(buf).critic;
  CHECK(last < 1e-4);
}

TEST_CASE("alpha decreases while entropy exceeds the target") {
  SacConfig cfg = tiny_config(2, 5);
  // fresh policy entropy is far above a very low target only if the target is
  // small; with target -4 and a near-unit-std init the entropy term dominates
  SacAgent agent(cfg);
  ReplayBuffer buf(64, 2, 4);
  Rng rng(6);
  for (int i = 0; i < 64; ++i) {
    buf.add(VectorXd::Random(2), VectorXd::Random(4) * 0.9, rng.normal(), VectorXd::Random(2),
            false);
  }
  const double a0 = agent.alpha();
  double a_after = a0;
  for (int i = 0; i < 50; ++i) a_after = agent.update(buf).alpha;
  CHECK(a_after < a0);
}

TEST_CASE("critic gradient matches finite differences on a tiny instance") {
  SacConfig cfg = tiny_config(3, 7);
  cfg.hidden = {8};
  SacAgent agent(cfg);
  // reproduce the critic loss path by hand on fixed data
  Rng rng(8);
  const int b = 5;
  MatrixXd obs(b, 3), act(b, 4);
  VectorXd target(b);
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < 3; ++j) obs(i, j) = rng.normal();
    for (int j = 0; j < 4; ++j) act(i, j) = rng.uniform(-1.0, 1.0);
    target[i] = rng.normal();
  }
  nn::DenseNet critic = nn::net_from_string(nn::net_to_string(agent.critic1()));
  MatrixXd q_in(b, 7);
  q_in << obs, act;
  auto loss_value = [&]() {
    const VectorXd q = nn::forward(critic, q_in).col(0);
    return 0.5 * (q - target).squaredNorm() / b;
  };
  nn::Tape tape;
  const VectorXd q = nn::forward(critic, q_in, &tape).col(0);
  nn::Grads g = nn::Grads::zeros_like(critic);
  nn::backward(critic, tape, MatrixXd((q - target) / b), g);
  const VectorXd an = nn::flatten(g);
  const VectorXd theta = nn::flatten_params(critic);
  double worst = 0.0;
  for (long i = 0; i < theta.size(); ++i) {
    VectorXd tp = theta, tm = theta;
    tp[i] += 1e-5;
    tm[i] -= 1e-5;
    nn::set_params(critic, tp);
    const double lp = loss_value();
    nn::set_params(critic, tm);
    const double lm = loss_value();
    const double fd = (lp - lm) / 2e-5;
    const double denom = std::max({std::abs(fd), std::abs(an[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - an[i]) / denom);
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("targets move only through the polyak trail") {
  SacConfig cfg = tiny_config(2, 9);
  SacAgent agent(cfg);
  ReplayBuffer buf(64, 2, 4);
  for (int i = 0; i < 64; ++i) {
    buf.add(VectorXd::Random(2), VectorXd::Random(4) * 0.9, 1.0, VectorXd::Random(2), false);
  }
  const VectorXd q_before = nn::flatten_params(agent.critic1());
  const VectorXd t_before = nn::flatten_params(agent.target1());
  CHECK((q_before - t_before).norm() == 0.0);  // targets start as copies
  agent.update(buf);
  const VectorXd q_after = nn::flatten_params(agent.critic1());
  const VectorXd t_after = nn::flatten_params(agent.target1());
  const VectorXd expected =
      (1.0 - cfg.polyak) * t_before + cfg.polyak * q_after;
  CHECK((t_after - expected).norm() == doctest::Approx(0.0));
}

TEST_CASE("train_run: zero steps yields an empty trace and no checkpoint") {
  sac::TrainConfig cfg;
  cfg.variant = env::Variant::kVisual;
  cfg.steps = 0;
  cfg.sac = tiny_config(259, 10);
  const sac::TrainResult r = sac::train_run({}, {}, nullptr, cfg);
  CHECK(r.trace.episodes.empty());
  CHECK(r.actor_checkpoint.empty());
}

TEST_CASE("train_run is deterministic given the seed") {
  sac::TrainConfig cfg;
  cfg.variant = env::Variant::kVisual;
  cfg.steps = 600;
  cfg.seed = 11;
  cfg.sac = tiny_config(0, 11);
  cfg.sac.hidden = {16, 16};
  cfg.sac.warmup = 200;
  cfg.sac.batch = 32;
  const sac::TrainResult a = sac::train_run({}, {}, nullptr, cfg);
  const sac::TrainResult b = sac::train_run({}, {}, nullptr, cfg);
  REQUIRE(a.trace.episodes.size() == b.trace.episodes.size());
  REQUIRE(!a.trace.episodes.empty());
  for (size_t i = 0; i < a.trace.episodes.size(); ++i) {
    CHECK(a.trace.episodes[i].env_step == b.trace.episodes[i].env_step);
    CHECK(a.trace.episodes[i].ret == b.trace.episodes[i].ret);
    CHECK(a.trace.episodes[i].success == b.trace.episodes[i].success);
  }
  CHECK(a.actor_checkpoint == b.actor_checkpoint);  // byte-identical
  CHECK(a.trace.episodes.back().alpha > 0.0);
}

TEST_CASE("latent variants refuse to run without a bundle") {
  sac::TrainConfig cfg;
  cfg.variant = env::Variant::kLatentEnv;
  cfg.steps = 10;
  cfg.sac = tiny_config(43, 12);
  CHECK_THROWS(sac::train_run({}, {}, nullptr, cfg));
}

}  // TEST_SUITE

TEST_CASE("actor gradient matches finite differences") {
  Rng rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    Rng init(100 + trial);
    nn::DenseNet actor = nn::make_mlp(6, {12}, 8, nn::Act::kRelu, nn::Act::kIdentity, init);
    nn::DenseNet q1 = nn::make_mlp(10, {12}, 1, nn::Act::kRelu, nn::Act::kIdentity, init);
    nn::DenseNet q2 = nn::make_mlp(10, {12}, 1, nn::Act::kRelu, nn::Act::kIdentity, init);
    const int b = 6;
    MatrixXd obs(b, 6), noise(b, 4);
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < 6; ++j) obs(i, j) = rng.normal();
      for (int j = 0; j < 4; ++j) noise(i, j) = rng.normal();
    }
    const double alpha = 0.2;
    nn::Grads g = nn::Grads::zeros_like(actor);
    sac::actor_loss_grads(actor, q1, q2, obs, noise, alpha, -20.0, 2.0, &g);
    const VectorXd an = nn::flatten(g);
    const VectorXd theta = nn::flatten_params(actor);
    double worst = 0.0;
    long worst_i = 0;
    for (long i = 0; i < theta.size(); ++i) {
      VectorXd tp = theta, tm = theta;
      tp[i] += 1e-5;
      tm[i] -= 1e-5;
      nn::set_params(actor, tp);
      const double lp =
          sac::actor_loss_grads(actor, q1, q2, obs, noise, alpha, -20.0, 2.0, nullptr);
      nn::set_params(actor, tm);
      const double lm =
          sac::actor_loss_grads(actor, q1, q2, obs, noise, alpha, -20.0, 2.0, nullptr);
      const double fd = (lp - lm) / 2e-5;
      const double denom = std::max({std::abs(fd), std::abs(an[i]), 1e-6});
      if (std::abs(fd - an[i]) / denom > worst) {
        worst = std::abs(fd - an[i]) / denom;
        worst_i = i;
      }
    }
    CAPTURE(worst_i);
    CHECK(worst <= 1e-4);
  }
}
