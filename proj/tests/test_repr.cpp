#include <doctest.h>

#include <cmath>
#include <functional>

#include "gg/repr.hpp"
#include "gg/rng.hpp"

using namespace gg;
using Eigen::MatrixXd;
using Eigen::Vector4d;
using Eigen::VectorXd;
using repr::Dims;
using repr::FusionAE;
using repr::FusionBatch;
using repr::MICritic;
using repr::ReprLossWeights;

namespace {

FusionAE make_ae(Rng& rng, const Dims& d = Dims{}) {
  FusionAE ae;
  ae.dims = d;
  ae.quat_map = nn::make_mlp(4, {}, 4, nn::Act::kIdentity, nn::Act::kIdentity, rng);
  ae.shape_map = nn::make_mlp(d.fused_in(), {}, d.d_s, nn::Act::kTanh, nn::Act::kTanh, rng);
  ae.decoder = nn::make_mlp(d.dec_in(), {16}, d.dec_out(), nn::Act::kTanh, nn::Act::kIdentity, rng);
  return ae;
}

MICritic make_critic(Rng& rng, const Dims& d = Dims{}) {
  MICritic c;
  c.net = nn::make_mlp(4 + d.d_s + d.d_e, {32}, 1, nn::Act::kTanh, nn::Act::kIdentity, rng);
  return c;
}

FusionBatch random_batch(Rng& rng, int b, const Dims& d = Dims{}) {
  FusionBatch batch;
  batch.z_t.resize(b, d.d_t);
  batch.z_g.resize(b, d.d_g);
  batch.e.resize(b, d.d_e);
  batch.q.resize(b, 4);
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < d.d_t; ++j) batch.z_t(i, j) = rng.normal(0, 0.5);
    for (int j = 0; j < d.d_g; ++j) batch.z_g(i, j) = rng.normal(0, 0.5);
    for (int j = 0; j < d.d_e; ++j) batch.e(i, j) = rng.uniform(-1.0, 1.0);
    Vector4d q;
    for (int j = 0; j < 4; ++j) q[j] = rng.normal();
    batch.q.row(i) = q.normalized();
  }
  return batch;
}

context::ContextVector context_of(const Eigen::RowVectorXd& row) {
  context::ContextVector e;
  for (int i = 0; i < context::kDim; ++i) e.e[i] = row[i];
  return e;
}

}  // namespace

TEST_SUITE("repr") {

TEST_CASE("encode_fusion: identity quaternion map passes q through") {
  Rng rng(1);
  FusionAE ae = make_ae(rng);
  ae.quat_map.layers[0].w = Eigen::Matrix4d::Identity();
  ae.quat_map.layers[0].b.setZero();
  context::ContextVector e{};
  const quat::UnitQuat q{quat::Vec4(1, 0, 0, 0)};
  const repr::LatentCode code =
      repr::encode_fusion(ae, VectorXd::Zero(24), VectorXd::Zero(8), e, q);
  CHECK((code.z_q - Vector4d(1, 0, 0, 0)).norm() == doctest::Approx(0.0));
}

TEST_CASE("encode_fusion: zero shape weights give zero z_s") {
  Rng rng(2);
  FusionAE ae = make_ae(rng);
  ae.shape_map.layers[0].w.setZero();
  ae.shape_map.layers[0].b.setZero();
  context::ContextVector e{};
  for (int i = 0; i < 8; ++i) e.e[i] = 0.5;
  const repr::LatentCode code =
      repr::encode_fusion(ae, VectorXd::Ones(24), VectorXd::Ones(8), e, quat::UnitQuat{});
  CHECK(code.z_s.norm() == doctest::Approx(0.0));
}

TEST_CASE("encode_fusion: hand-set single-unit row matches tanh computation") {
  Rng rng(3);
  FusionAE ae = make_ae(rng);
  ae.shape_map.layers[0].w.setZero();
  ae.shape_map.layers[0].b.setZero();
  // unit weight picking z_t[0] plus one context input
  ae.shape_map.layers[0].w(0, 0) = 1.0;
  ae.shape_map.layers[0].w(0, 24 + 8 + 2) = 0.5;
  ae.shape_map.layers[0].b[0] = 0.1;
  VectorXd z_t = VectorXd::Zero(24);
  z_t[0] = 0.7;
  context::ContextVector e{};
  e.e[2] = -0.4;
  const repr::LatentCode code =
      repr::encode_fusion(ae, z_t, VectorXd::Zero(8), e, quat::UnitQuat{});
  CHECK(code.z_s[0] == doctest::Approx(std::tanh(0.7 + 0.5 * -0.4 + 0.1)).epsilon(1e-12));
  CHECK(code.z_s[1] == doctest::Approx(std::tanh(0.0)));
}

TEST_CASE("latent code layout is [z_q | z_s | e]") {
  Rng rng(4);
  FusionAE ae = make_ae(rng);
  FusionBatch b = random_batch(rng, 1);
  const repr::LatentCode code = repr::encode_fusion(
      ae, b.z_t.row(0).transpose(), b.z_g.row(0).transpose(), context_of(b.e.row(0)),
      quat::UnitQuat{Vector4d(b.q.row(0).transpose())});
  const VectorXd full = code.full();
  REQUIRE(full.size() == 44);
  CHECK((full.head(4) - code.z_q).norm() == 0.0);
  CHECK((full.segment(4, 32) - code.z_s).norm() == 0.0);
  for (int i = 0; i < 8; ++i) CHECK(full[36 + i] == b.e(0, i));  // bit-exact pass-through
}

TEST_CASE("decode_fusion: head partition offsets and zero decoder") {
  Rng rng(5);
  FusionAE ae = make_ae(rng);
  // hand-set final layer so each head's first entry is recognizable
  auto& last = ae.decoder.layers.back();
  last.w.setZero();
  last.b.setZero();
  last.b[0] = 1.0;        // z_t head
  last.b[24] = 2.0;       // z_g head
  last.b[24 + 8] = 3.0;   // e head
  last.b[24 + 8 + 8] = 4.0;  // q head
  const repr::DecodedHeads h = repr::decode_fusion(ae, Vector4d::Zero(), VectorXd::Zero(32));
  CHECK(h.z_t_hat[0] == doctest::Approx(1.0));
  CHECK(h.z_g_hat[0] == doctest::Approx(2.0));
  CHECK(h.e_hat[0] == doctest::Approx(3.0));
  CHECK(h.q_hat_raw[0] == doctest::Approx(4.0));
  CHECK(h.z_t_hat.tail(23).norm() == doctest::Approx(0.0));

  auto& first = ae.decoder.layers.front();
  first.w.setZero();
  first.b.setZero();
  last.b.setZero();
  const repr::DecodedHeads zero = repr::decode_fusion(ae, Vector4d::Ones(), VectorXd::Ones(32));
  CHECK(zero.z_t_hat.norm() == doctest::Approx(0.0));
  CHECK(zero.q_hat_raw.norm() == doctest::Approx(0.0));
}

TEST_CASE("loss_ae3: perfect reconstruction with identity A is exactly zero") {
  Rng rng(6);
  Dims d;
  FusionAE ae = make_ae(rng, d);
  ae.quat_map.layers[0].w = Eigen::Matrix4d::Identity();
  ae.quat_map.layers[0].b.setZero();
  // decoder that reproduces the inputs exactly cannot be hand-built through
  // the tanh hidden layer, so check the algebra on a single constructed case:
  // zero latent everywhere and zero targets except the quaternion term.
  FusionBatch b;
  b.z_t = MatrixXd::Zero(1, d.d_t);
  b.z_g = MatrixXd::Zero(1, d.d_g);
  b.e = MatrixXd::Zero(1, d.d_e);
  b.q.resize(1, 4);
  b.q << 1, 0, 0, 0;
  auto& first = ae.decoder.layers.front();
  auto& last = ae.decoder.layers.back();
  first.w.setZero();
  first.b.setZero();
  last.w.setZero();
  last.b.setZero();
  last.b[d.d_t + d.d_g + d.d_e + 0] = 1.0;  // q_hat = (1,0,0,0) = q, P(q_hat) = q
  ReprLossWeights w;
  CHECK(repr::loss_ae3(ae, b, w) == doctest::Approx(0.0));
}

TEST_CASE("loss_ae3: range term arithmetic") {
  Rng rng(7);
  Dims d;
  FusionAE ae = make_ae(rng, d);
  ae.quat_map.layers[0].w = Eigen::Matrix4d::Identity();
  ae.quat_map.layers[0].b.setZero();
  auto& first = ae.decoder.layers.front();
  auto& last = ae.decoder.layers.back();
  first.w.setZero();
  first.b.setZero();
  last.w.setZero();
  last.b.setZero();
  last.b[d.d_t + d.d_g + d.d_e] = 1.0;  // exact q reconstruction

  FusionBatch b;
  b.z_t = MatrixXd::Zero(1, d.d_t);
  b.z_g = MatrixXd::Zero(1, d.d_g);
  b.e = MatrixXd::Zero(1, d.d_e);
  b.q.resize(1, 4);
  b.q << 1, 0, 0, 0;

  ReprLossWeights w;
  w.lambda_e = 0.0;  // isolate the range term
  // one component at 1.5 -> excess 0.5 -> lambda_r * 0.25
  last.b[d.d_t + d.d_g + 3] = 1.5;
  CHECK(repr::loss_ae3(ae, b, w) == doctest::Approx(w.lambda_r * 0.25));
  // inside the box -> no range penalty
  last.b[d.d_t + d.d_g + 3] = 0.99;
  CHECK(repr::loss_ae3(ae, b, w) == doctest::Approx(0.0));
  last.b[d.d_t + d.d_g + 3] = -1.0;
  CHECK(repr::loss_ae3(ae, b, w) == doctest::Approx(0.0));
}

TEST_CASE("infonce: B = 1 is exactly zero") {
  Rng rng(8);
  MICritic critic = make_critic(rng);
  MatrixXd zq = MatrixXd::Random(1, 4), zse = MatrixXd::Random(1, 40);
  CHECK(repr::infonce(critic, zq, zse) == 0.0);
}

TEST_CASE("infonce: never exceeds log B") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    MICritic critic = make_critic(rng);
    for (auto& l : critic.net.layers) l.w *= rng.uniform(0.2, 5.0);
    critic.tau = rng.uniform(0.02, 1.0);
    const int b = 1 + static_cast<int>(rng.uniform_int(16));
    MatrixXd zq(b, 4), zse(b, 40);
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < 4; ++j) zq(i, j) = rng.normal(0, 2);
      for (int j = 0; j < 40; ++j) zse(i, j) = rng.normal(0, 2);
    }
    CHECK(repr::infonce(critic, zq, zse) <= std::log(static_cast<double>(b)) + 1e-9);
  }
}

TEST_CASE("infonce: empty batch is rejected") {
  Rng rng(10);
  MICritic critic = make_critic(rng);
  MatrixXd zq(0, 4), zse(0, 40);
  CHECK_THROWS(repr::infonce(critic, zq, zse));
}

TEST_CASE("loss_mi hinge") {
  Rng rng(11);
  MICritic critic = make_critic(rng);
  MatrixXd zq = MatrixXd::Random(1, 4), zse = MatrixXd::Random(1, 40);
  // B = 1 makes the estimate exactly 0
  critic.i_max = 0.01;
  CHECK(repr::loss_mi(critic, zq, zse) == doctest::Approx(0.0));  // hinge inactive
  critic.i_max = -0.5;  // estimate (0) exceeds the ceiling by 0.5
  critic.beta = 1.0;
  CHECK(repr::loss_mi(critic, zq, zse) == doctest::Approx(0.5));
  critic.beta = 0.0;
  CHECK(repr::loss_mi(critic, zq, zse) == doctest::Approx(0.0));
}

TEST_CASE("critic ascent is monotone over five steps on a fixed batch") {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    Dims d;
    MICritic critic = make_critic(rng, d);
    const int b = 32;
    MatrixXd zq(b, 4), zse(b, d.d_s + d.d_e);
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < 4; ++j) zq(i, j) = rng.normal();
      for (int j = 0; j < d.d_s + d.d_e; ++j) zse(i, j) = rng.normal();
    }
    double prev = -1e300;
    for (int k = 0; k < 5; ++k) {
      const double before = repr::critic_ascent_step(critic, zq, zse, 1e-3);
      CHECK(before >= prev - 1e-12);
      prev = before;
    }
    CHECK(repr::infonce(critic, zq, zse) >= prev - 1e-12);
  }
}

TEST_CASE("train_stage1: zero budget returns the initialization, frozen") {
  Rng rng(13);
  MatrixXd x_t = MatrixXd::Random(64, 256).cwiseAbs();
  MatrixXd x_g = MatrixXd::Random(64, 6);
  repr::Stage1Config cfg;
  cfg.updates = 0;
  cfg.seed = 5;
  repr::Stage1Report rep;
  const repr::ModalityEncoders m = repr::train_stage1(x_t, x_g, cfg, &rep);
  CHECK(m.frozen);
  CHECK(rep.mse_t_initial == doctest::Approx(rep.mse_t_final));

  // identical seeds give bit-identical weights
  const repr::ModalityEncoders m2 = repr::train_stage1(x_t, x_g, cfg, nullptr);
  CHECK((nn::flatten_params(m.enc_t) - nn::flatten_params(m2.enc_t)).norm() == 0.0);
}

TEST_CASE("train_stage1: short run is deterministic and reduces holdout loss") {
  Rng data_rng(14);
  const int n = 200;
  MatrixXd x_t(n, 256), x_g(n, 6);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 256; ++j) x_t(i, j) = data_rng.uniform() < 0.3 ? 1.0 : 0.0;
    for (int j = 0; j < 6; ++j) x_g(i, j) = data_rng.uniform(-1.0, 1.0);
  }
  repr::Stage1Config cfg;
  cfg.updates = 300;
  cfg.batch = 32;
  cfg.seed = 7;
  repr::Stage1Report rep;
  const repr::ModalityEncoders a = repr::train_stage1(x_t, x_g, cfg, &rep);
  CHECK(rep.mse_t_final < rep.mse_t_initial);
  const repr::ModalityEncoders b = repr::train_stage1(x_t, x_g, cfg, nullptr);
  CHECK((nn::flatten_params(a.enc_t) - nn::flatten_params(b.enc_t)).norm() == 0.0);
  CHECK((nn::flatten_params(a.dec_g) - nn::flatten_params(b.dec_g)).norm() == 0.0);
}

TEST_CASE("grammarize requires frozen components and is deterministic") {
  Rng rng(15);
  Dims d;
  FusionAE ae = make_ae(rng, d);
  repr::ModalityEncoders enc;
  enc.dims = d;
  Rng init(16);
  enc.enc_t = nn::make_mlp(d.d_xt, {32}, d.d_t, nn::Act::kTanh, nn::Act::kIdentity, init);
  enc.dec_t = nn::make_mlp(d.d_t, {32}, d.d_xt, nn::Act::kTanh, nn::Act::kIdentity, init);
  enc.enc_g = nn::make_mlp(d.d_xg, {8}, d.d_g, nn::Act::kTanh, nn::Act::kIdentity, init);
  enc.dec_g = nn::make_mlp(d.d_g, {8}, d.d_xg, nn::Act::kTanh, nn::Act::kIdentity, init);

  const VectorXd x_t = VectorXd::Random(256);
  const VectorXd x_g = VectorXd::Random(6);
  context::ContextVector e{};
  const quat::UnitQuat q{quat::Vec4(0, 1, 0, 0)};

  CHECK_THROWS(repr::grammarize(enc, ae, x_t, x_g, e, q));  // unfrozen
  enc.frozen = true;
  CHECK_THROWS(repr::grammarize(enc, ae, x_t, x_g, e, q));
  ae.frozen = true;
  const repr::LatentCode c1 = repr::grammarize(enc, ae, x_t, x_g, e, q);
  const repr::LatentCode c2 = repr::grammarize(enc, ae, x_t, x_g, e, q);
  CHECK((c1.full() - c2.full()).norm() == 0.0);
}

TEST_CASE("fusion gradients match finite differences (including the A penalty)") {
  Rng rng(17);
  Dims d;
  d.d_t = 6;
  d.d_g = 3;
  d.d_s = 5;
  d.d_xt = 8;
  d.d_xg = 3;
  FusionAE ae;
  ae.dims = d;
  Rng init(18);
  ae.quat_map = nn::make_mlp(4, {}, 4, nn::Act::kIdentity, nn::Act::kIdentity, init);
  ae.shape_map = nn::make_mlp(d.fused_in(), {}, d.d_s, nn::Act::kTanh, nn::Act::kTanh, init);
  ae.decoder = nn::make_mlp(d.dec_in(), {8}, d.dec_out(), nn::Act::kTanh, nn::Act::kIdentity, init);

  FusionBatch batch;
  batch.z_t = MatrixXd::Random(4, d.d_t);
  batch.z_g = MatrixXd::Random(4, d.d_g);
  batch.e = MatrixXd::Random(4, d.d_e);
  batch.q.resize(4, 4);
  for (int i = 0; i < 4; ++i) {
    Vector4d q;
    for (int j = 0; j < 4; ++j) q[j] = rng.normal();
    batch.q.row(i) = q.normalized();
  }
  ReprLossWeights w;
  w.lambda_a = 0.05;
  // make the singular values distinct so the penalty is smooth here
  ae.quat_map.layers[0].w =
      Eigen::Vector4d(1.3, 0.9, 0.7, 1.1).asDiagonal().toDenseMatrix() +
      0.05 * Eigen::Matrix4d(ae.quat_map.layers[0].w);

  Rng mi_init(19);
  MICritic critic = make_critic(mi_init, d);
  critic.i_max = 0.0;  // keep the hinge active so its gradient path is checked
  critic.beta = 0.7;

  repr::FusionGrads grads = repr::FusionGrads::zeros_like(ae);
  const double loss0 = repr::loss_repr_grads(ae, batch, w, grads, &critic);
  CHECK(std::isfinite(loss0));

  auto loss_value = [&]() {
    MatrixXd z_q = nn::forward(ae.quat_map, batch.q);
    MatrixXd fused(batch.z_t.rows(), d.fused_in());
    fused << batch.z_t, batch.z_g, batch.e;
    MatrixXd z_s = nn::forward(ae.shape_map, fused);
    MatrixXd z_se(batch.z_t.rows(), d.d_s + d.d_e);
    z_se.leftCols(d.d_s) = z_s;
    z_se.rightCols(d.d_e) = batch.e;
    return repr::loss_ae3(ae, batch, w) + repr::loss_mi(critic, z_q, z_se);
  };
  auto fd_check = [&](nn::DenseNet& net, const nn::Grads& analytic) {
    const VectorXd theta = nn::flatten_params(net);
    const double h = 1e-5;
    const VectorXd an = nn::flatten(analytic);
    double worst = 0.0;
    for (long i = 0; i < theta.size(); ++i) {
      VectorXd tp = theta, tm = theta;
      tp[i] += h;
      tm[i] -= h;
      nn::set_params(net, tp);
      const double lp = loss_value();
      nn::set_params(net, tm);
      const double lm = loss_value();
      const double fd = (lp - lm) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(an[i]), 1e-6});
      worst = std::max(worst, std::abs(fd - an[i]) / denom);
    }
    nn::set_params(net, theta);
    return worst;
  };
  CHECK(fd_check(ae.quat_map, grads.quat) <= 1e-4);
  CHECK(fd_check(ae.shape_map, grads.shape) <= 1e-4);
  CHECK(fd_check(ae.decoder, grads.dec) <= 1e-4);
}

TEST_CASE("infonce critic gradients match finite differences") {
  Rng rng(24);
  Dims d;
  d.d_s = 5;
  MICritic critic = make_critic(rng, d);
  const int b = 6;
  MatrixXd zq(b, 4), zse(b, d.d_s + d.d_e);
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < 4; ++j) zq(i, j) = rng.normal();
    for (int j = 0; j < d.d_s + d.d_e; ++j) zse(i, j) = rng.normal();
  }
  nn::Grads g = nn::Grads::zeros_like(critic.net);
  repr::infonce_critic_grads(critic, zq, zse, g);
  const VectorXd an = nn::flatten(g);
  const VectorXd theta = nn::flatten_params(critic.net);
  const double h = 1e-5;
  double worst = 0.0;
  for (long i = 0; i < theta.size(); ++i) {
    VectorXd tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    nn::set_params(critic.net, tp);
    const double lp = repr::infonce(critic, zq, zse);
    nn::set_params(critic.net, tm);
    const double lm = repr::infonce(critic, zq, zse);
    const double fd = (lp - lm) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(an[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - an[i]) / denom);
  }
  nn::set_params(critic.net, theta);
  CHECK(worst <= 1e-4);
}

TEST_CASE("train_stage2: short run freezes, certifies, and passes e through") {
  Rng data_rng(19);
  const int n = 160;
  repr::Stage2Data data;
  data.x_t.resize(n, 256);
  data.x_g.resize(n, 6);
  data.e.resize(n, 8);
  data.q.resize(n, 4);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 256; ++j) data.x_t(i, j) = data_rng.uniform() < 0.3 ? 1.0 : 0.0;
    for (int j = 0; j < 6; ++j) data.x_g(i, j) = data_rng.uniform(-1.0, 1.0);
    for (int j = 0; j < 8; ++j) data.e(i, j) = data_rng.uniform(-1.0, 1.0);
    Vector4d q;
    for (int j = 0; j < 4; ++j) q[j] = data_rng.normal();
    data.q.row(i) = q.normalized();
  }
  MatrixXd x_t = data.x_t, x_g = data.x_g;
  repr::Stage1Config s1;
  s1.updates = 200;
  s1.batch = 32;
  s1.seed = 20;
  const repr::ModalityEncoders enc = repr::train_stage1(x_t, x_g, s1);

  repr::Stage2Config s2;
  s2.batches = 120;
  s2.batch = 24;
  s2.eval_batch = 16;
  s2.eval_rounds = 4;
  s2.seed = 21;
  const repr::Stage2Result res = repr::train_stage2(enc, data, s2);
  CHECK(res.fusion.frozen);
  CHECK(res.report.recon_final < res.report.recon_initial);
  CHECK(res.report.infonce_train <= std::log(16.0) + 1e-9);

  // pass-through invariant on the trained fusion stage
  const repr::LatentCode code = repr::grammarize(
      enc, res.fusion, data.x_t.row(0).transpose(), data.x_g.row(0).transpose(),
      context_of(data.e.row(0)), quat::UnitQuat{Vector4d(data.q.row(0).transpose())});
  for (int i = 0; i < 8; ++i) CHECK(code.e.e[i] == data.e(0, i));

  // determinism
  const repr::Stage2Result res2 = repr::train_stage2(enc, data, s2);
  CHECK((nn::flatten_params(res.fusion.shape_map) - nn::flatten_params(res2.fusion.shape_map))
            .norm() == 0.0);
}

TEST_CASE("bundle round-trip and tamper detection") {
  Rng data_rng(22);
  MatrixXd x_t(48, 256), x_g(48, 6);
  for (int i = 0; i < 48; ++i) {
    for (int j = 0; j < 256; ++j) x_t(i, j) = data_rng.uniform() < 0.3 ? 1.0 : 0.0;
    for (int j = 0; j < 6; ++j) x_g(i, j) = data_rng.uniform(-1.0, 1.0);
  }
  repr::Stage1Config s1;
  s1.updates = 20;
  s1.batch = 16;
  s1.seed = 23;
  repr::Bundle b;
  b.encoders = repr::train_stage1(x_t, x_g, s1);
  const std::string text = repr::bundle_to_string(b);
  const repr::Bundle back = repr::bundle_from_string(text);
  CHECK(back.encoders.frozen);
  CHECK((nn::flatten_params(back.encoders.enc_t) - nn::flatten_params(b.encoders.enc_t)).norm() ==
        0.0);
  CHECK(repr::bundle_checksum(back) == repr::bundle_checksum(b));

  // flip one digit inside a weight value (first fractional digit after the
  // enc_t block header)
  std::string tampered = text;
  const auto dot = tampered.find('.', tampered.find("block enc_t"));
  REQUIRE(dot != std::string::npos);
  tampered[dot + 1] = tampered[dot + 1] == '1' ? '2' : '1';
  CHECK_THROWS_WITH_AS(repr::bundle_from_string(tampered),
                       doctest::Contains("checksum mismatch"), std::runtime_error);
}

}  // TEST_SUITE
