#include "gg/repr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gg/rng.hpp"
#include "gg/sha256.hpp"

namespace gg::repr {

using nn::Act;
using nn::DenseNet;
using nn::Grads;
using nn::Tape;

Eigen::Vector4d FusionAE::singular_values() const {
  const Eigen::Matrix4d a = a_matrix();
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(a);
  return svd.singularValues();
}

VectorXd LatentCode::full() const {
  VectorXd out(4 + z_s.size() + context::kDim);
  out.head(4) = z_q;
  out.segment(4, z_s.size()) = z_s;
  for (int i = 0; i < context::kDim; ++i) out[4 + z_s.size() + i] = e.e[i];
  return out;
}

LatentCode encode_fusion(const FusionAE& ae, const VectorXd& z_t, const VectorXd& z_g,
                         const context::ContextVector& e, const quat::UnitQuat& q) {
  if (z_t.size() != ae.dims.d_t || z_g.size() != ae.dims.d_g) {
    throw std::invalid_argument("encode_fusion: embedding dims");
  }
  LatentCode code;
  code.z_q = nn::forward(ae.quat_map, VectorXd(q.v));
  VectorXd fused(ae.dims.fused_in());
  fused.head(ae.dims.d_t) = z_t;
  fused.segment(ae.dims.d_t, ae.dims.d_g) = z_g;
  for (int i = 0; i < context::kDim; ++i) fused[ae.dims.d_t + ae.dims.d_g + i] = e.e[i];
  code.z_s = nn::forward(ae.shape_map, fused);
  code.e = e;  // pass-through, bit-exact
  return code;
}

DecodedHeads decode_fusion(const FusionAE& ae, const Vector4d& z_q, const VectorXd& z_s) {
  if (z_s.size() != ae.dims.d_s) throw std::invalid_argument("decode_fusion: code dims");
  VectorXd in(ae.dims.dec_in());
  in.head(4) = z_q;
  in.tail(ae.dims.d_s) = z_s;
  const VectorXd out = nn::forward(ae.decoder, in);
  DecodedHeads h;
  const int dt = ae.dims.d_t, dg = ae.dims.d_g, de = ae.dims.d_e;
  h.z_t_hat = out.head(dt);
  h.z_g_hat = out.segment(dt, dg);
  h.e_hat = out.segment(dt + dg, de);
  h.q_hat_raw = out.tail(4);
  return h;
}

namespace {

// loss term for one raw decoded quaternion, plus d(term)/d(q_hat).
// P uses the sample's own q as the sign reference and renormalizes exactly.
double quat_term(const Eigen::Vector4d& q, const Eigen::Vector4d& q_hat,
                 Eigen::Vector4d* grad) {
  if (grad) grad->setZero();
  const double n = q_hat.norm();
  if (n == 0.0) return 0.0;  // P(0) = reference = q, zero residual
  const double sign = q_hat.dot(q) < 0.0 ? -1.0 : 1.0;
  const Eigen::Vector4d u = q_hat / n;
  const Eigen::Vector4d r = q - sign * u;
  if (grad) *grad = (-2.0 * sign / n) * (r - u * u.dot(r));
  return r.squaredNorm();
}

struct Ae3Eval {
  double loss = 0.0;
  Tape tape_q, tape_s, tape_d;
  MatrixXd z_q, z_s, dec_in, dec_out;
  MatrixXd fused;
  MatrixXd d_dec_out;  // filled when want_grads
};

MatrixXd stack_fused(const Dims& d, const FusionBatch& b) {
  MatrixXd fused(b.z_t.rows(), d.fused_in());
  fused.leftCols(d.d_t) = b.z_t;
  fused.middleCols(d.d_t, d.d_g) = b.z_g;
  fused.rightCols(d.d_e) = b.e;
  return fused;
}

Ae3Eval ae3_eval(const FusionAE& ae, const FusionBatch& b, const ReprLossWeights& w,
                 bool want_grads) {
  const Dims& d = ae.dims;
  const long n = b.z_t.rows();
  if (n == 0) throw std::invalid_argument("ae3: empty batch");
  if (b.z_t.cols() != d.d_t || b.z_g.cols() != d.d_g || b.e.cols() != d.d_e ||
      b.q.cols() != 4 || b.z_g.rows() != n || b.e.rows() != n || b.q.rows() != n) {
    throw std::invalid_argument("ae3: batch dims");
  }
  Ae3Eval ev;
  ev.z_q = nn::forward(ae.quat_map, b.q, want_grads ? &ev.tape_q : nullptr);
  ev.fused = stack_fused(d, b);
  ev.z_s = nn::forward(ae.shape_map, ev.fused, want_grads ? &ev.tape_s : nullptr);
  ev.dec_in.resize(n, d.dec_in());
  ev.dec_in.leftCols(4) = ev.z_q;
  ev.dec_in.rightCols(d.d_s) = ev.z_s;
  ev.dec_out = nn::forward(ae.decoder, ev.dec_in, want_grads ? &ev.tape_d : nullptr);

  const auto zt_hat = ev.dec_out.leftCols(d.d_t);
  const auto zg_hat = ev.dec_out.middleCols(d.d_t, d.d_g);
  const auto e_hat = ev.dec_out.middleCols(d.d_t + d.d_g, d.d_e);
  const auto q_hat = ev.dec_out.rightCols(4);

  double loss = (zt_hat - b.z_t).squaredNorm() + (zg_hat - b.z_g).squaredNorm() +
                w.lambda_e * (e_hat - b.e).squaredNorm();
  // soft range constraint on e_hat
  const MatrixXd excess = (e_hat.array().abs() - 1.0).cwiseMax(0.0);
  loss += w.lambda_r * excess.squaredNorm();

  if (want_grads) {
    ev.d_dec_out.setZero(n, d.dec_out());
    ev.d_dec_out.leftCols(d.d_t) = 2.0 / n * (zt_hat - b.z_t);
    ev.d_dec_out.middleCols(d.d_t, d.d_g) = 2.0 / n * (zg_hat - b.z_g);
    ev.d_dec_out.middleCols(d.d_t + d.d_g, d.d_e) =
        2.0 * w.lambda_e / n * (e_hat - b.e) +
        (2.0 * w.lambda_r / n) * (excess.array() * e_hat.array().sign()).matrix();
  }
  for (long i = 0; i < n; ++i) {
    Eigen::Vector4d gq;
    const double term =
        quat_term(b.q.row(i).transpose(), q_hat.row(i).transpose(), want_grads ? &gq : nullptr);
    loss += w.lambda_q * term;
    if (want_grads) {
      ev.d_dec_out.row(i).tail(4) += (w.lambda_q / n) * gq.transpose();
    }
  }
  loss /= static_cast<double>(n);

  const Eigen::Vector4d sv = ae.singular_values();
  loss += w.lambda_a * (sv.array() - 1.0).square().sum();
  ev.loss = loss;
  return ev;
}

// d(lambda_a * sum_j (sigma_j(A)-1)^2) / dA = lambda_a * U diag(2(sigma-1)) V^T
Eigen::Matrix4d svd_penalty_grad(const MatrixXd& a_in, double lambda_a) {
  const Eigen::Matrix4d a = a_in;
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector4d sv = svd.singularValues();
  return lambda_a * svd.matrixU() * (2.0 * (sv.array() - 1.0)).matrix().asDiagonal() *
         svd.matrixV().transpose();
}

struct NceEval {
  double value = 0.0;
  MatrixXd dscores;  // B x B, d(value)/d(score)
  Tape tape;
  long batch = 0;
};

NceEval nce_eval(const MICritic& critic, const MatrixXd& z_q, const MatrixXd& z_se,
                 bool want_grads) {
  const long b = z_q.rows();
  if (b == 0) throw std::invalid_argument("infonce: empty batch");
  if (z_se.rows() != b) throw std::invalid_argument("infonce: pair count mismatch");
  const long dq = z_q.cols(), ds = z_se.cols();
  if (dq + ds != critic.net.input_dim()) throw std::invalid_argument("infonce: critic dims");

  MatrixXd pair_in(b * b, dq + ds);
  for (long i = 0; i < b; ++i) {
    pair_in.block(i * b, 0, b, dq).rowwise() = z_q.row(i);
    pair_in.block(i * b, dq, b, ds) = z_se;
  }
  NceEval ev;
  ev.batch = b;
  const MatrixXd out = nn::forward(critic.net, pair_in, want_grads ? &ev.tape : nullptr);

  double value = 0.0;
  if (want_grads) ev.dscores.setZero(b, b);
  for (long i = 0; i < b; ++i) {
    Eigen::VectorXd row(b);
    for (long j = 0; j < b; ++j) row[j] = out(i * b + j, 0) / critic.tau;
    const double m = row.maxCoeff();
    const Eigen::VectorXd ex = (row.array() - m).exp();
    const double denom = ex.sum();
    value += row[i] - (m + std::log(denom / static_cast<double>(b)));
    if (want_grads) {
      for (long j = 0; j < b; ++j) {
        ev.dscores(i, j) = ((i == j ? 1.0 : 0.0) - ex[j] / denom) / (critic.tau * b);
      }
    }
  }
  ev.value = value / static_cast<double>(b);
  return ev;
}

MatrixXd dscores_as_column(const NceEval& ev) {
  const long b = ev.batch;
  MatrixXd dy(b * b, 1);
  for (long i = 0; i < b; ++i) {
    for (long j = 0; j < b; ++j) dy(i * b + j, 0) = ev.dscores(i, j);
  }
  return dy;
}

}  // namespace

double loss_ae3(const FusionAE& ae, const FusionBatch& batch, const ReprLossWeights& w) {
  return ae3_eval(ae, batch, w, false).loss;
}

double infonce(const MICritic& critic, const MatrixXd& z_q, const MatrixXd& z_se) {
  return nce_eval(critic, z_q, z_se, false).value;
}

double loss_mi(const MICritic& critic, const MatrixXd& z_q, const MatrixXd& z_se) {
  return critic.beta * std::max(0.0, infonce(critic, z_q, z_se) - critic.i_max);
}

double critic_ascent_step(MICritic& critic, const MatrixXd& z_q, const MatrixXd& z_se,
                          double lr) {
  Grads g = Grads::zeros_like(critic.net);
  const double value = infonce_critic_grads(critic, z_q, z_se, g);
  nn::sgd_step(critic.net, g, lr);  // ascent
  return value;
}

double infonce_critic_grads(const MICritic& critic, const MatrixXd& z_q, const MatrixXd& z_se,
                            nn::Grads& g) {
  NceEval ev = nce_eval(critic, z_q, z_se, true);
  nn::backward(critic.net, ev.tape, dscores_as_column(ev), g);
  return ev.value;
}

FusionGrads FusionGrads::zeros_like(const FusionAE& ae) {
  FusionGrads g;
  g.quat = Grads::zeros_like(ae.quat_map);
  g.shape = Grads::zeros_like(ae.shape_map);
  g.dec = Grads::zeros_like(ae.decoder);
  return g;
}

double loss_repr_grads(const FusionAE& ae, const FusionBatch& batch, const ReprLossWeights& w,
                       FusionGrads& grads, const MICritic* critic) {
  const Dims& d = ae.dims;
  Ae3Eval ev = ae3_eval(ae, batch, w, true);
  double total = ev.loss;

  const MatrixXd d_dec_in = nn::backward(ae.decoder, ev.tape_d, ev.d_dec_out, grads.dec);
  MatrixXd d_zq = d_dec_in.leftCols(4);
  MatrixXd d_zs = d_dec_in.rightCols(d.d_s);

  if (critic && critic->beta > 0.0) {
    MatrixXd z_se(batch.z_t.rows(), d.d_s + d.d_e);
    z_se.leftCols(d.d_s) = ev.z_s;
    z_se.rightCols(d.d_e) = batch.e;
    NceEval nce = nce_eval(*critic, ev.z_q, z_se, true);
    total += critic->beta * std::max(0.0, nce.value - critic->i_max);
    if (nce.value > critic->i_max) {
      const MatrixXd d_pair = nn::backward_input(critic->net, nce.tape, dscores_as_column(nce));
      const long bsz = batch.z_t.rows();
      for (long i = 0; i < bsz; ++i) {
        for (long j = 0; j < bsz; ++j) {
          d_zq.row(i) += critic->beta * d_pair.row(i * bsz + j).head(4);
          d_zs.row(j) += critic->beta * d_pair.row(i * bsz + j).segment(4, d.d_s);
        }
      }
    }
  }

  nn::backward(ae.shape_map, ev.tape_s, d_zs, grads.shape);
  nn::backward(ae.quat_map, ev.tape_q, d_zq, grads.quat);
  grads.quat.dw[0] += svd_penalty_grad(ae.quat_map.layers[0].w, w.lambda_a);
  return total;
}

namespace {

double recon_per_dim(const DenseNet& enc, const DenseNet& dec, const MatrixXd& x) {
  const MatrixXd x_hat = nn::forward(dec, nn::forward(enc, x));
  return (x_hat - x).squaredNorm() / static_cast<double>(x.size());
}

// one joint encoder/decoder update on a per-dimension MSE objective
double ae_update(DenseNet& enc, DenseNet& dec, nn::AdamState& enc_opt, nn::AdamState& dec_opt,
                 const MatrixXd& x) {
  Tape te, td;
  const MatrixXd z = nn::forward(enc, x, &te);
  const MatrixXd x_hat = nn::forward(dec, z, &td);
  const double denom = static_cast<double>(x.size());
  const double loss = (x_hat - x).squaredNorm() / denom;
  const MatrixXd dy = 2.0 / denom * (x_hat - x);
  Grads gd = Grads::zeros_like(dec);
  const MatrixXd dz = nn::backward(dec, td, dy, gd);
  Grads ge = Grads::zeros_like(enc);
  nn::backward(enc, te, dz, ge);
  nn::adam_step(dec, gd, dec_opt);
  nn::adam_step(enc, ge, enc_opt);
  return loss;
}

struct Split {
  std::vector<int> train, holdout;
};

Split split_rows(long n, double holdout_frac, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (long i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.uniform_int(i + 1)]);
  const long h = std::max<long>(1, static_cast<long>(std::floor(n * holdout_frac)));
  Split s;
  s.holdout.assign(idx.begin(), idx.begin() + h);
  s.train.assign(idx.begin() + h, idx.end());
  return s;
}

MatrixXd take_rows(const MatrixXd& m, const std::vector<int>& rows) {
  MatrixXd out(rows.size(), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(rows[i]);
  return out;
}

class BatchSampler {
 public:
  BatchSampler(std::vector<int> pool, std::uint64_t seed)
      : pool_(std::move(pool)), rng_(seed) {
    reshuffle();
  }

  std::vector<int> next(int batch) {
    std::vector<int> out;
    out.reserve(batch);
    for (int i = 0; i < batch; ++i) {
      if (cursor_ == pool_.size()) reshuffle();
      out.push_back(pool_[cursor_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    for (size_t i = pool_.size() - 1; i > 0; --i) {
      std::swap(pool_[i], pool_[rng_.uniform_int(i + 1)]);
    }
    cursor_ = 0;
  }

  std::vector<int> pool_;
  Rng rng_;
  size_t cursor_ = 0;
};

}  // namespace

ModalityEncoders train_stage1(const MatrixXd& x_t, const MatrixXd& x_g,
                              const Stage1Config& cfg, Stage1Report* report) {
  const Dims& d = cfg.dims;
  if (x_t.cols() != d.d_xt || x_g.cols() != d.d_xg || x_t.rows() != x_g.rows()) {
    throw std::invalid_argument("train_stage1: dataset dims");
  }
  Rng init_rng(mix_seed(cfg.seed, 0x51));
  ModalityEncoders m;
  m.dims = d;
  m.enc_t = nn::make_mlp(d.d_xt, {64}, d.d_t, Act::kTanh, Act::kIdentity, init_rng);
  m.dec_t = nn::make_mlp(d.d_t, {64}, d.d_xt, Act::kTanh, Act::kIdentity, init_rng);
  m.enc_g = nn::make_mlp(d.d_xg, {16}, d.d_g, Act::kTanh, Act::kIdentity, init_rng);
  m.dec_g = nn::make_mlp(d.d_g, {16}, d.d_xg, Act::kTanh, Act::kIdentity, init_rng);

  Rng split_rng(mix_seed(cfg.seed, 0x52));
  const Split split = split_rows(x_t.rows(), cfg.holdout_frac, split_rng);
  const MatrixXd ht = take_rows(x_t, split.holdout);
  const MatrixXd hg = take_rows(x_g, split.holdout);

  Stage1Report rep;
  rep.mse_t_initial = recon_per_dim(m.enc_t, m.dec_t, ht);
  rep.mse_g_initial = recon_per_dim(m.enc_g, m.dec_g, hg);

  nn::AdamState opt_et = nn::AdamState::init(m.enc_t, cfg.lr);
  nn::AdamState opt_dt = nn::AdamState::init(m.dec_t, cfg.lr);
  nn::AdamState opt_eg = nn::AdamState::init(m.enc_g, cfg.lr);
  nn::AdamState opt_dg = nn::AdamState::init(m.dec_g, cfg.lr);
  BatchSampler sampler(split.train, mix_seed(cfg.seed, 0x53));
  for (int step = 0; step < cfg.updates; ++step) {
    const std::vector<int> rows = sampler.next(cfg.batch);
    const MatrixXd bt = take_rows(x_t, rows);
    const MatrixXd bg = take_rows(x_g, rows);
    const double lt = ae_update(m.enc_t, m.dec_t, opt_et, opt_dt, bt);
    const double lg = ae_update(m.enc_g, m.dec_g, opt_eg, opt_dg, bg);
    if (!std::isfinite(lt) || !std::isfinite(lg)) {
      throw std::runtime_error("train_stage1: loss diverged at update " +
                               std::to_string(step) + " (target=" + std::to_string(lt) +
                               ", gripper=" + std::to_string(lg) + ")");
    }
  }

  rep.mse_t_final = recon_per_dim(m.enc_t, m.dec_t, ht);
  rep.mse_g_final = recon_per_dim(m.enc_g, m.dec_g, hg);
  if (report) *report = rep;
  m.frozen = true;
  return m;
}

Stage2Result train_stage2(const ModalityEncoders& encoders, const Stage2Data& data,
                          const Stage2Config& cfg) {
  if (!encoders.frozen) throw std::invalid_argument("train_stage2: stage-1 encoders not frozen");
  const Dims& d = encoders.dims;
  const long n = data.x_t.rows();
  if (data.x_g.rows() != n || data.e.rows() != n || data.q.rows() != n) {
    throw std::invalid_argument("train_stage2: dataset dims");
  }

  // stage-1 embeddings, computed once
  const MatrixXd z_t_all = nn::forward(encoders.enc_t, data.x_t);
  const MatrixXd z_g_all = nn::forward(encoders.enc_g, data.x_g);

  Rng init_rng(mix_seed(cfg.seed, 0x61));
  Stage2Result res;
  FusionAE& ae = res.fusion;
  ae.dims = d;
  ae.quat_map = nn::make_mlp(4, {}, 4, Act::kIdentity, Act::kIdentity, init_rng);
  // near-identity start keeps A comfortably inside the penalty's basin
  ae.quat_map.layers[0].w = Eigen::Matrix4d::Identity() + 0.1 * ae.quat_map.layers[0].w;
  ae.quat_map.layers[0].b.setZero();
  ae.shape_map = nn::make_mlp(d.fused_in(), {}, d.d_s, Act::kTanh, Act::kTanh, init_rng);
  ae.decoder = nn::make_mlp(d.dec_in(), {64}, d.dec_out(), Act::kTanh, Act::kIdentity, init_rng);

  MICritic& critic = res.critic;
  critic.net = nn::make_mlp(4 + d.d_s + d.d_e, {64}, 1, Act::kTanh, Act::kIdentity, init_rng);
  critic.tau = cfg.tau_nce;
  critic.i_max = cfg.i_max;
  critic.beta = cfg.beta;

  Rng split_rng(mix_seed(cfg.seed, 0x62));
  const Split split = split_rows(n, cfg.holdout_frac, split_rng);

  auto make_batch = [&](const std::vector<int>& rows) {
    FusionBatch b;
    b.z_t = take_rows(z_t_all, rows);
    b.z_g = take_rows(z_g_all, rows);
    b.e = take_rows(data.e, rows);
    b.q = take_rows(data.q, rows);
    return b;
  };
  const FusionBatch holdout = make_batch(split.holdout);

  Stage2Report& rep = res.report;
  rep.recon_initial = loss_ae3(ae, holdout, cfg.weights);

  nn::AdamState opt_q = nn::AdamState::init(ae.quat_map, cfg.lr);
  nn::AdamState opt_s = nn::AdamState::init(ae.shape_map, cfg.lr);
  nn::AdamState opt_d = nn::AdamState::init(ae.decoder, cfg.lr);
  BatchSampler sampler(split.train, mix_seed(cfg.seed, 0x63));

  for (int step = 0; step < cfg.batches; ++step) {
    const FusionBatch b = make_batch(sampler.next(cfg.batch));

    // (i) critic ascent with the representation fixed
    const MatrixXd z_q = nn::forward(ae.quat_map, b.q);
    const MatrixXd z_s = nn::forward(ae.shape_map, stack_fused(d, b));
    MatrixXd z_se(b.z_t.rows(), d.d_s + d.d_e);
    z_se.leftCols(d.d_s) = z_s;
    z_se.rightCols(d.d_e) = b.e;
    for (int k = 0; k < cfg.critic_steps; ++k) {
      critic_ascent_step(critic, z_q, z_se, cfg.critic_lr);
    }

    // (ii) one descent step on loss_ae3 + hinge with the critic fixed
    FusionGrads grads = FusionGrads::zeros_like(ae);
    const double loss = loss_repr_grads(ae, b, cfg.weights, grads, &critic);
    if (!std::isfinite(loss)) {
      throw std::runtime_error("train_stage2: loss diverged at batch " + std::to_string(step));
    }
    nn::adam_step(ae.decoder, grads.dec, opt_d);
    nn::adam_step(ae.shape_map, grads.shape, opt_s);
    nn::adam_step(ae.quat_map, grads.quat, opt_q);
  }

  rep.recon_final = loss_ae3(ae, holdout, cfg.weights);
  const Eigen::Vector4d sv = ae.singular_values();
  for (int i = 0; i < 4; ++i) rep.singular_values[i] = sv[i];

  // final certificate: mean estimate at the evaluation batch size over both
  // the training distribution and the held-out split
  auto eval_infonce = [&](const std::vector<int>& pool, std::uint64_t salt) {
    BatchSampler s(pool, mix_seed(cfg.seed, salt));
    const int bsz = std::min<int>(cfg.eval_batch, static_cast<int>(pool.size()));
    double acc = 0.0;
    for (int r = 0; r < cfg.eval_rounds; ++r) {
      const FusionBatch b = make_batch(s.next(bsz));
      Ae3Eval ev = ae3_eval(ae, b, cfg.weights, false);
      MatrixXd z_se(b.z_t.rows(), d.d_s + d.d_e);
      z_se.leftCols(d.d_s) = ev.z_s;
      z_se.rightCols(d.d_e) = b.e;
      acc += infonce(critic, ev.z_q, z_se);
    }
    return acc / cfg.eval_rounds;
  };
  rep.infonce_train = eval_infonce(split.train, 0x64);
  rep.infonce_holdout = eval_infonce(split.holdout, 0x65);
  rep.certificate_ok = rep.infonce_train <= critic.i_max + 0.05;
  if (!rep.certificate_ok) {
    rep.note = "warning: InfoNCE certificate violated (train estimate " +
               std::to_string(rep.infonce_train) + " > ceiling + 0.05)";
  }
  ae.frozen = true;
  return res;
}

LatentCode grammarize(const ModalityEncoders& encoders, const FusionAE& ae,
                      const VectorXd& x_t, const VectorXd& x_g,
                      const context::ContextVector& e, const quat::UnitQuat& q) {
  if (!encoders.frozen || !ae.frozen) {
    throw std::runtime_error("grammarize: representation components must be frozen");
  }
  const VectorXd z_t = nn::forward(encoders.enc_t, x_t);
  const VectorXd z_g = nn::forward(encoders.enc_g, x_g);
  return encode_fusion(ae, z_t, z_g, e, q);
}

namespace {

void write_block(std::ostringstream& os, const char* name, const DenseNet& net) {
  const std::string text = nn::net_to_string(net);
  os << "block " << name << " " << sha256_hex(text) << "\n" << text;
}

DenseNet read_block(std::istream& is, const std::string& expect_name) {
  std::string tag, name, sha;
  if (!(is >> tag >> name >> sha) || tag != "block" || name != expect_name) {
    throw std::runtime_error("bundle: expected block " + expect_name);
  }
  DenseNet net = nn::load_net(is);
  if (sha256_hex(nn::net_to_string(net)) != sha) {
    throw std::runtime_error("bundle: checksum mismatch in block " + name);
  }
  return net;
}

}  // namespace

std::string bundle_to_string(const Bundle& b) {
  std::ostringstream os;
  const int blocks = b.has_fusion() ? 8 : 4;
  const Dims& d = b.encoders.dims;
  os << "GGBUNDLE v1 " << blocks << "\n";
  os << "manifest " << d.d_xt << " " << d.d_xg << " " << d.d_t << " " << d.d_g << " "
     << d.d_s << " " << d.d_e;
  if (b.critic) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), " critic %.17g %.17g %.17g", b.critic->tau,
                  b.critic->i_max, b.critic->beta);
    os << buf;
  }
  os << "\n";
  write_block(os, "enc_t", b.encoders.enc_t);
  write_block(os, "dec_t", b.encoders.dec_t);
  write_block(os, "enc_g", b.encoders.enc_g);
  write_block(os, "dec_g", b.encoders.dec_g);
  if (b.has_fusion()) {
    write_block(os, "fuse_q", b.fusion->quat_map);
    write_block(os, "fuse_s", b.fusion->shape_map);
    write_block(os, "dec3", b.fusion->decoder);
    write_block(os, "mi_critic", b.critic->net);
  }
  return os.str();
}

Bundle bundle_from_string(const std::string& text) {
  std::istringstream is(text);
  std::string magic, ver;
  int blocks = 0;
  if (!(is >> magic >> ver >> blocks) || magic != "GGBUNDLE" || ver != "v1" ||
      (blocks != 4 && blocks != 8)) {
    throw std::runtime_error("bundle: bad header");
  }
  std::string tag;
  if (!(is >> tag) || tag != "manifest") throw std::runtime_error("bundle: missing manifest");
  Bundle b;
  Dims d;
  if (!(is >> d.d_xt >> d.d_xg >> d.d_t >> d.d_g >> d.d_s >> d.d_e)) {
    throw std::runtime_error("bundle: bad manifest dims");
  }
  double tau = 0.1, i_max = 0.1, beta = 1.0;
  if (blocks == 8) {
    std::string ctag;
    if (!(is >> ctag >> tau >> i_max >> beta) || ctag != "critic") {
      throw std::runtime_error("bundle: bad critic line");
    }
  }
  b.encoders.dims = d;
  b.encoders.enc_t = read_block(is, "enc_t");
  b.encoders.dec_t = read_block(is, "dec_t");
  b.encoders.enc_g = read_block(is, "enc_g");
  b.encoders.dec_g = read_block(is, "dec_g");
  b.encoders.frozen = true;
  if (b.encoders.enc_t.input_dim() != d.d_xt || b.encoders.enc_t.output_dim() != d.d_t ||
      b.encoders.enc_g.input_dim() != d.d_xg || b.encoders.enc_g.output_dim() != d.d_g) {
    throw std::runtime_error("bundle: encoder dims disagree with manifest");
  }
  if (blocks == 8) {
    FusionAE ae;
    ae.dims = d;
    ae.quat_map = read_block(is, "fuse_q");
    ae.shape_map = read_block(is, "fuse_s");
    ae.decoder = read_block(is, "dec3");
    ae.frozen = true;
    if (ae.shape_map.input_dim() != d.fused_in() || ae.shape_map.output_dim() != d.d_s ||
        ae.decoder.input_dim() != d.dec_in() || ae.decoder.output_dim() != d.dec_out()) {
      throw std::runtime_error("bundle: fusion dims disagree with manifest");
    }
    b.fusion = std::move(ae);
    MICritic critic;
    critic.net = read_block(is, "mi_critic");
    critic.tau = tau;
    critic.i_max = i_max;
    critic.beta = beta;
    b.critic = std::move(critic);
  }
  return b;
}

void save_bundle(const std::string& path, const Bundle& b) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_bundle: cannot open " + path);
  os << bundle_to_string(b);
}

Bundle load_bundle(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_bundle: cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return bundle_from_string(ss.str());
}

std::string bundle_checksum(const Bundle& b) { return sha256_hex(bundle_to_string(b)); }

}  // namespace gg::repr
