#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "gg/context.hpp"
#include "gg/nn.hpp"
#include "gg/quat.hpp"

namespace gg::repr {

using Eigen::MatrixXd;
using Eigen::Vector4d;
using Eigen::VectorXd;

struct Dims {
  int d_xt = 256;  // rasterized target grid
  int d_xg = 6;    // gripper descriptor
  int d_t = 24;
  int d_g = 8;
  int d_s = 32;
  int d_e = context::kDim;

  int fused_in() const { return d_t + d_g + d_e; }
  int code_dim() const { return 4 + d_s + d_e; }
  int dec_in() const { return 4 + d_s; }
  int dec_out() const { return d_t + d_g + d_e + 4; }
};

// Stage-1 modality autoencoders. Frozen after pretraining.
struct ModalityEncoders {
  nn::DenseNet enc_t, dec_t;  // d_xt -> d_t -> d_xt
  nn::DenseNet enc_g, dec_g;  // d_xg -> d_g -> d_xg
  Dims dims;
  bool frozen = false;
};

// Block-structured fusion stage. The quaternion channel is affine-linear
// (quat_map holds A as the weight and c as the bias) and never mixes with
// the shape/context factors; the decoder reconstructs all fused components.
struct FusionAE {
  nn::DenseNet quat_map;   // 4 -> 4, identity activation: z_q = A q + c
  nn::DenseNet shape_map;  // (d_t+d_g+d_e) -> d_s, tanh
  nn::DenseNet decoder;    // (4+d_s) -> ... -> (d_t+d_g+d_e+4)
  Dims dims;
  bool frozen = false;

  const MatrixXd& a_matrix() const { return quat_map.layers[0].w; }
  Eigen::Vector4d singular_values() const;
};

struct LatentCode {
  Vector4d z_q;
  VectorXd z_s;
  context::ContextVector e;

  // [z_q || z_s || e]
  VectorXd full() const;
};

// InfoNCE critic over concatenated (z_q, [z_s || e]) pairs.
struct MICritic {
  nn::DenseNet net;  // (4 + d_s + d_e) -> 1
  double tau = 0.1;     // softmax temperature
  double i_max = 0.1;   // hinge ceiling, nats
  double beta = 1.0;    // hinge weight
};

struct ReprLossWeights {
  double lambda_q = 1.0;
  double lambda_e = 1.0;
  double lambda_r = 0.1;
  double lambda_a = 0.01;  // singular-value penalty on A
};

// Batches are row-major: one sample per row.
struct FusionBatch {
  MatrixXd z_t;  // B x d_t
  MatrixXd z_g;  // B x d_g
  MatrixXd e;    // B x d_e
  MatrixXd q;    // B x 4, unit rows
};

struct DecodedHeads {
  VectorXd z_t_hat, z_g_hat, e_hat;
  Vector4d q_hat_raw;  // projection is applied only in the loss / at execution
};

LatentCode encode_fusion(const FusionAE& ae, const VectorXd& z_t, const VectorXd& z_g,
                         const context::ContextVector& e, const quat::UnitQuat& q);
DecodedHeads decode_fusion(const FusionAE& ae, const Vector4d& z_q, const VectorXd& z_s);

// Mean over the batch of the reconstruction terms plus the soft range
// constraint on e_hat and the singular-value penalty on A.
double loss_ae3(const FusionAE& ae, const FusionBatch& batch, const ReprLossWeights& w);

// InfoNCE lower bound in nats over aligned (i,i) vs mismatched (i,j) pairs;
// log-sum-exp stabilized, always <= log B. Throws on an empty batch.
double infonce(const MICritic& critic, const MatrixXd& z_q, const MatrixXd& z_se);

// beta * max(0, infonce - i_max)
double loss_mi(const MICritic& critic, const MatrixXd& z_q, const MatrixXd& z_se);

// One plain gradient-ascent step on the InfoNCE objective w.r.t. critic
// parameters; returns the estimate before the step.
double critic_ascent_step(MICritic& critic, const MatrixXd& z_q, const MatrixXd& z_se,
                          double lr);

// InfoNCE value and its gradient w.r.t. the critic parameters.
double infonce_critic_grads(const MICritic& critic, const MatrixXd& z_q, const MatrixXd& z_se,
                            nn::Grads& g);

struct FusionGrads {
  nn::Grads quat, shape, dec;
  static FusionGrads zeros_like(const FusionAE& ae);
};

// Analytic gradients of the representation objective w.r.t. the fusion
// parameters: loss_ae3 plus, when a critic is supplied, the hinge MI term
// with the critic held fixed. This is the exact gradient train_stage2 steps
// on; returns the total loss.
double loss_repr_grads(const FusionAE& ae, const FusionBatch& batch, const ReprLossWeights& w,
                       FusionGrads& grads, const MICritic* critic = nullptr);

struct Stage1Config {
  int updates = 5000;
  int batch = 64;
  double lr = 3e-4;
  double holdout_frac = 0.1;
  std::uint64_t seed = 0;
  Dims dims;
};

struct Stage1Report {
  double mse_t_initial = 0, mse_t_final = 0;
  double mse_g_initial = 0, mse_g_final = 0;
};

// Trains the modality autoencoders on raw inputs (rows of x_t / x_g) and
// freezes them. Throws if the loss diverges to a non-finite value.
ModalityEncoders train_stage1(const MatrixXd& x_t, const MatrixXd& x_g,
                              const Stage1Config& cfg, Stage1Report* report = nullptr);

struct Stage2Config {
  int batches = 2000;
  int batch = 64;
  int critic_steps = 5;  // K ascent steps per batch
  double lr = 3e-4;
  double critic_lr = 1e-3;
  int eval_batch = 128;  // certificate batch size
  int eval_rounds = 16;
  double holdout_frac = 0.1;
  std::uint64_t seed = 0;
  ReprLossWeights weights;
  double tau_nce = 0.1;
  double i_max = 0.1;
  double beta = 1.0;
};

struct Stage2Report {
  double recon_initial = 0, recon_final = 0;  // holdout loss_ae3
  double infonce_train = 0, infonce_holdout = 0;
  std::array<double, 4> singular_values{};
  bool certificate_ok = false;  // infonce_train <= i_max + 0.05
  std::string note;
};

struct Stage2Result {
  FusionAE fusion;
  MICritic critic;
  Stage2Report report;
};

// Raw stage-2 dataset; embeddings are computed through the frozen encoders.
struct Stage2Data {
  MatrixXd x_t;  // N x d_xt
  MatrixXd x_g;  // N x d_xg
  MatrixXd e;    // N x d_e
  MatrixXd q;    // N x 4, unit rows
};

// Alternating optimization: per batch, K critic ascent steps on the InfoNCE
// estimate with the representation fixed, then one descent step on
// loss_ae3 + loss_mi with the critic fixed. Requires frozen encoders.
Stage2Result train_stage2(const ModalityEncoders& encoders, const Stage2Data& data,
                          const Stage2Config& cfg);

// One-shot code for an episode; all components must be frozen.
LatentCode grammarize(const ModalityEncoders& encoders, const FusionAE& ae,
                      const VectorXd& x_t, const VectorXd& x_g,
                      const context::ContextVector& e, const quat::UnitQuat& q);

// Frozen bundle: every subnet in the GGNET format behind a manifest line
// carrying the dims and the SHA-256 of each block.
struct Bundle {
  ModalityEncoders encoders;
  std::optional<FusionAE> fusion;
  std::optional<MICritic> critic;

  bool has_fusion() const { return fusion.has_value(); }
};

std::string bundle_to_string(const Bundle& b);
Bundle bundle_from_string(const std::string& text);  // verifies block checksums
void save_bundle(const std::string& path, const Bundle& b);
Bundle load_bundle(const std::string& path);
std::string bundle_checksum(const Bundle& b);

}  // namespace gg::repr
