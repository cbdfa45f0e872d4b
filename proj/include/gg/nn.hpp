#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gg/rng.hpp"

namespace gg::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Act { kIdentity, kTanh, kRelu };

const char* act_name(Act a);
Act act_from_name(const std::string& name);

struct DenseLayer {
  MatrixXd w;  // out x in
  VectorXd b;  // out
  Act act = Act::kIdentity;
};

// Fully-connected net over 64-bit floats. Rows of the in/out matrices are
// samples, so a batch forward is one GEMM per layer.
struct DenseNet {
  std::vector<DenseLayer> layers;
  // bumped on any parameter mutation; tapes record it to detect staleness
  std::uint64_t version = 0;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().w.cols()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().w.rows()); }
  long param_count() const;
};

// hidden/output activations chosen per layer; weights uniform in
// +-sqrt(6/(fan_in+fan_out)), biases zero.
DenseNet make_net(const std::vector<int>& dims, const std::vector<Act>& acts, Rng& rng);
// convenience: hidden layers share one activation, output layer another
DenseNet make_mlp(int in, const std::vector<int>& hidden, int out, Act hidden_act,
                  Act out_act, Rng& rng);

// Cached forward activations; sufficient for exact reverse-mode gradients.
struct Tape {
  MatrixXd input;                // B x in
  std::vector<MatrixXd> post;    // per layer, B x out (post-activation)
  std::uint64_t net_version = 0;
  bool valid() const { return !post.empty(); }
};

// X is B x input_dim. Throws on dimension mismatch.
MatrixXd forward(const DenseNet& net, const MatrixXd& x, Tape* tape = nullptr);
VectorXd forward(const DenseNet& net, const VectorXd& x);

struct Grads {
  std::vector<MatrixXd> dw;
  std::vector<VectorXd> db;

  static Grads zeros_like(const DenseNet& net);
  void add_scaled(const Grads& other, double s);
  void scale(double s);
  bool all_finite() const;
};

// dy is B x output_dim (gradient of a scalar loss w.r.t. the forward output).
// Accumulates parameter gradients into g and returns the input gradient.
// Throws if the tape does not match the current net parameters.
MatrixXd backward(const DenseNet& net, const Tape& tape, const MatrixXd& dy, Grads& g);
// input gradient only (parameters untouched); cheaper when only dL/dx is needed
MatrixXd backward_input(const DenseNet& net, const Tape& tape, const MatrixXd& dy);

// Adaptive-moment optimizer state for one DenseNet.
struct AdamState {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<MatrixXd> mw, vw;
  std::vector<VectorXd> mb, vb;

  static AdamState init(const DenseNet& net, double lr = 3e-4);
};

// One update; throws on non-finite gradients. Deterministic.
void adam_step(DenseNet& net, const Grads& g, AdamState& opt);
// plain gradient step: params += lr * g (ascent for lr > 0, descent for < 0)
void sgd_step(DenseNet& net, const Grads& g, double lr);

// Flattened parameter access for finite-difference checks.
VectorXd flatten_params(const DenseNet& net);
void set_params(DenseNet& net, const VectorXd& theta);
VectorXd flatten(const Grads& g);

// Versioned text format: header "GGNET v1 <n_layers>", then per layer a
// "<rows> <cols> <activation>" line, the weight rows (row-major), and the
// bias line; 17 significant digits.
void save_net(std::ostream& os, const DenseNet& net);
std::string net_to_string(const DenseNet& net);
DenseNet load_net(std::istream& is);
DenseNet net_from_string(const std::string& text);

}  // namespace gg::nn
