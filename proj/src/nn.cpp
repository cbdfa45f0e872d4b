#include "gg/nn.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gg::nn {

const char* act_name(Act a) {
  switch (a) {
    case Act::kIdentity: return "identity";
    case Act::kTanh: return "tanh";
    case Act::kRelu: return "relu";
  }
  return "identity";
}

Act act_from_name(const std::string& name) {
  if (name == "identity") return Act::kIdentity;
  if (name == "tanh") return Act::kTanh;
  if (name == "relu") return Act::kRelu;
  throw std::runtime_error("unknown activation: " + name);
}

long DenseNet::param_count() const {
  long n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

DenseNet make_net(const std::vector<int>& dims, const std::vector<Act>& acts, Rng& rng) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1) {
    throw std::invalid_argument("make_net: dims/acts mismatch");
  }
  DenseNet net;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer layer;
    const int fan_in = dims[i], fan_out = dims[i + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    layer.w.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) layer.w(r, c) = rng.uniform(-bound, bound);
    }
    layer.b = VectorXd::Zero(fan_out);
    layer.act = acts[i];
    net.layers.push_back(std::move(layer));
  }
  return net;
}

DenseNet make_mlp(int in, const std::vector<int>& hidden, int out, Act hidden_act,
                  Act out_act, Rng& rng) {
  std::vector<int> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  std::vector<Act> acts(hidden.size(), hidden_act);
  acts.push_back(out_act);
  return make_net(dims, acts, rng);
}

static void apply_act(Act act, MatrixXd& m) {
  switch (act) {
    case Act::kIdentity: break;
    case Act::kTanh: m = m.array().tanh(); break;
    case Act::kRelu: m = m.cwiseMax(0.0); break;
  }
}

MatrixXd forward(const DenseNet& net, const MatrixXd& x, Tape* tape) {
  if (net.layers.empty()) throw std::invalid_argument("forward: empty net");
  if (x.cols() != net.input_dim()) {
    throw std::invalid_argument("forward: input dim " + std::to_string(x.cols()) +
                                " != " + std::to_string(net.input_dim()));
  }
  if (tape) {
    tape->input = x;
    tape->post.clear();
    tape->post.reserve(net.layers.size());
    tape->net_version = net.version;
  }
  MatrixXd h = x;
  for (const auto& layer : net.layers) {
    MatrixXd z = h * layer.w.transpose();
    z.rowwise() += layer.b.transpose();
    apply_act(layer.act, z);
    h = std::move(z);
    if (tape) tape->post.push_back(h);
  }
  return h;
}

VectorXd forward(const DenseNet& net, const VectorXd& x) {
  return forward(net, MatrixXd(x.transpose()), nullptr).row(0).transpose();
}

Grads Grads::zeros_like(const DenseNet& net) {
  Grads g;
  for (const auto& l : net.layers) {
    g.dw.emplace_back(MatrixXd::Zero(l.w.rows(), l.w.cols()));
    g.db.emplace_back(VectorXd::Zero(l.b.size()));
  }
  return g;
}

void Grads::add_scaled(const Grads& other, double s) {
  for (size_t i = 0; i < dw.size(); ++i) {
    dw[i] += s * other.dw[i];
    db[i] += s * other.db[i];
  }
}

void Grads::scale(double s) {
  for (size_t i = 0; i < dw.size(); ++i) {
    dw[i] *= s;
    db[i] *= s;
  }
}

bool Grads::all_finite() const {
  for (size_t i = 0; i < dw.size(); ++i) {
    if (!dw[i].allFinite() || !db[i].allFinite()) return false;
  }
  return true;
}

// dy -> d(pre-activation) in place, given the post-activation values
static void act_backward(Act act, const MatrixXd& post, MatrixXd& dy) {
  switch (act) {
    case Act::kIdentity: break;
    case Act::kTanh: dy.array() *= 1.0 - post.array().square(); break;
    case Act::kRelu: dy.array() *= (post.array() > 0.0).cast<double>(); break;
  }
}

static MatrixXd backward_impl(const DenseNet& net, const Tape& tape, const MatrixXd& dy_out,
                              Grads* g) {
  if (!tape.valid() || tape.post.size() != net.layers.size()) {
    throw std::runtime_error("backward: tape does not match net");
  }
  if (tape.net_version != net.version) {
    throw std::runtime_error("backward: stale tape (parameters changed since forward)");
  }
  if (dy_out.rows() != tape.input.rows() || dy_out.cols() != net.output_dim()) {
    throw std::invalid_argument("backward: dy shape mismatch");
  }
  MatrixXd dy = dy_out;
  for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
    const auto& layer = net.layers[i];
    act_backward(layer.act, tape.post[i], dy);
    if (g) {
      const MatrixXd& in = i == 0 ? tape.input : tape.post[i - 1];
      g->dw[i].noalias() += dy.transpose() * in;
      g->db[i].noalias() += dy.colwise().sum().transpose();
    }
    dy = dy * layer.w;  // becomes gradient w.r.t. the layer input
  }
  return dy;
}

MatrixXd backward(const DenseNet& net, const Tape& tape, const MatrixXd& dy, Grads& g) {
  if (g.dw.size() != net.layers.size()) throw std::invalid_argument("backward: grads shape");
  return backward_impl(net, tape, dy, &g);
}

MatrixXd backward_input(const DenseNet& net, const Tape& tape, const MatrixXd& dy) {
  return backward_impl(net, tape, dy, nullptr);
}

AdamState AdamState::init(const DenseNet& net, double lr) {
  AdamState s;
  s.lr = lr;
  for (const auto& l : net.layers) {
    s.mw.emplace_back(MatrixXd::Zero(l.w.rows(), l.w.cols()));
    s.vw.emplace_back(MatrixXd::Zero(l.w.rows(), l.w.cols()));
    s.mb.emplace_back(VectorXd::Zero(l.b.size()));
    s.vb.emplace_back(VectorXd::Zero(l.b.size()));
  }
  return s;
}

void adam_step(DenseNet& net, const Grads& g, AdamState& opt) {
  if (!g.all_finite()) throw std::runtime_error("adam_step: non-finite gradient");
  opt.step_count += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, opt.step_count);
  const double bc2 = 1.0 - std::pow(opt.beta2, opt.step_count);
  for (size_t i = 0; i < net.layers.size(); ++i) {
    auto& l = net.layers[i];
    opt.mw[i] = opt.beta1 * opt.mw[i] + (1.0 - opt.beta1) * g.dw[i];
    opt.vw[i] = opt.beta2 * opt.vw[i] + (1.0 - opt.beta2) * g.dw[i].cwiseProduct(g.dw[i]);
    l.w.array() -= opt.lr * (opt.mw[i].array() / bc1) /
                   ((opt.vw[i].array() / bc2).sqrt() + opt.eps);
    opt.mb[i] = opt.beta1 * opt.mb[i] + (1.0 - opt.beta1) * g.db[i];
    opt.vb[i] = opt.beta2 * opt.vb[i] + (1.0 - opt.beta2) * g.db[i].cwiseProduct(g.db[i]);
    l.b.array() -= opt.lr * (opt.mb[i].array() / bc1) /
                   ((opt.vb[i].array() / bc2).sqrt() + opt.eps);
  }
  net.version += 1;
}

void sgd_step(DenseNet& net, const Grads& g, double lr) {
  if (!g.all_finite()) throw std::runtime_error("sgd_step: non-finite gradient");
  for (size_t i = 0; i < net.layers.size(); ++i) {
    net.layers[i].w += lr * g.dw[i];
    net.layers[i].b += lr * g.db[i];
  }
  net.version += 1;
}

VectorXd flatten_params(const DenseNet& net) {
  VectorXd theta(net.param_count());
  long k = 0;
  for (const auto& l : net.layers) {
    for (int r = 0; r < l.w.rows(); ++r) {
      for (int c = 0; c < l.w.cols(); ++c) theta[k++] = l.w(r, c);
    }
    for (int r = 0; r < l.b.size(); ++r) theta[k++] = l.b[r];
  }
  return theta;
}

void set_params(DenseNet& net, const VectorXd& theta) {
  if (theta.size() != net.param_count()) throw std::invalid_argument("set_params: size");
  long k = 0;
  for (auto& l : net.layers) {
    for (int r = 0; r < l.w.rows(); ++r) {
      for (int c = 0; c < l.w.cols(); ++c) l.w(r, c) = theta[k++];
    }
    for (int r = 0; r < l.b.size(); ++r) l.b[r] = theta[k++];
  }
  net.version += 1;
}

VectorXd flatten(const Grads& g) {
  long n = 0;
  for (size_t i = 0; i < g.dw.size(); ++i) n += g.dw[i].size() + g.db[i].size();
  VectorXd out(n);
  long k = 0;
  for (size_t i = 0; i < g.dw.size(); ++i) {
    for (int r = 0; r < g.dw[i].rows(); ++r) {
      for (int c = 0; c < g.dw[i].cols(); ++c) out[k++] = g.dw[i](r, c);
    }
    for (int r = 0; r < g.db[i].size(); ++r) out[k++] = g.db[i][r];
  }
  return out;
}

static void print_value(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

void save_net(std::ostream& os, const DenseNet& net) {
  os << "GGNET v1 " << net.layers.size() << "\n";
  for (const auto& l : net.layers) {
    os << l.w.rows() << " " << l.w.cols() << " " << act_name(l.act) << "\n";
    for (int r = 0; r < l.w.rows(); ++r) {
      for (int c = 0; c < l.w.cols(); ++c) {
        if (c) os << " ";
        print_value(os, l.w(r, c));
      }
      os << "\n";
    }
    for (int r = 0; r < l.b.size(); ++r) {
      if (r) os << " ";
      print_value(os, l.b[r]);
    }
    os << "\n";
  }
}

std::string net_to_string(const DenseNet& net) {
  std::ostringstream os;
  save_net(os, net);
  return os.str();
}

DenseNet load_net(std::istream& is) {
  std::string magic, ver;
  size_t n_layers = 0;
  if (!(is >> magic >> ver >> n_layers) || magic != "GGNET" || ver != "v1") {
    throw std::runtime_error("load_net: bad header");
  }
  DenseNet net;
  int prev_out = -1;
  for (size_t i = 0; i < n_layers; ++i) {
    long rows = 0, cols = 0;
    std::string act;
    if (!(is >> rows >> cols >> act) || rows <= 0 || cols <= 0) {
      throw std::runtime_error("load_net: bad layer header");
    }
    if (prev_out >= 0 && cols != prev_out) {
      throw std::runtime_error("load_net: layer dims do not chain");
    }
    DenseLayer layer;
    layer.act = act_from_name(act);
    layer.w.resize(rows, cols);
    for (long r = 0; r < rows; ++r) {
      for (long c = 0; c < cols; ++c) {
        if (!(is >> layer.w(r, c))) throw std::runtime_error("load_net: weight read");
      }
    }
    layer.b.resize(rows);
    for (long r = 0; r < rows; ++r) {
      if (!(is >> layer.b[r])) throw std::runtime_error("load_net: bias read");
    }
    prev_out = static_cast<int>(rows);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

DenseNet net_from_string(const std::string& text) {
  std::istringstream is(text);
  return load_net(is);
}

}  // namespace gg::nn
