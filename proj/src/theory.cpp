#include "gg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gg/quat.hpp"
#include "gg/rng.hpp"

namespace gg::theory {

namespace {

using Eigen::Vector2d;
using Eigen::VectorXd;
using quat::Vec4;

Vec4 random_unit4(Rng& rng) {
  Vec4 v;
  for (int i = 0; i < 4; ++i) v[i] = rng.normal();
  return v / v.norm();
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

CheckReport check_projection_lipschitz(const TheoryConfig& cfg) {
  if (cfg.rho <= 0.0) throw std::invalid_argument("check_projection_lipschitz: rho <= 0");
  Rng rng(mix_seed(cfg.seed, 0x71));
  const double bound = 2.0 / (cfg.rho + cfg.epsilon);
  double max_ratio = 0.0;
  Vec4 wx, wy;
  int checked = 0;
  while (checked < cfg.pairs) {
    const Vec4 x = random_unit4(rng) * rng.uniform(cfg.rho, 4.0);
    const Vec4 y = random_unit4(rng) * rng.uniform(cfg.rho, 4.0);
    const double dxy = (x - y).norm();
    if (dxy < 1e-12) continue;  // 0/0 pair, skipped
    const double dpq =
        (quat::normalize_eps(x, cfg.epsilon) - quat::normalize_eps(y, cfg.epsilon)).norm();
    const double ratio = dpq / dxy;
    if (ratio > max_ratio) {
      max_ratio = ratio;
      wx = x;
      wy = y;
    }
    ++checked;
  }
  CheckReport rep;
  rep.name = "projection_lipschitz";
  rep.pass = max_ratio <= bound;
  rep.margin = bound - max_ratio;
  rep.detail = "max ratio " + fmt(max_ratio) + " vs bound " + fmt(bound) + " over " +
               std::to_string(checked) + " pairs";
  if (!rep.pass) {
    std::ostringstream os;
    os << rep.detail << "; witness x=[" << wx.transpose() << "] y=[" << wy.transpose() << "]";
    rep.detail = os.str();
  }
  return rep;
}

CheckReport check_error_propagation(const TheoryConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, 0x72));
  const double bound_const = M_PI * 2.0 / (cfg.rho + cfg.epsilon);
  double max_ratio = 0.0;
  int checked = 0, excluded = 0;
  while (checked < cfg.pairs) {
    const Vec4 x = random_unit4(rng) * rng.uniform(cfg.rho, 4.0);
    const Vec4 y = random_unit4(rng) * rng.uniform(cfg.rho, 4.0);
    if (x.dot(y) < 0.0) {
      // the lemma is local; antipodally mismatched pairs are out of scope
      ++excluded;
      continue;
    }
    const double dxy = (x - y).norm();
    if (dxy < 1e-12) continue;
    const quat::UnitQuat px = quat::unit_from(quat::normalize_eps(x, cfg.epsilon));
    const quat::UnitQuat py = quat::unit_from(quat::normalize_eps(y, cfg.epsilon));
    max_ratio = std::max(max_ratio, quat::geodesic_distance(px, py) / dxy);
    ++checked;
  }

  // O(sigma) scaling: mean geodesic error under Gaussian perturbations grows
  // linearly in the scale, with a fitted constant below the lemma constant
  const double scales[3] = {1e-3, 1e-2, 1e-1};
  double fitted[3] = {0, 0, 0};
  for (int si = 0; si < 3; ++si) {
    const double sigma = scales[si];
    double acc = 0.0;
    int n = 0;
    while (n < 4000) {
      const Vec4 x = random_unit4(rng);
      Vec4 y = x;
      for (int i = 0; i < 4; ++i) y[i] += sigma * rng.normal();
      if (x.dot(y) < 0.0 || y.norm() < cfg.rho) continue;
      const quat::UnitQuat px = quat::unit_from(quat::normalize_eps(x, cfg.epsilon));
      const quat::UnitQuat py = quat::unit_from(quat::normalize_eps(y, cfg.epsilon));
      acc += quat::geodesic_distance(px, py);
      ++n;
    }
    fitted[si] = acc / n / sigma;
  }
  const double c_lo = std::min({fitted[0], fitted[1], fitted[2]});
  const double c_hi = std::max({fitted[0], fitted[1], fitted[2]});

  CheckReport rep;
  rep.name = "error_propagation";
  const bool sweep_ok = max_ratio <= bound_const;
  const bool fit_ok = c_hi <= bound_const;
  const bool linear_ok = c_hi / c_lo - 1.0 <= 0.10;
  rep.pass = sweep_ok && fit_ok && linear_ok;
  rep.margin = bound_const - std::max(max_ratio, c_hi);
  rep.detail = "max ratio " + fmt(max_ratio) + ", fitted c in [" + fmt(c_lo) + ", " +
               fmt(c_hi) + "] vs bound " + fmt(bound_const) + "; sign filter excluded " +
               std::to_string(excluded) + " pairs; linearity spread " +
               fmt(c_hi / c_lo - 1.0);
  return rep;
}

double TabularMdp::l_r() const {
  double m = 0.0;
  for (double v : w) m = std::max(m, std::abs(v));
  return m;
}

double TabularMdp::l_p() const {
  double m = 0.0;
  for (int a = 0; a < n_actions; ++a) {
    m = std::max(m, k[a] * (embed[anchor_hi[a]] - embed[anchor_lo[a]]).norm());
  }
  return m;
}

double TabularMdp::r_max() const {
  double m = 0.0;
  for (double v : w) m = std::max(m, 1.0 + std::abs(v) * 0.7);
  return m;
}

double TabularMdp::reward(const Vector2d& x, int a) const {
  return 1.0 + w[a] * (x.x() - 0.5);
}

double TabularMdp::p_hi(const Vector2d& x, int a) const {
  const double p = c[a] + k[a] * x.x();
  if (p < 0.0 || p > 1.0) throw std::runtime_error("TabularMdp: kernel left the simplex");
  return p;
}

VectorXd TabularMdp::policy_value(const std::vector<Vector2d>& points, double tol) const {
  VectorXd v = VectorXd::Zero(n_states);
  // stop once the fixed-point distance gamma/(1-gamma)*delta is below tol
  const double stop = tol * (1.0 - gamma) / gamma;
  for (int iter = 0; iter < 100000; ++iter) {
    VectorXd next(n_states);
    for (int s = 0; s < n_states; ++s) {
      const int a = policy[s];
      const double ph = p_hi(points[s], a);
      next[s] = reward(points[s], a) +
                gamma * (ph * v[anchor_hi[a]] + (1.0 - ph) * v[anchor_lo[a]]);
    }
    const double delta = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (delta <= stop) break;
  }
  return v;
}

TabularMdp make_random_mdp(std::uint64_t seed, int n_states, int n_actions, double l_r,
                           double l_p, double gamma) {
  if (n_states < 4) throw std::invalid_argument("make_random_mdp: need >= 4 states");
  Rng rng(mix_seed(seed, 0x73));
  TabularMdp m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.gamma = gamma;
  m.embed = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
  for (int s = 4; s < n_states; ++s) m.embed.push_back({rng.uniform(), rng.uniform()});
  // anchor pairs at embedding distance >= 1 so the two-point kernel's W1
  // modulus k * D dominates any value gap
  const std::pair<int, int> pairs[4] = {{0, 1}, {0, 3}, {2, 1}, {2, 3}};
  for (int a = 0; a < n_actions; ++a) {
    const auto [lo, hi] = pairs[rng.uniform_int(4)];
    m.anchor_lo.push_back(lo);
    m.anchor_hi.push_back(hi);
    const double d = (m.embed[hi] - m.embed[lo]).norm();
    m.k.push_back(l_p / d);
    m.c.push_back(0.4 - m.k.back() * 0.5);  // p = 0.4 + k (x1 - 0.5)
    m.w.push_back(a == 0 ? l_r : rng.uniform(-l_r, l_r));
  }
  for (int s = 0; s < n_states; ++s) {
    m.policy.push_back(static_cast<int>(rng.uniform_int(n_actions)));
  }
  return m;
}

CheckReport check_value_bias(const TabularMdp& mdp, double eps_rec, int perturbations,
                             std::uint64_t seed) {
  if (mdp.gamma >= 1.0) throw std::invalid_argument("check_value_bias: gamma must be < 1");
  Rng rng(mix_seed(seed, 0x74));
  const double v_max = mdp.r_max() / (1.0 - mdp.gamma);
  const double bound_scale = (mdp.l_r() + mdp.gamma * mdp.l_p() * v_max) / (1.0 - mdp.gamma);
  const VectorXd v_true = mdp.policy_value(mdp.embed);

  const double radius = std::sqrt(eps_rec);
  double worst_slack = 1e300;
  bool pass = true;
  double worst_diff = 0.0;
  for (int trial = 0; trial < perturbations; ++trial) {
    std::vector<Vector2d> perturbed = mdp.embed;
    for (auto& x : perturbed) {
      Vector2d d(rng.normal(), rng.normal());
      const double n = d.norm();
      if (n > 0) d *= radius * rng.uniform() / n;  // ||delta|| <= sqrt(eps_rec)
      x += d;
    }
    const VectorXd v_tilde = mdp.policy_value(perturbed);
    const double diff = (v_true - v_tilde).cwiseAbs().maxCoeff();
    const double bound = bound_scale * radius;
    worst_diff = std::max(worst_diff, diff);
    worst_slack = std::min(worst_slack, bound - diff);
    if (diff > bound + 1e-9) pass = false;
  }
  CheckReport rep;
  rep.name = "value_bias";
  rep.pass = pass;
  rep.margin = worst_slack;
  rep.detail = "worst |V - V~|_inf " + fmt(worst_diff) + " vs bound " +
               fmt(bound_scale * radius) + " (eps_rec " + fmt(eps_rec) + ", " +
               std::to_string(perturbations) + " perturbations)";
  return rep;
}

void DiscreteJoint::validate() const {
  if (p.minCoeff() < 0.0) throw std::invalid_argument("DiscreteJoint: negative mass");
  if (std::abs(p.sum() - 1.0) > 1e-12) throw std::invalid_argument("DiscreteJoint: sum != 1");
}

double DiscreteJoint::mutual_information() const {
  const VectorXd pa = p.rowwise().sum();
  const VectorXd pb = p.colwise().sum();
  double info = 0.0;
  for (long i = 0; i < p.rows(); ++i) {
    for (long j = 0; j < p.cols(); ++j) {
      if (p(i, j) > 0.0) info += p(i, j) * std::log(p(i, j) / (pa[i] * pb[j]));
    }
  }
  return info;
}

double DiscreteJoint::mutual_information_cond() const {
  const VectorXd pa = p.rowwise().sum();
  const VectorXd pb = p.colwise().sum();
  double info = 0.0;
  for (long i = 0; i < p.rows(); ++i) {
    if (pa[i] == 0.0) continue;
    double kl = 0.0;
    for (long j = 0; j < p.cols(); ++j) {
      const double cond = p(i, j) / pa[i];
      if (cond > 0.0) kl += cond * std::log(cond / pb[j]);
    }
    info += pa[i] * kl;
  }
  return info;
}

double DiscreteJoint::expected_tv() const {
  const VectorXd pa = p.rowwise().sum();
  const VectorXd pb = p.colwise().sum();
  double tv = 0.0;
  for (long i = 0; i < p.rows(); ++i) {
    if (pa[i] == 0.0) continue;
    double acc = 0.0;
    for (long j = 0; j < p.cols(); ++j) acc += std::abs(p(i, j) / pa[i] - pb[j]);
    tv += pa[i] * 0.5 * acc;
  }
  return tv;
}

CheckReport check_pinsker(const DiscreteJoint& joint) {
  joint.validate();
  const double info = joint.mutual_information();
  const double info_dual = joint.mutual_information_cond();
  const double tv = joint.expected_tv();
  const double bound = std::sqrt(std::max(0.0, info) / 2.0);

  bool pass = tv <= bound + 1e-12 && std::abs(info - info_dual) <= 1e-12;
  // bounded-test-function form over every +-M indicator, M = 1
  const VectorXd pa = joint.p.rowwise().sum();
  const VectorXd pb = joint.p.colwise().sum();
  const double f_bound = std::sqrt(2.0 * std::max(0.0, info));
  double worst_f = 0.0;
  const long nb = joint.p.cols();
  for (long mask = 0; mask < (1L << nb); ++mask) {
    double expect_f = 0.0;
    for (long j = 0; j < nb; ++j) expect_f += (mask >> j & 1 ? 1.0 : -1.0) * pb[j];
    double acc = 0.0;
    for (long i = 0; i < joint.p.rows(); ++i) {
      if (pa[i] == 0.0) continue;
      double cond_f = 0.0;
      for (long j = 0; j < nb; ++j) {
        cond_f += (mask >> j & 1 ? 1.0 : -1.0) * joint.p(i, j) / pa[i];
      }
      acc += pa[i] * std::abs(cond_f - expect_f);
    }
    worst_f = std::max(worst_f, acc);
    if (acc > f_bound + 1e-12) pass = false;
  }

  CheckReport rep;
  rep.name = "pinsker";
  rep.pass = pass;
  rep.margin = bound - tv;
  rep.detail = "I " + fmt(info) + ", E[TV] " + fmt(tv) + " vs sqrt(I/2) " + fmt(bound) +
               ", worst test-function gap " + fmt(worst_f) + " vs " + fmt(f_bound) +
               ", dual-route |dI| " + fmt(std::abs(info - info_dual));
  return rep;
}

CheckReport check_pinsker_sweep(const TheoryConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, 0x75));
  CheckReport rep;
  rep.name = "pinsker";
  rep.pass = true;
  rep.margin = 1e300;
  int violations = 0;
  for (int t = 0; t < cfg.joints; ++t) {
    DiscreteJoint joint;
    joint.p.resize(4, 4);
    double total = 0.0;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        const double v = -std::log(1.0 - rng.uniform());  // exponential
        joint.p(i, j) = v;
        total += v;
      }
    }
    joint.p /= total;
    const CheckReport one = check_pinsker(joint);
    if (!one.pass) ++violations;
    rep.margin = std::min(rep.margin, one.margin);
  }
  rep.pass = violations == 0;
  rep.detail = std::to_string(cfg.joints) + " enumerated 4x4 joints, " +
               std::to_string(violations) + " violations, tightest E[TV] slack " +
               fmt(rep.margin);
  return rep;
}

CheckReport check_mss_recursion(const RecursionParams& p, int steps) {
  if (p.rho_c <= 0.0 || p.rho_c >= 1.0) {
    throw std::invalid_argument("check_mss_recursion: rho_c must be in (0,1)");
  }
  const double drive = p.c1 * p.sigma_q_sq + p.c2 * p.eps_rec;
  const double limit = drive / (1.0 - p.rho_c);
  const double sup_bound = std::max(p.m0, limit);
  double m = p.m0;
  double sup_m = m;
  bool monotone_toward_limit = true;
  double prev_gap = std::abs(m - limit);
  for (int kk = 0; kk < steps; ++kk) {
    m = p.rho_c * m + drive;  // worst-case equality recursion
    sup_m = std::max(sup_m, m);
    const double gap = std::abs(m - limit);
    if (gap > prev_gap + 1e-15) monotone_toward_limit = false;
    prev_gap = gap;
  }
  CheckReport rep;
  rep.name = "mss_recursion";
  const bool sup_ok = sup_m <= sup_bound + 1e-12;
  const bool limit_ok = std::abs(m - limit) <= 1e-9;
  rep.pass = sup_ok && limit_ok && monotone_toward_limit;
  rep.margin = 1e-9 - std::abs(m - limit);
  rep.detail = "sup m " + fmt(sup_m) + " vs bound " + fmt(sup_bound) + ", final gap to limit " +
               fmt(std::abs(m - limit));
  return rep;
}

std::vector<CheckReport> run_all(const TheoryConfig& cfg) {
  std::vector<CheckReport> out;
  out.push_back(check_projection_lipschitz(cfg));
  out.push_back(check_error_propagation(cfg));

  // value bias across seeded 8-state instances and perturbation scales
  CheckReport bias;
  bias.name = "value_bias";
  bias.pass = true;
  bias.margin = 1e300;
  std::string detail;
  const double eps_levels[2] = {1e-4, 1e-2};
  for (int i = 0; i < cfg.mdps; ++i) {
    const TabularMdp mdp = make_random_mdp(mix_seed(cfg.seed, 0x80 + i));
    for (double eps : eps_levels) {
      const CheckReport one =
          check_value_bias(mdp, eps, cfg.perturbations, mix_seed(cfg.seed, 0x90 + i));
      bias.pass = bias.pass && one.pass;
      if (one.margin < bias.margin) {
        bias.margin = one.margin;
        detail = one.detail;
      }
    }
  }
  bias.detail = detail + " across " + std::to_string(cfg.mdps) + " seeded instances";
  out.push_back(bias);

  out.push_back(check_pinsker_sweep(cfg));

  RecursionParams rp;
  rp.rho_c = 0.5;
  rp.c1 = 1.0;
  rp.c2 = 1.0;
  rp.sigma_q_sq = 0.5;
  rp.eps_rec = 0.5;
  rp.m0 = 5.0;
  out.push_back(check_mss_recursion(rp));
  return out;
}

void write_margins_csv(const std::string& path, const std::vector<CheckReport>& reports) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_margins_csv: cannot open " + path);
  os << "check,pass,margin,detail\n";
  for (const auto& r : reports) {
    std::string detail = r.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    os << r.name << "," << (r.pass ? 1 : 0) << "," << r.margin << "," << detail << "\n";
  }
}

}  // namespace gg::theory
