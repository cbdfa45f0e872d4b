#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace gg::theory {

struct TheoryConfig {
  double rho = 0.5;       // norm floor for the local projection results
  double epsilon = 1e-8;  // unitisation epsilon
  int pairs = 100000;     // sweep size for the projection checks
  int joints = 1000;      // random joints for the Pinsker check
  int mdps = 1;           // seeded MDP instances
  int perturbations = 100;
  std::uint64_t seed = 0;
};

struct CheckReport {
  std::string name;
  bool pass = false;
  double margin = 0.0;  // tightest observed slack (bound - observed)
  std::string detail;
};

// Finite-state MDP whose rewards and transition kernels are functions of a
// planar state embedding, built so the Lipschitz constant L_r and the
// Wasserstein-1 modulus L_P are exact by construction. Each action moves
// probability between two anchor states proportionally to the first
// embedding coordinate.
struct TabularMdp {
  int n_states = 8;
  int n_actions = 3;
  std::vector<Eigen::Vector2d> embed;
  // transition p(anchor_hi | x, a) = c[a] + k[a] * x1 (never clipped on the
  // admissible region); remaining mass goes to anchor_lo
  std::vector<int> anchor_lo, anchor_hi;
  std::vector<double> c, k;
  // reward r(x, a) = 1 + w[a] * (x1 - 0.5)
  std::vector<double> w;
  std::vector<int> policy;  // deterministic action per state
  double gamma = 0.9;

  double l_r() const;
  double l_p() const;
  double r_max() const;  // over the admissible perturbed region
  double reward(const Eigen::Vector2d& x, int a) const;
  double p_hi(const Eigen::Vector2d& x, int a) const;

  // policy value function on the given embeddings, by value iteration to the
  // stated sup-norm accuracy
  Eigen::VectorXd policy_value(const std::vector<Eigen::Vector2d>& points,
                               double tol = 1e-10) const;
};

TabularMdp make_random_mdp(std::uint64_t seed, int n_states = 8, int n_actions = 3,
                           double l_r = 1.0, double l_p = 0.5, double gamma = 0.9);

// Probability table over two small finite alphabets.
struct DiscreteJoint {
  Eigen::MatrixXd p;  // rows: z_q symbol, cols: z_se symbol

  void validate() const;
  double mutual_information() const;       // direct joint-sum route
  double mutual_information_cond() const;  // E_a[ KL(p(b|a) || p(b)) ] route
  double expected_tv() const;              // E_a[ TV(p(b|a), p(b)) ]
};

struct RecursionParams {
  double rho_c = 0.5;
  double c1 = 1.0, c2 = 1.0;
  double sigma_q_sq = 0.0;
  double eps_rec = 0.0;
  double m0 = 0.0;
};

CheckReport check_projection_lipschitz(const TheoryConfig& cfg);
CheckReport check_error_propagation(const TheoryConfig& cfg);
CheckReport check_value_bias(const TabularMdp& mdp, double eps_rec, int perturbations,
                             std::uint64_t seed);
CheckReport check_pinsker(const DiscreteJoint& joint);
CheckReport check_pinsker_sweep(const TheoryConfig& cfg);
CheckReport check_mss_recursion(const RecursionParams& p, int steps = 4000);

// The full suite in spec order; deterministic given cfg.seed.
std::vector<CheckReport> run_all(const TheoryConfig& cfg);

void write_margins_csv(const std::string& path, const std::vector<CheckReport>& reports);

}  // namespace gg::theory
