#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gg/context.hpp"
#include "gg/quat.hpp"
#include "gg/repr.hpp"

namespace gg::env {

using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::Vector4d;
using Eigen::VectorXd;

inline constexpr int kGridSide = 16;
inline constexpr int kTargetDim = kGridSide * kGridSide;  // d_xT = 256
inline constexpr int kGripperDim = 6;                     // d_xG

// Superellipse target with a 16x16 occupancy raster; the tracked object
// origin and the graspable shape center differ by the offset (dx, dy), which
// is only observable through the raster.
struct ObjectSpec {
  double a = 0.05, b = 0.05;  // half extents, m
  double n = 4.0;             // superellipse exponent
  double dx = 0.0, dy = 0.0;  // grasp-point offset, m
  double w_obj = 0.10;        // grasp width = 2b, m

  VectorXd raster() const;  // exact rasterization, row-major, {0,1}
};

struct GripperSpec {
  double max_aperture = 0.13;  // m
  double finger_len = 0.06;    // m
  int pad_class = 1;           // {0,1,2} -> pad_bonus {0.9, 1.0, 1.1}
  double stroke = 0.02;        // m/step

  double pad_bonus() const { return 0.9 + 0.1 * pad_class; }
  VectorXd descriptor() const;  // x_G in R^6, scalar fields scaled to [-1,1]
};

enum class Variant { kLatent, kLatentEnv, kVisual };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);
int observation_dim(Variant v, int d_s = 32);

struct Observation {
  Variant variant = Variant::kLatent;
  VectorXd vec;  // 35 / 43 / 259
  Vector3d p_t;  // object position in the gripper frame, m
};

enum class FailureMode { kNone, kSlip, kTimeout, kInsufficientLift };

const char* failure_name(FailureMode m);

struct StepResult {
  double reward = 0.0;
  bool done = false;
  bool success = false;
  FailureMode info = FailureMode::kNone;
};

struct EnvState {
  Vector3d gripper{0, 0, 0.15};
  double aperture = 1.0;  // normalized [0,1]
  Vector3d object{0, 0, 0.02};
  double object_vz = 0.0;  // m/step
  bool held = false;
  int t = 0;
};

// Fixed constants of the desk-scale task; exposed through the run config.
struct EnvParams {
  int horizon = 64;           // H
  double action_scale = 0.03; // s_a, m/step
  double r0 = 0.02;           // attach tolerance scale, m
  double v0 = 0.06;           // slip speed scale, m/step
  double h_min = 0.10;        // success height, m
  double dt = 0.05;           // s/step, scales gravity
  double c_dist = 1.0;        // reward shaping
  double b_grasp = 5.0;
  double b_lift = 20.0;
  double r_succ = 25.0;
  double obj_half_height = 0.02;
  double z_tol_factor = 0.5;     // attach z tolerance = factor * finger_len
  double nudge_gain = 0.35;      // pre-grasp sliding under lateral gripper motion
  double nudge_radius = 0.045;
  double nudge_height = 0.04;
  double wobble_gain = 0.3;      // lateral drift while falling, scaled by 1/(1+d_ang)
  double release_slack = 0.005;  // opening beyond w_obj by this much drops the object
  double spawn_half = 0.12;      // object/gripper xy spawn box half width
  double gripper_z0 = 0.15;
  double ws_half = 0.25;         // workspace clamp, xy
  double ws_z_lo = 0.01, ws_z_hi = 0.30;
};

// Per-episode margins recorded for oracle/property tests.
struct EpisodeStats {
  bool attached = false;
  double attach_margin = 0.0;        // r_tol - lateral error at attach
  double min_slip_margin = 1e9;      // min over held steps of v_slip - lift speed
  double max_object_z = 0.0;
  int steps = 0;
};

struct TraceRow {
  int step;
  Vector3d gripper, object;
  double aperture;
  bool held;
  double reward;
  FailureMode info;
};

class GraspEnv {
 public:
  GraspEnv(const context::PhysicsRanges& ranges, const EnvParams& params);

  // Samples object/gripper/physics from the seed, holds xi fixed for the
  // episode, and emits the one-shot inputs exactly once.
  void reset(std::uint64_t seed);

  // Same, but pins the episode physics (oracle grids, targeted sweeps).
  void reset_with_physics(std::uint64_t seed, const context::PhysicsParams& xi);

  // Physics ranges used for sampling may be swapped (OOD sweeps); the
  // normalization ranges stay fixed so e is always clipped to the box.
  void set_sampling_ranges(const context::PhysicsRanges& r) { sample_ranges_ = r; }

  StepResult step(const Eigen::Vector4d& action);

  // Latent variants require a frozen bundle with a fusion stage, attached
  // once; the visual variant needs none.
  void attach_bundle(const repr::Bundle* bundle);
  Observation observe(Variant v) const;

  bool done() const { return done_; }
  const EnvState& state() const { return state_; }
  const ObjectSpec& object_spec() const { return object_; }
  const GripperSpec& gripper_spec() const { return gripper_; }
  const context::PhysicsParams& physics() const { return xi_; }
  const context::ContextVector& context_vec() const { return e_; }
  const VectorXd& x_target() const { return x_t_; }
  const VectorXd& x_gripper() const { return x_g_; }
  const EpisodeStats& stats() const { return stats_; }
  const EnvParams& params() const { return params_; }
  const std::vector<TraceRow>& trace() const { return trace_; }
  void set_tracing(bool on) { tracing_ = on; }

  double mu_eff() const;
  double r_tol() const;
  double v_slip() const;
  double opening() const { return state_.aperture * gripper_.max_aperture; }
  Vector2d grasp_point() const;  // object xy + offset

  static double mu_eff_of(const context::PhysicsParams& xi, const GripperSpec& g);
  static double r_tol_of(const context::PhysicsParams& xi, const GripperSpec& g,
                         const EnvParams& p);
  static double v_slip_of(const context::PhysicsParams& xi, const GripperSpec& g,
                          const EnvParams& p);

 private:
  void sample_episode(std::uint64_t seed);
  void finish_reset();
  Vector2d wobble_dir() const;

  context::PhysicsRanges norm_ranges_, sample_ranges_;
  EnvParams params_;
  const repr::Bundle* bundle_ = nullptr;

  ObjectSpec object_;
  GripperSpec gripper_;
  context::PhysicsParams xi_;
  context::ContextVector e_;
  VectorXd x_t_, x_g_;
  std::optional<repr::LatentCode> code_;  // grammarize output, once per episode

  EnvState state_;
  bool done_ = true;
  bool ever_attached_ = false;
  Vector3d hold_rel_{0, 0, 0};
  double wobble_phase_ = 0.0;
  EpisodeStats stats_;
  bool tracing_ = false;
  std::vector<TraceRow> trace_;
};

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);

// Scripted oracle: align over the grasp point, descend, close, then lift at
// a fixed fraction of the slip threshold. When blind to the episode physics
// it falls back to a reference parameter vector (the training midpoints).
struct ScriptedPolicy {
  bool use_xi = true;
  double lift_fraction = 0.5;
  context::PhysicsParams fallback;  // used when use_xi is false
};

Eigen::Vector4d scripted_action(const GraspEnv& env, const ScriptedPolicy& policy);

// Runs the scripted policy to termination; returns the final step result.
StepResult run_scripted(GraspEnv& env, const ScriptedPolicy& policy);

context::PhysicsParams midpoint_params(const context::PhysicsRanges& ranges);

}  // namespace gg::env
