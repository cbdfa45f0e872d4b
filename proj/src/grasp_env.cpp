#include "gg/grasp_env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "gg/rng.hpp"

namespace gg::env {

VectorXd ObjectSpec::raster() const {
  VectorXd grid(kTargetDim);
  const double half_window = 0.1;
  const double cell = 2.0 * half_window / kGridSide;
  for (int row = 0; row < kGridSide; ++row) {
    const double y = -half_window + (row + 0.5) * cell;
    for (int col = 0; col < kGridSide; ++col) {
      const double x = -half_window + (col + 0.5) * cell;
      const double u = std::abs((x - dx) / a);
      const double v = std::abs((y - dy) / b);
      const bool inside = std::pow(u, n) + std::pow(v, n) <= 1.0;
      grid[row * kGridSide + col] = inside ? 1.0 : 0.0;
    }
  }
  return grid;
}

namespace {
double to_unit(double v, double lo, double hi) { return 2.0 * (v - lo) / (hi - lo) - 1.0; }
}  // namespace

VectorXd GripperSpec::descriptor() const {
  VectorXd x(kGripperDim);
  x[0] = to_unit(max_aperture, 0.10, 0.16);
  x[1] = to_unit(finger_len, 0.04, 0.08);
  x[2] = to_unit(stroke, 0.01, 0.03);
  x[3] = pad_class == 0 ? 1.0 : 0.0;
  x[4] = pad_class == 1 ? 1.0 : 0.0;
  x[5] = pad_class == 2 ? 1.0 : 0.0;
  return x;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kLatent: return "latent";
    case Variant::kLatentEnv: return "latent-env";
    case Variant::kVisual: return "visual";
  }
  return "latent";
}

Variant variant_from_name(const std::string& name) {
  if (name == "latent") return Variant::kLatent;
  if (name == "latent-env" || name == "latent_env") return Variant::kLatentEnv;
  if (name == "visual") return Variant::kVisual;
  throw std::runtime_error("unknown variant: " + name);
}

int observation_dim(Variant v, int d_s) {
  switch (v) {
    case Variant::kLatent: return d_s + 3;
    case Variant::kLatentEnv: return d_s + 3 + context::kDim;
    case Variant::kVisual: return kTargetDim + 3;
  }
  return d_s + 3;
}

const char* failure_name(FailureMode m) {
  switch (m) {
    case FailureMode::kNone: return "none";
    case FailureMode::kSlip: return "slip";
    case FailureMode::kTimeout: return "timeout";
    case FailureMode::kInsufficientLift: return "insufficient_lift";
  }
  return "none";
}

GraspEnv::GraspEnv(const context::PhysicsRanges& ranges, const EnvParams& params)
    : norm_ranges_(ranges), sample_ranges_(ranges), params_(params) {
  norm_ranges_.validate();
}

double GraspEnv::mu_eff_of(const context::PhysicsParams& xi, const GripperSpec& g) {
  return std::sqrt(xi.mu_obj() * xi.mu_gripper()) * g.pad_bonus();
}

double GraspEnv::r_tol_of(const context::PhysicsParams& xi, const GripperSpec& g,
                          const EnvParams& p) {
  // normalizer: largest mu_eff over the default table bounds and pad classes
  const double mu_max = std::sqrt(1.2 * 2.0) * 1.1;
  return p.r0 * mu_eff_of(xi, g) / mu_max;
}

double GraspEnv::v_slip_of(const context::PhysicsParams& xi, const GripperSpec& g,
                           const EnvParams& p) {
  const double weight = xi.m_scale() * std::abs(xi.g_z()) / 9.81;
  return p.v0 * mu_eff_of(xi, g) / weight;
}

double GraspEnv::mu_eff() const { return mu_eff_of(xi_, gripper_); }
double GraspEnv::r_tol() const { return r_tol_of(xi_, gripper_, params_); }
double GraspEnv::v_slip() const { return v_slip_of(xi_, gripper_, params_); }

Vector2d GraspEnv::grasp_point() const {
  return state_.object.head<2>() + Vector2d(object_.dx, object_.dy);
}

void GraspEnv::sample_episode(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xE1));
  gripper_.max_aperture = rng.uniform(0.10, 0.16);
  gripper_.finger_len = rng.uniform(0.04, 0.08);
  gripper_.stroke = rng.uniform(0.01, 0.03);
  gripper_.pad_class = static_cast<int>(rng.uniform_int(3));

  object_.a = rng.uniform(0.02, 0.08);
  // keep the grasp feasible: the fully open gripper must clear the object
  const double b_hi = std::min(0.08, 0.45 * gripper_.max_aperture);
  object_.b = rng.uniform(0.02, b_hi);
  object_.n = rng.uniform(2.0, 8.0);
  object_.dx = rng.uniform(-0.008, 0.008);
  object_.dy = rng.uniform(-0.008, 0.008);
  object_.w_obj = 2.0 * object_.b;

  xi_ = context::sample(sample_ranges_, seed);
  e_ = context::normalize(xi_, norm_ranges_);

  state_ = EnvState{};
  state_.object = Vector3d(rng.uniform(-params_.spawn_half, params_.spawn_half),
                           rng.uniform(-params_.spawn_half, params_.spawn_half),
                           params_.obj_half_height);
  state_.gripper = Vector3d(rng.uniform(-params_.spawn_half, params_.spawn_half),
                            rng.uniform(-params_.spawn_half, params_.spawn_half),
                            params_.gripper_z0);
  state_.aperture = 1.0;
  wobble_phase_ = rng.uniform(0.0, 2.0 * M_PI);
}

void GraspEnv::finish_reset() {
  x_t_ = object_.raster();
  x_g_ = gripper_.descriptor();
  code_.reset();
  if (bundle_ && bundle_->has_fusion()) {
    // one-shot exteroception: the code is computed here and never again
    const quat::UnitQuat q_down{quat::Vec4(0, 1, 0, 0)};
    code_ = repr::grammarize(bundle_->encoders, *bundle_->fusion, x_t_, x_g_, e_, q_down);
  }
  done_ = false;
  ever_attached_ = false;
  hold_rel_.setZero();
  stats_ = EpisodeStats{};
  trace_.clear();
}

void GraspEnv::reset(std::uint64_t seed) {
  sample_episode(seed);
  finish_reset();
}

void GraspEnv::reset_with_physics(std::uint64_t seed, const context::PhysicsParams& xi) {
  sample_episode(seed);
  xi_ = xi;
  e_ = context::normalize(xi_, norm_ranges_);
  finish_reset();
}

void GraspEnv::attach_bundle(const repr::Bundle* bundle) {
  if (bundle && !bundle->has_fusion()) {
    throw std::invalid_argument("attach_bundle: bundle lacks the fusion stage");
  }
  bundle_ = bundle;
}

Vector2d GraspEnv::wobble_dir() const {
  const double theta = wobble_phase_ + 2.399963229728653 * state_.t;
  return {std::cos(theta), std::sin(theta)};
}

StepResult GraspEnv::step(const Eigen::Vector4d& action_in) {
  if (done_) throw std::runtime_error("step: episode is done");
  const Eigen::Vector4d action = action_in.cwiseMax(-1.0).cwiseMin(1.0);
  state_.t += 1;

  const Vector3d g_old = state_.gripper;
  const double rest_z = params_.obj_half_height;

  // gripper kinematics
  const double move_scale = params_.action_scale / (1.0 + xi_.d_lin());
  Vector3d g_new = g_old + action.head<3>() * move_scale;
  g_new.x() = std::clamp(g_new.x(), -params_.ws_half, params_.ws_half);
  g_new.y() = std::clamp(g_new.y(), -params_.ws_half, params_.ws_half);
  g_new.z() = std::clamp(g_new.z(), params_.ws_z_lo, params_.ws_z_hi);
  state_.gripper = g_new;

  const double prev_opening = opening();
  state_.aperture = std::clamp(
      state_.aperture + action[3] * gripper_.stroke / gripper_.max_aperture, 0.0, 1.0);
  const double new_opening = opening();

  StepResult result;
  double reward = 0.0;

  if (state_.held) {
    const double lift_speed = g_new.z() - g_old.z();
    const double slip_limit = v_slip();
    stats_.min_slip_margin =
        std::min(stats_.min_slip_margin, slip_limit - std::max(0.0, lift_speed));
    const bool speed_slip = lift_speed > slip_limit;
    const bool released = new_opening > object_.w_obj + params_.release_slack;
    if (speed_slip || released) {
      state_.held = false;
      state_.object_vz = 0.0;
      // the object does not follow the slipping move
      state_.object = (speed_slip ? g_old : g_new) + hold_rel_;
      result.info = FailureMode::kSlip;
    } else {
      const double z_before = state_.object.z();
      state_.object = g_new + hold_rel_;
      reward += params_.b_lift * std::max(0.0, state_.object.z() - z_before);
      if (state_.object.z() >= params_.h_min) {
        result.success = true;
        result.done = true;
        reward += params_.r_succ;
      }
    }
  } else {
    const bool airborne = state_.object.z() > rest_z + 1e-12 || state_.object_vz != 0.0;
    if (airborne) {
      const double g_step = xi_.g_z() * params_.dt * params_.dt;  // m/step^2, negative
      const double v_pre = state_.object_vz;
      const double z_pre = state_.object.z();
      double v_new = (v_pre + g_step) / (1.0 + xi_.d_lin());
      double z_new = z_pre + v_new;
      if (z_new <= rest_z) {
        // energy-consistent contact speed from the step-start state
        const double e_kin =
            v_pre * v_pre + 2.0 * std::abs(g_step) * std::max(0.0, z_pre - rest_z);
        v_new = xi_.c_rest() * std::sqrt(e_kin) / (1.0 + xi_.d_lin());
        z_new = rest_z;
        if (v_new < 1e-4) v_new = 0.0;
      }
      if (z_new > rest_z || v_new != 0.0) {
        const Vector2d drift =
            wobble_dir() * params_.wobble_gain * std::abs(v_new) / (1.0 + xi_.d_ang());
        state_.object.head<2>() += drift;
      }
      state_.object_vz = v_new;
      state_.object.z() = z_new;
    } else {
      // pre-grasp sliding: lateral gripper motion close to a resting object
      // nudges it away, damped by table friction
      const Vector2d g_move = (g_new - g_old).head<2>();
      const Vector2d offset = state_.object.head<2>() - g_new.head<2>();
      const double dist = offset.norm();
      if (g_move.norm() > 0.0 && dist > 1e-9 && dist <= params_.nudge_radius &&
          g_new.z() - state_.object.z() <= params_.nudge_height) {
        const double falloff = 1.0 - dist / params_.nudge_radius;
        const double mag = params_.nudge_gain * g_move.norm() * (0.2 / xi_.mu_table()) * falloff;
        state_.object.head<2>() += offset / dist * mag;
      }
    }

    // attach: the opening crosses the object width while aligned at depth
    const bool crossed = prev_opening > object_.w_obj && new_opening <= object_.w_obj;
    if (crossed) {
      const double lateral = (g_new.head<2>() - grasp_point()).norm();
      const double z_err = std::abs(g_new.z() - state_.object.z());
      const double z_tol = params_.z_tol_factor * gripper_.finger_len;
      if (lateral <= r_tol() && z_err <= z_tol) {
        state_.held = true;
        state_.object_vz = 0.0;
        hold_rel_ = state_.object - g_new;
        stats_.attached = true;
        stats_.attach_margin = r_tol() - lateral;
        if (!ever_attached_) {
          ever_attached_ = true;
          reward += params_.b_grasp;
        }
      }
    }
  }

  reward += -params_.c_dist * (state_.gripper - state_.object).norm();

  if (!result.done && state_.t >= params_.horizon) {
    result.done = true;
    if (result.info == FailureMode::kNone) {
      result.info = state_.held ? FailureMode::kInsufficientLift : FailureMode::kTimeout;
    }
  }
  result.reward = reward;
  done_ = result.done;
  stats_.steps = state_.t;
  stats_.max_object_z = std::max(stats_.max_object_z, state_.object.z());
  if (tracing_) {
    trace_.push_back({state_.t, state_.gripper, state_.object, state_.aperture,
                      state_.held, reward, result.info});
  }
  return result;
}

Observation GraspEnv::observe(Variant v) const {
  Observation obs;
  obs.variant = v;
  obs.p_t = state_.object - state_.gripper;  // gripper frame is axis-aligned
  const int d_s = bundle_ ? bundle_->encoders.dims.d_s : 32;
  if (v == Variant::kVisual) {
    obs.vec.resize(kTargetDim + 3);
    obs.vec.head(kTargetDim) = x_t_;
    obs.vec.tail(3) = obs.p_t;
    return obs;
  }
  if (!code_) {
    throw std::runtime_error("observe: latent variant requires an attached frozen bundle");
  }
  if (v == Variant::kLatent) {
    obs.vec.resize(d_s + 3);
    obs.vec.head(d_s) = code_->z_s;
    obs.vec.tail(3) = obs.p_t;
  } else {
    obs.vec.resize(d_s + 3 + context::kDim);
    obs.vec.head(d_s) = code_->z_s;
    obs.vec.segment(d_s, 3) = obs.p_t;
    for (int i = 0; i < context::kDim; ++i) obs.vec[d_s + 3 + i] = e_.e[i];
  }
  return obs;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_trace_csv: cannot open " + path);
  os << "step,gx,gy,gz,ox,oy,oz,aperture,held,reward,info\n";
  char buf[256];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%d,%.10g,%s\n",
                  r.step, r.gripper.x(), r.gripper.y(), r.gripper.z(), r.object.x(),
                  r.object.y(), r.object.z(), r.aperture, r.held ? 1 : 0, r.reward,
                  failure_name(r.info));
    os << buf;
  }
}

context::PhysicsParams midpoint_params(const context::PhysicsRanges& ranges) {
  context::PhysicsParams p;
  const auto r = ranges.as_array();
  for (int i = 0; i < context::kDim; ++i) p.xi[i] = 0.5 * (r[i].lo + r[i].hi);
  return p;
}

Eigen::Vector4d scripted_action(const GraspEnv& env, const ScriptedPolicy& policy) {
  const EnvState& s = env.state();
  const EnvParams& p = env.params();
  const GripperSpec& grip = env.gripper_spec();
  const context::PhysicsParams& xi_used = policy.use_xi ? env.physics() : policy.fallback;
  const double v_slip_used = GraspEnv::v_slip_of(xi_used, grip, p);
  const double move_scale_used = p.action_scale / (1.0 + xi_used.d_lin());

  Eigen::Vector4d action = Eigen::Vector4d::Zero();
  if (s.held) {
    const double v_des = policy.lift_fraction * v_slip_used;
    action[2] = std::clamp(v_des / move_scale_used, 0.0, 1.0);
    return action;
  }

  const Vector2d target = env.grasp_point();
  const Vector2d lat_err = target - s.gripper.head<2>();
  const double align_tol = std::min(0.3 * env.r_tol(), 0.004);
  const double approach_z = 0.12;

  if (lat_err.norm() > align_tol && s.gripper.z() >= approach_z - 1e-9) {
    // align at altitude; no table nudge can trigger up here
    action[0] = std::clamp(lat_err.x() / move_scale_used, -1.0, 1.0);
    action[1] = std::clamp(lat_err.y() / move_scale_used, -1.0, 1.0);
    return action;
  }
  const double z_err = s.gripper.z() - s.object.z();
  if (z_err > 0.4 * p.z_tol_factor * grip.finger_len) {
    action[2] = std::clamp(-z_err / move_scale_used, -1.0, 0.0);  // straight down
    return action;
  }
  action[3] = -1.0;  // close
  return action;
}

StepResult run_scripted(GraspEnv& env, const ScriptedPolicy& policy) {
  StepResult last;
  while (!env.done()) {
    last = env.step(scripted_action(env, policy));
  }
  return last;
}

}  // namespace gg::env
