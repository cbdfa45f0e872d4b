#pragma once

#include <array>
#include <cstdint>

namespace gg::context {

inline constexpr int kDim = 8;

struct ParamRange {
  double lo = 0.0;
  double hi = 1.0;
};

// Per-episode randomized physics parameter bounds (uniform sampling).
// Friction coefficients and mass scale are dimensionless, g_z is m/s^2,
// damping values are dimensionless per-step coefficients.
struct PhysicsRanges {
  ParamRange mu_obj{0.2, 1.2};
  ParamRange mu_table{0.2, 1.2};
  ParamRange mu_gripper{0.6, 2.0};
  ParamRange m_scale{0.6, 1.6};
  ParamRange g_z{-11.0, -7.0};
  ParamRange c_rest{0.0, 0.2};
  ParamRange d_lin{0.0, 0.4};
  ParamRange d_ang{0.0, 0.4};

  std::array<ParamRange, kDim> as_array() const {
    return {mu_obj, mu_table, mu_gripper, m_scale, g_z, c_rest, d_lin, d_ang};
  }
  static const char* name(int i);
  void validate() const;  // throws unless lo < hi for every parameter
  // Ranges widened/narrowed by factor f about their midpoints (OOD sweeps).
  PhysicsRanges scaled(double f) const;
};

// One sampled physics vector, held fixed for an episode.
struct PhysicsParams {
  std::array<double, kDim> xi{};
  std::uint64_t episode_seed = 0;

  double mu_obj() const { return xi[0]; }
  double mu_table() const { return xi[1]; }
  double mu_gripper() const { return xi[2]; }
  double m_scale() const { return xi[3]; }
  double g_z() const { return xi[4]; }
  double c_rest() const { return xi[5]; }
  double d_lin() const { return xi[6]; }
  double d_ang() const { return xi[7]; }
};

// Normalized context block; every component in [-1, 1].
struct ContextVector {
  std::array<double, kDim> e{};
};

// Deterministic given seed; components i.i.d. uniform within bounds.
PhysicsParams sample(const PhysicsRanges& ranges, std::uint64_t seed);

// e_i = clip(2 (xi_i - lo_i) / (hi_i - lo_i) - 1, -1, 1).
ContextVector normalize(const PhysicsParams& params, const PhysicsRanges& ranges);

// Inverse of normalize on in-range values; test helper.
PhysicsParams denormalize(const ContextVector& e, const PhysicsRanges& ranges);

}  // namespace gg::context
