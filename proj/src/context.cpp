#include "gg/context.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "gg/rng.hpp"

namespace gg::context {

const char* PhysicsRanges::name(int i) {
  static const char* names[kDim] = {"mu_obj", "mu_table", "mu_gripper",
                                    "m_scale", "g_z",      "c_rest",
                                    "d_lin",  "d_ang"};
  return names[i];
}

void PhysicsRanges::validate() const {
  const auto r = as_array();
  for (int i = 0; i < kDim; ++i) {
    if (!(r[i].lo < r[i].hi)) {
      throw std::invalid_argument(std::string("physics range ") + name(i) +
                                  ": min must be < max");
    }
  }
}

PhysicsRanges PhysicsRanges::scaled(double f) const {
  PhysicsRanges out = *this;
  auto widen = [f](ParamRange& r) {
    const double mid = 0.5 * (r.lo + r.hi);
    const double half = 0.5 * (r.hi - r.lo) * f;
    r.lo = mid - half;
    r.hi = mid + half;
  };
  widen(out.mu_obj);
  widen(out.mu_table);
  widen(out.mu_gripper);
  widen(out.m_scale);
  widen(out.g_z);
  widen(out.c_rest);
  widen(out.d_lin);
  widen(out.d_ang);
  return out;
}

PhysicsParams sample(const PhysicsRanges& ranges, std::uint64_t seed) {
  ranges.validate();
  Rng rng(mix_seed(seed, 0x9c));
  PhysicsParams p;
  p.episode_seed = seed;
  const auto r = ranges.as_array();
  for (int i = 0; i < kDim; ++i) p.xi[i] = rng.uniform(r[i].lo, r[i].hi);
  return p;
}

ContextVector normalize(const PhysicsParams& params, const PhysicsRanges& ranges) {
  ranges.validate();
  ContextVector c;
  const auto r = ranges.as_array();
  for (int i = 0; i < kDim; ++i) {
    const double u = 2.0 * (params.xi[i] - r[i].lo) / (r[i].hi - r[i].lo) - 1.0;
    c.e[i] = std::clamp(u, -1.0, 1.0);
  }
  return c;
}

PhysicsParams denormalize(const ContextVector& e, const PhysicsRanges& ranges) {
  ranges.validate();
  PhysicsParams p;
  const auto r = ranges.as_array();
  for (int i = 0; i < kDim; ++i) {
    p.xi[i] = r[i].lo + 0.5 * (e.e[i] + 1.0) * (r[i].hi - r[i].lo);
  }
  return p;
}

}  // namespace gg::context
