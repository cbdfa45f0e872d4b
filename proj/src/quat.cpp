#include "gg/quat.hpp"

#include <cmath>
#include <stdexcept>

namespace gg::quat {

UnitQuat unit_from(const Vec4& v) {
  if (!v.allFinite()) throw std::invalid_argument("unit_from: non-finite input");
  const double n = v.norm();
  if (n == 0.0) throw std::invalid_argument("unit_from: zero quaternion");
  return UnitQuat{v / n};
}

Vec4 normalize_eps(const Vec4& x, double eps) {
  return x / (x.norm() + eps);
}

UnitQuat project(const Vec4& raw, const ProjectionConfig& cfg) {
  if (!raw.allFinite()) throw std::invalid_argument("project: non-finite input");
  if (cfg.epsilon <= 0.0) throw std::invalid_argument("project: epsilon must be > 0");
  if (raw.isZero(0.0)) return cfg.reference;
  const double sign = raw.dot(cfg.reference.v) < 0.0 ? -1.0 : 1.0;
  Vec4 p = sign * normalize_eps(raw, cfg.epsilon);
  // The eps in the denominator leaves an O(eps) norm deficit; renormalize so
  // the unit invariant holds exactly.
  return UnitQuat{p / p.norm()};
}

void update_reference(ProjectionConfig& cfg, const UnitQuat& executed) {
  if (cfg.ref_policy == RefPolicy::kPrevious) cfg.reference = executed;
}

double geodesic_distance(const UnitQuat& a, const UnitQuat& b) {
  double c = std::abs(a.v.dot(b.v));
  if (c > 1.0) c = 1.0;
  return 2.0 * std::acos(c);
}

std::pair<double, double> euclid_to_geodesic_bound(const UnitQuat& a,
                                                   const UnitQuat& b) {
  const double lhs = geodesic_distance(a, b);
  // min over the two sign representatives of b; the bound as written in the
  // aligned-sign derivation fails for the antipodal representative.
  const double d = std::min((a.v - b.v).norm(), (a.v + b.v).norm());
  return {lhs, M_PI * d};
}

}  // namespace gg::quat
