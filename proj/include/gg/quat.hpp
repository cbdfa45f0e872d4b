#pragma once

#include <Eigen/Dense>
#include <utility>

namespace gg::quat {

using Vec4 = Eigen::Vector4d;

// Unit quaternion; |norm - 1| <= 1e-9 after construction through project()
// or unit_from().
struct UnitQuat {
  Vec4 v{1.0, 0.0, 0.0, 0.0};
};

// Reference update rule used when projecting a stream of raw quaternions:
// keep the episode-initial reference, or track the previously executed one.
enum class RefPolicy { kInitial, kPrevious };

struct ProjectionConfig {
  double epsilon = 1e-8;
  UnitQuat reference;
  RefPolicy ref_policy = RefPolicy::kInitial;
};

// Normalizes, throws on zero/non-finite input. Test/construction helper.
UnitQuat unit_from(const Vec4& v);

// x / (||x|| + eps); the raw unitisation map without sign handling.
Vec4 normalize_eps(const Vec4& x, double eps);

// Sign-consistent unit projection: sgn(<raw, ref>) * raw / (||raw|| + eps),
// renormalized to unit length; returns the reference exactly for raw = 0.
// sgn(0) counts as +1 so the map is total.
UnitQuat project(const Vec4& raw, const ProjectionConfig& cfg);

// Advances cfg.reference after an executed quaternion per cfg.ref_policy.
void update_reference(ProjectionConfig& cfg, const UnitQuat& executed);

// 2*acos(|<a,b>|) in radians, in [0, pi]; sign-invariant in either argument.
double geodesic_distance(const UnitQuat& a, const UnitQuat& b);

// (lhs, rhs) with lhs = geodesic_distance(a,b) and
// rhs = pi * min(||a-b||, ||a+b||); lhs <= rhs for unit inputs.
std::pair<double, double> euclid_to_geodesic_bound(const UnitQuat& a,
                                                   const UnitQuat& b);

}  // namespace gg::quat
