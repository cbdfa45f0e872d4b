#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gg/context.hpp"

using namespace gg;
using context::ContextVector;
using context::kDim;
using context::PhysicsParams;
using context::PhysicsRanges;

TEST_SUITE("context") {

TEST_CASE("sampling is deterministic in the seed") {
  PhysicsRanges ranges;
  const PhysicsParams a = context::sample(ranges, 0);
  const PhysicsParams b = context::sample(ranges, 0);
  CHECK(a.xi == b.xi);
  const PhysicsParams c = context::sample(ranges, 1);
  CHECK(a.xi != c.xi);
}

TEST_CASE("samples stay inside the table bounds") {
  PhysicsRanges ranges;
  double lo = 1e9, hi = -1e9, gsum = 0.0;
  const int n = 10000;
  for (int s = 0; s < n; ++s) {
    const PhysicsParams p = context::sample(ranges, s);
    const auto r = ranges.as_array();
    for (int i = 0; i < kDim; ++i) {
      CHECK(p.xi[i] >= r[i].lo);
      CHECK(p.xi[i] <= r[i].hi);
    }
    lo = std::min(lo, p.mu_obj());
    hi = std::max(hi, p.mu_obj());
    gsum += p.g_z();
  }
  CHECK(lo >= 0.2);
  CHECK(hi <= 1.2);
  // uniform mean (-11-7)/2 = -9; 3 sigma / sqrt(n) band is ~0.035
  const double gmean = gsum / n;
  CHECK(gmean > -9.2);
  CHECK(gmean < -8.8);
}

TEST_CASE("normalize maps the midpoint to zero") {
  PhysicsRanges ranges;
  PhysicsParams p;
  const auto r = ranges.as_array();
  for (int i = 0; i < kDim; ++i) p.xi[i] = 0.5 * (r[i].lo + r[i].hi);
  const ContextVector e = context::normalize(p, ranges);
  for (int i = 0; i < kDim; ++i) CHECK(e.e[i] == doctest::Approx(0.0));
}

TEST_CASE("normalize maps bounds to +-1 and clips out-of-range") {
  PhysicsRanges ranges;
  PhysicsParams p = context::sample(ranges, 7);
  p.xi[0] = 1.2;  // mu_obj upper bound
  ContextVector e = context::normalize(p, ranges);
  CHECK(e.e[0] == doctest::Approx(1.0));

  const auto r = ranges.as_array();
  for (int i = 0; i < kDim; ++i) p.xi[i] = r[i].lo - 0.5;
  e = context::normalize(p, ranges);
  for (int i = 0; i < kDim; ++i) CHECK(e.e[i] == doctest::Approx(-1.0));
}

TEST_CASE("degenerate range is rejected") {
  PhysicsRanges ranges;
  ranges.m_scale = {1.0, 1.0};
  PhysicsParams p;
  CHECK_THROWS(context::normalize(p, ranges));
  CHECK_THROWS(context::sample(ranges, 0));
}

TEST_CASE("normalize then denormalize is the identity in range") {
  PhysicsRanges ranges;
  for (int s = 0; s < 1000; ++s) {
    const PhysicsParams p = context::sample(ranges, s);
    const PhysicsParams back = context::denormalize(context::normalize(p, ranges), ranges);
    for (int i = 0; i < kDim; ++i) CHECK(std::abs(back.xi[i] - p.xi[i]) <= 1e-12);
  }
}

TEST_CASE("normalize is monotone per coordinate") {
  PhysicsRanges ranges;
  const auto r = ranges.as_array();
  for (int i = 0; i < kDim; ++i) {
    double prev = -2.0;
    for (int k = 0; k <= 20; ++k) {
      PhysicsParams p;
      for (int j = 0; j < kDim; ++j) p.xi[j] = 0.5 * (r[j].lo + r[j].hi);
      p.xi[i] = r[i].lo - 0.3 + k * 0.1 * (r[i].hi - r[i].lo);
      const ContextVector e = context::normalize(p, ranges);
      CHECK(e.e[i] >= prev);
      prev = e.e[i];
    }
  }
}

TEST_CASE("context vector invariant holds on OOD-scaled sweeps") {
  PhysicsRanges ranges;
  const PhysicsRanges wide = ranges.scaled(1.25);
  for (int s = 0; s < 2000; ++s) {
    const PhysicsParams p = context::sample(wide, s);
    const ContextVector e = context::normalize(p, ranges);
    for (int i = 0; i < kDim; ++i) {
      CHECK(e.e[i] >= -1.0);
      CHECK(e.e[i] <= 1.0);
    }
  }
}

TEST_CASE("scaled ranges keep midpoints") {
  PhysicsRanges ranges;
  const PhysicsRanges wide = ranges.scaled(1.25);
  const auto a = ranges.as_array();
  const auto b = wide.as_array();
  for (int i = 0; i < kDim; ++i) {
    CHECK(0.5 * (a[i].lo + a[i].hi) == doctest::Approx(0.5 * (b[i].lo + b[i].hi)));
    CHECK(b[i].hi - b[i].lo == doctest::Approx(1.25 * (a[i].hi - a[i].lo)));
  }
}

}  // TEST_SUITE
