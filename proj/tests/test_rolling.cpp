#include <doctest.h>

#include <cmath>
#include <numbers>

#include "granular_biped/errors.hpp"
#include "granular_biped/rolling.hpp"

using namespace granular_biped;

namespace {

// World height of a contour point relative to the foot origin.
double world_z(const FootShape& s, double pitch, double x) { return world_offset(s, pitch, x).y(); }

// Two-level grid search for the lowest contour point.
double grid_lowest(const FootShape& s, double pitch) {
  const double lo = s.x_min() + 1e-9, hi = s.x_max() - 1e-9;
  int n = 200000;
  double best = lo, best_z = world_z(s, pitch, lo);
  for (int i = 0; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    const double z = world_z(s, pitch, x);
    if (z < best_z) {
      best_z = z;
      best = x;
    }
  }
  const double h = (hi - lo) / n;
  const double a = std::max(lo, best - h), b = std::min(hi, best + h);
  n = 20000;
  for (int i = 0; i <= n; ++i) {
    const double x = a + (b - a) * i / n;
    const double z = world_z(s, pitch, x);
    if (z < best_z) {
      best_z = z;
      best = x;
    }
  }
  return best;
}

FootShape parabola(double R, double half_width, int n) {
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < n; ++i) {
    const double x = -half_width + 2.0 * half_width * i / (n - 1);
    pts.emplace_back(x, x * x / (2.0 * R));
  }
  return FootShape::tabulated(pts);
}

}  // namespace

TEST_SUITE("rolling") {
  TEST_CASE("semi-cylinder at zero pitch touches at the bottom pole") {
    const auto s = FootShape::semi_cylinder(0.03);
    const auto c = lowest_point(s, 0.0);
    CHECK(c.x_r == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(c.z_r == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(orientation_angle(s, c) == doctest::Approx(0.0).epsilon(1e-9));
  }

  TEST_CASE("semi-cylinder contact rotates with the pitch and stays below the centre") {
    const double R = 0.03;
    const auto s = FootShape::semi_cylinder(R);
    for (double p : {-1.0, -0.4, 0.1, 0.7, 1.2}) {
      const auto c = lowest_point(s, p);
      CHECK(c.x_r == doctest::Approx(R * std::sin(p)).epsilon(1e-9));
      CHECK(orientation_angle(s, c) == doctest::Approx(p).epsilon(1e-9));
      // Circle centre sits at (0, R) in the foot frame.
      const Eigen::Vector2d centre = world_offset(s, p, 0.0) + Eigen::Vector2d(R * std::sin(p), R * std::cos(p));
      const Eigen::Vector2d contact = world_offset(s, p, c.x_r);
      CHECK(contact.x() == doctest::Approx(centre.x()).epsilon(1e-9));
      CHECK(centre.y() - contact.y() == doctest::Approx(R).epsilon(1e-9));
    }
  }

  TEST_CASE("lowest point matches a dense grid search") {
    const auto circle = FootShape::semi_cylinder(0.03);
    const auto tab = parabola(0.05, 0.04, 41);
    for (double p : {-0.5, -0.2, 0.0, 0.15, 0.45}) {
      CHECK(std::abs(lowest_point(circle, p).x_r - grid_lowest(circle, p)) < 1e-8);
      CHECK(std::abs(lowest_point(tab, p).x_r - grid_lowest(tab, p)) < 1e-8);
    }
  }

  TEST_CASE("parabolic contour behaves like a circle near the apex") {
    const double R = 0.05;
    const auto tab = parabola(R, 0.04, 41);
    for (double p : {0.01, 0.02, -0.03}) {
      CHECK(lowest_point(tab, p).x_r == doctest::Approx(R * std::tan(p)).epsilon(1e-3));
    }
  }

  TEST_CASE("tabulated slope matches a finite difference of the interpolant") {
    const auto tab = parabola(0.05, 0.04, 33);
    const double h = 1e-7;
    for (double x : {-0.03, -0.011, 0.0, 0.017, 0.035}) {
      const double fd = (tab.height(x + h) - tab.height(x - h)) / (2.0 * h);
      CHECK(std::abs(tab.slope(x) - fd) < 1e-6);
    }
  }

  TEST_CASE("contact beyond the sole edge is reported") {
    const auto tab = parabola(0.05, 0.02, 21);
    CHECK_THROWS_AS(lowest_point(tab, 0.8), ContactBoundaryError);
    CHECK_THROWS_AS(lowest_point(FootShape::semi_cylinder(0.03), 1.6), ContactBoundaryError);
  }

  TEST_CASE("contour construction guards") {
    CHECK_THROWS_AS(FootShape::semi_cylinder(0.0), DomainError);
    std::vector<Eigen::Vector2d> few(10, Eigen::Vector2d::Zero());
    CHECK_THROWS_AS(FootShape::tabulated(few), DomainError);
    std::vector<Eigen::Vector2d> concave;
    for (int i = 0; i < 20; ++i) {
      const double x = -0.02 + 0.002 * i;
      concave.emplace_back(x, -x * x);
    }
    CHECK_THROWS_AS(FootShape::tabulated(concave), DomainError);
  }

  TEST_CASE("rolling angle is the exact difference") {
    CHECK(rolling_angle(0.3, 0.3) == 0.0);
    CHECK(rolling_angle(0.1, 0.25) == doctest::Approx(0.15));
  }

  TEST_CASE("velocity angle") {
    CHECK(*velocity_angle(0.1, 0.0) == doctest::Approx(0.0));
    CHECK(*velocity_angle(0.1, 0.1) == doctest::Approx(std::numbers::pi / 4));
    CHECK(*velocity_angle(0.0, -0.05) == doctest::Approx(-std::numbers::pi / 2));
    CHECK_FALSE(velocity_angle(1e-7, 1e-7).has_value());
  }

  TEST_CASE("effective radius") {
    CHECK(effective_radius({0.1, 0.0}, 2.0) == doctest::Approx(0.05));
    CHECK_THROWS_AS(effective_radius({0.1, 0.0}, 1e-6), NoRotationError);
    // Both printed forms agree whenever xdot is non-zero.
    const Eigen::Vector2d v(0.08, -0.03);
    const double g = *velocity_angle(v.x(), v.y());
    CHECK(v.norm() == doctest::Approx(std::abs(v.x()) * std::sqrt(1.0 + std::tan(g) * std::tan(g))));
  }

  TEST_CASE("pure rolling of a semi-cylinder: R_eff = R and the rolling angle tracks the pitch") {
    const double R = 0.03, omega = 2.0, dt = 1e-4;
    const auto s = FootShape::semi_cylinder(R);
    // No-slip rollout on flat ground: the centre advances R * pitch.
    const auto contact_world = [&](double pitch) {
      const Eigen::Vector2d centre(R * pitch, R);
      const Eigen::Vector2d to_origin = -Eigen::Vector2d(R * std::sin(pitch), R * std::cos(pitch));
      return Eigen::Vector2d(centre + to_origin + world_offset(s, pitch, lowest_point(s, pitch).x_r));
    };
    const double theta0 = orientation_angle(s, lowest_point(s, 0.0));
    for (int k = 1; k <= 50; ++k) {
      const double t = k * 0.01;
      const double p = omega * t;
      const Eigen::Vector2d v = (contact_world(omega * (t + dt)) - contact_world(omega * (t - dt))) / (2.0 * dt);
      CHECK(effective_radius(v, omega) == doctest::Approx(R).epsilon(1e-2));
      CHECK(contact_world(p).y() == doctest::Approx(0.0).epsilon(1e-12));
      const double dtheta = rolling_angle(theta0, orientation_angle(s, lowest_point(s, p)));
      CHECK(std::abs(dtheta - p) < 1e-6);
    }
  }
}
