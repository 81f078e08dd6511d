#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "posefit/error.hpp"
#include "posefit/geometry.hpp"

using namespace posefit;

namespace {

Point3 random_point(Rng& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("closest_point_on_segment examples") {
  const Point3 a(-1, 0, 0), b(1, 0, 0);
  CHECK(closest_point_on_segment(Point3(0, 3, 0), a, b) == Point3(0, 0, 0));
  CHECK(closest_point_on_segment(Point3(5, 2, 0), a, b) == Point3(1, 0, 0));
  CHECK(closest_point_on_segment(Point3(-9, 1, 1), a, b) == Point3(-1, 0, 0));
  // Degenerate segment collapses to its start.
  CHECK(closest_point_on_segment(Point3(1, 2, 3), a, a) == a);
}

TEST_CASE("closest_point_on_segment against dense sampling") {
  Rng rng(1);
  const int samples = 100000;
  for (int i = 0; i < 1000; ++i) {
    const Point3 p = random_point(rng, 1.0), a = random_point(rng, 1.0), b = random_point(rng, 1.0);
    const Point3 q = closest_point_on_segment(p, a, b);
    const Point3 s = oracle::sampled_closest_on_segment(p, a, b, samples);
    // The sampled distance can only be worse; the argmin is within one sample step.
    CHECK((p - q).norm() <= (p - s).norm() + 1e-12);
    CHECK((q - s).norm() <= (b - a).norm() / samples + 1e-6);
  }
}

TEST_CASE("distance_to_capsule examples") {
  const double r = 0.1;
  const Capsule c{Point3(-1, 0, 0), Point3(1, 0, 0), r};
  CHECK(distance_to_capsule(Point3(0.3, r, 0), c) == 0.0);
  CHECK(distance_to_capsule(Point3(0, 0, 0), c) == 0.0);
  CHECK(distance_to_capsule(Point3(0, 2 * r, 0), c) == doctest::Approx(r).epsilon(1e-12));
  CHECK(distance_to_capsule(Point3(1.5, 0, 0), c) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("distance_to_capsule against surface sampling") {
  Rng rng(2);
  std::uniform_real_distribution<double> radius(0.05, 0.3);
  for (int i = 0; i < 200; ++i) {
    const Capsule c{random_point(rng, 1.0), random_point(rng, 1.0), radius(rng)};
    const Point3 p = random_point(rng, 2.0);
    const double d = distance_to_capsule(p, c);
    const double s = oracle::sampled_capsule_distance(p, c.a, c.b, c.radius, 100000);
    CHECK(d <= s + 1e-12);
    CHECK(std::abs(d - s) <= 1e-3 * c.radius + (d == 0.0 ? 1e300 : 0.0));
    if (d == 0.0) CHECK(s == 0.0);
  }
}

TEST_CASE("distance_to_model examples and errors") {
  PosedModel one;
  one.segments.push_back({Point3(0, 0, 0), Point3(1, 0, 0), 0.1, 0});
  const auto d0 = distance_to_model(Point3(0.5, 0.1, 0), one);
  CHECK(d0.distance == 0.0);
  CHECK(d0.link_id == 0);

  PosedModel two = one;
  two.segments.push_back({Point3(0, 1, 0), Point3(1, 1, 0), 0.1, 1});
  const auto d1 = distance_to_model(Point3(0.5, 0.8, 0), two);
  CHECK(d1.link_id == 1);
  CHECK(d1.distance == doctest::Approx(0.1).epsilon(1e-12));

  // Equidistant point: the smaller id wins.
  CHECK(distance_to_model(Point3(0.5, 0.5, 0), two).link_id == 0);

  CHECK_THROWS_AS(distance_to_model(Point3(0, 0, 0), PosedModel{}), InvalidInput);
}

TEST_CASE("distance_to_model equals the per-link scan on random 8-link models") {
  Rng rng(3);
  const Skeleton sk = fixtures::random_tree(rng, 8);
  for (int m = 0; m < 5; ++m) {
    const PosedModel model = forward_kinematics(sk, random_pose(sk, fixtures::unit_box(), rng));
    for (int i = 0; i < 500; ++i) {
      const Point3 p = random_point(rng, 2.0);
      double best = std::numeric_limits<double>::infinity();
      int id = -1;
      for (const auto& s : model.segments) {
        const double d = distance_to_capsule(p, capsule_of(s));
        if (d < best || (d == best && s.link_id < id)) best = d, id = s.link_id;
      }
      const auto got = distance_to_model(p, model);
      CHECK(got.distance == best);
      CHECK(got.link_id == id);
      for (const auto& s : model.segments) CHECK(got.distance <= distance_to_capsule(p, capsule_of(s)));
    }
  }
}

TEST_CASE("capsule distance properties") {
  Rng rng(4);
  std::uniform_real_distribution<double> radius(0.01, 0.5);
  for (int i = 0; i < 2000; ++i) {
    const Capsule c{random_point(rng, 1.0), random_point(rng, 1.0), radius(rng)};
    const Point3 p = random_point(rng, 2.0), q = random_point(rng, 2.0);
    const double d = distance_to_capsule(p, c);
    CHECK(d >= 0.0);
    const Point3 foot = closest_point_on_segment(p, c.a, c.b);
    CHECK((d == 0.0) == ((p - foot).norm() <= c.radius));

    // Lipschitz.
    CHECK(std::abs(distance_to_capsule(q, c) - d) <= (p - q).norm() + 1e-12);

    // Rigid equivariance.
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.rotate(Eigen::AngleAxisd(radius(rng) * 10, random_point(rng, 1.0).normalized()));
    t.pretranslate(random_point(rng, 3.0));
    const Capsule moved{t * c.a, t * c.b, c.radius};
    CHECK(std::abs(distance_to_capsule(t * p, moved) - d) <= 1e-9);
  }
}
