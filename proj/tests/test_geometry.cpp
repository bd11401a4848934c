#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hyphall/geometry.hpp"
#include "oracles.hpp"

using namespace hyphall;

namespace {

std::mt19937 rng(20260816);

HPoint random_halfplane_point(double spread = 2.0) {
  std::uniform_real_distribution<double> ux(-spread, spread);
  std::uniform_real_distribution<double> uy(0.05, spread);
  return {cd(ux(rng), uy(rng)), Model::HalfPlane};
}

Isometry random_isometry() {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  double a = 0.0, b, c;
  do { a = u(rng); } while (std::abs(a) < 0.2);
  b = u(rng);
  c = u(rng);
  double d = (1.0 + b * c) / a;
  return Isometry(a, b, c, d);
}

}  // namespace

TEST_CASE("cayley transform maps i to the disk origin and is inverse-consistent") {
  CHECK(std::abs(cayley_to_disk(cd(0, 1))) < 1e-15);
  for (int k = 0; k < 50; ++k) {
    HPoint p = random_halfplane_point();
    cd back = cayley_to_halfplane(cayley_to_disk(p.z));
    CHECK(std::abs(back - p.z) < 1e-12);
  }
}

TEST_CASE("distance between i and 2i is log 2") {
  HPoint p{cd(0, 1), Model::HalfPlane}, q{cd(0, 2), Model::HalfPlane};
  CHECK(hyp_distance(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("distance is symmetric, positive, and model-independent") {
  for (int k = 0; k < 200; ++k) {
    HPoint p = random_halfplane_point(), q = random_halfplane_point();
    double d1 = hyp_distance(p, q);
    double d2 = hyp_distance(q, p);
    CHECK(d1 == doctest::Approx(d2).epsilon(1e-13));
    if (std::abs(p.z - q.z) > 1e-12) CHECK(d1 > 0.0);
    double d3 = hyp_distance(to_model(p, Model::Disk), to_model(q, Model::Disk));
    CHECK(d1 == doctest::Approx(d3).epsilon(1e-11));
  }
}

TEST_CASE("moebius action is isometric and preserves triangle areas") {
  for (int k = 0; k < 100; ++k) {
    Isometry g = random_isometry();
    HPoint p = random_halfplane_point(), q = random_halfplane_point(),
           r = random_halfplane_point();
    CHECK(hyp_distance(g.apply(p), g.apply(q)) ==
          doctest::Approx(hyp_distance(p, q)).epsilon(1e-10));
    CHECK(signed_triangle_area(g.apply(p), g.apply(q), g.apply(r)) ==
          doctest::Approx(signed_triangle_area(p, q, r)).epsilon(1e-9));
  }
}

TEST_CASE("non-unimodular matrix is rejected") {
  CHECK_THROWS_AS(Isometry(1.0, 0.5, 0.0, 1.1), Error);
}

TEST_CASE("boundary points trigger degeneracy errors") {
  HPoint boundary{cd(0.3, 1e-16), Model::HalfPlane};
  HPoint ok{cd(0, 1), Model::HalfPlane};
  CHECK_THROWS_AS(hyp_distance(boundary, ok), Error);
}

TEST_CASE("degenerate triangles have exactly zero area") {
  HPoint p{cd(0.0, 1.0), Model::HalfPlane};
  HPoint q{cd(1.0, 1.5), Model::HalfPlane};
  CHECK(signed_triangle_area(p, p, q) == 0.0);
  CHECK(signed_triangle_area(p, q, q) == 0.0);
  CHECK(signed_triangle_area(q, p, q) == 0.0);
  // collinear points on the imaginary axis: angle defect vanishes
  HPoint a{cd(0, 1), Model::HalfPlane}, b{cd(0, 2), Model::HalfPlane},
      c{cd(0, 3.7), Model::HalfPlane};
  CHECK(std::abs(signed_triangle_area(a, b, c)) < 1e-12);
}

TEST_CASE("signed area is antisymmetric under vertex transposition") {
  for (int k = 0; k < 200; ++k) {
    HPoint p = random_halfplane_point(), q = random_halfplane_point(),
           r = random_halfplane_point();
    double s = signed_triangle_area(p, q, r);
    CHECK(signed_triangle_area(q, p, r) == doctest::Approx(-s).epsilon(1e-10));
    CHECK(signed_triangle_area(p, r, q) == doctest::Approx(-s).epsilon(1e-10));
    // cyclic rotations preserve it
    CHECK(signed_triangle_area(q, r, p) == doctest::Approx(s).epsilon(1e-10));
  }
}

TEST_CASE("area magnitude matches 2-D quadrature of dx dy / y^2") {
  // frozen spot check: quadrature on this triangle gives 0.266700508357
  HPoint v{cd(0.0, 1.0), Model::HalfPlane};
  HPoint w{cd(1.0, 1.0), Model::HalfPlane};
  HPoint z{cd(0.5, 2.0), Model::HalfPlane};
  double q0 = oracles::area_quadrature(v, w, z);
  CHECK(q0 == doctest::Approx(0.266700508357).epsilon(1e-6));
  CHECK(std::abs(signed_triangle_area(v, w, z)) == doctest::Approx(q0).epsilon(1e-6));

  for (int k = 0; k < 25; ++k) {
    HPoint a = random_halfplane_point(), b = random_halfplane_point(),
           c = random_halfplane_point();
    double impl = std::abs(signed_triangle_area(a, b, c));
    if (impl < 1e-4) continue;  // quadrature oracle is weak on slivers
    double quad = oracles::area_quadrature(a, b, c);
    CHECK(impl == doctest::Approx(quad).epsilon(2e-6));
  }
}

TEST_CASE("signed area agrees with the boundary integral of dx/y") {
  for (int k = 0; k < 300; ++k) {
    HPoint a = random_halfplane_point(), b = random_halfplane_point(),
           c = random_halfplane_point();
    double impl = signed_triangle_area(a, b, c);
    double stokes = oracles::signed_area_stokes(a, b, c);
    CHECK(impl == doctest::Approx(stokes).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("triangle area tends to pi as vertices approach the ideal boundary") {
  // positively oriented triple pushed radially outward in the disk
  cd a0 = std::polar(1.0, 0.3), b0 = std::polar(1.0, 2.4),
     c0 = std::polar(1.0, 4.4);
  double prev = -1.0;
  for (double t : {0.5, 0.8, 0.95, 0.99, 0.999}) {
    HPoint a{t * a0, Model::Disk}, b{t * b0, Model::Disk}, c{t * c0, Model::Disk};
    double area = std::abs(signed_triangle_area(a, b, c));
    CHECK(area > prev);
    prev = area;
  }
  CHECK(prev > M_PI - 5e-3);
  CHECK(prev < M_PI);
}

TEST_CASE("transport phases are unimodular and reverse to conjugates") {
  double theta = 0.83;
  for (int k = 0; k < 200; ++k) {
    HPoint z = random_halfplane_point(), w = random_halfplane_point();
    auto tzw = parallel_transport(theta, z, w);
    auto twz = parallel_transport(theta, w, z);
    CHECK(std::abs(std::abs(tzw.value) - 1.0) < 1e-14);
    CHECK(std::abs(tzw.value * twz.value - cd(1.0, 0.0)) < 1e-12);
    CHECK_FALSE(tzw.branch_ambiguous);
  }
}

TEST_CASE("transport matches the gauge line integral along the geodesic") {
  for (double theta : {0.5, 1.0, 2.7}) {
    for (int k = 0; k < 100; ++k) {
      HPoint z = random_halfplane_point(), w = random_halfplane_point();
      cd impl = parallel_transport(theta, z, w).value;
      cd oracle = oracles::transport_integral(theta, z, w);
      CHECK(std::abs(impl - oracle) < 1e-11);
    }
  }
}

TEST_CASE("transport around a triangle factors through the holonomy") {
  for (double theta : {0.35, 1.2}) {
    for (int k = 0; k < 200; ++k) {
      HPoint v = random_halfplane_point(), w = random_halfplane_point(),
             z = random_halfplane_point();
      cd prod = parallel_transport(theta, v, w).value *
                parallel_transport(theta, w, z).value /
                parallel_transport(theta, v, z).value;
      cd hol = holonomy(theta, v, w, z);
      CHECK(std::abs(prod - hol) < 1e-9);
    }
  }
}

TEST_CASE("holonomy satisfies the four-point cocycle identity") {
  double theta = 1.37;
  for (int k = 0; k < 300; ++k) {
    HPoint u = random_halfplane_point(), v = random_halfplane_point(),
           w = random_halfplane_point(), z = random_halfplane_point();
    cd lhs = holonomy(theta, u, v, w) * holonomy(theta, u, w, z);
    cd rhs = holonomy(theta, u, v, z) * holonomy(theta, v, w, z);
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("holonomy is inverted by transposing two vertices") {
  double theta = 0.61;
  for (int k = 0; k < 100; ++k) {
    HPoint v = random_halfplane_point(), w = random_halfplane_point(),
           z = random_halfplane_point();
    cd h = holonomy(theta, v, w, z);
    cd hswap = holonomy(theta, w, v, z);
    CHECK(std::abs(h * hswap - cd(1.0, 0.0)) < 1e-10);
  }
}

TEST_CASE("discrete Landau levels at flux 2") {
  auto ls = landau_levels(2.0);
  REQUIRE(ls.levels.size() == 2);
  CHECK(ls.levels[0] == doctest::Approx(2.0));
  CHECK(ls.levels[1] == doctest::Approx(4.0));
  CHECK(ls.continuum_edge == doctest::Approx(4.25));
}

TEST_CASE("discrete Landau levels at flux 3.5") {
  auto ls = landau_levels(3.5);
  REQUIRE(ls.levels.size() == 3);
  CHECK(ls.levels[0] == doctest::Approx(3.5));
  CHECK(ls.levels[1] == doctest::Approx(8.5));
  CHECK(ls.levels[2] == doctest::Approx(11.5));
  CHECK(ls.continuum_edge == doctest::Approx(12.5));
}

TEST_CASE("no discrete levels below the coupling threshold") {
  auto ls = landau_levels(0.4);
  CHECK(ls.levels.empty());
  CHECK(ls.continuum_edge == doctest::Approx(0.41));
  CHECK_THROWS_AS(landau_levels(0.0), Error);
}

TEST_CASE("levels sit below the continuum edge and increase with k") {
  for (double theta : {0.8, 1.0, 2.2, 5.9, 11.3}) {
    auto ls = landau_levels(theta);
    double prev = -1e300;
    for (double e : ls.levels) {
      CHECK(e > prev);
      CHECK(e < ls.continuum_edge);
      prev = e;
    }
    // expected count: smallest integer above theta - 1/2
    int expect = static_cast<int>(std::ceil(theta - 0.5));
    if (std::abs(theta - 0.5 - std::round(theta - 0.5)) < 1e-12) {
      expect = static_cast<int>(std::round(theta - 0.5));
    }
    CHECK(static_cast<int>(ls.levels.size()) == expect);
  }
}
