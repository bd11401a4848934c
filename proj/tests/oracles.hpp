#pragma once

// Independent numerical oracles used only by the test suite.  These
// deliberately avoid the library's own algorithms: areas come from direct
// 2-D quadrature of the hyperbolic area form, signed areas from the boundary
// line integral of dx/y, transport phases from the geodesic line integral.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "hyphall/geometry.hpp"

namespace oracles {

using hyphall::cd;
using hyphall::HPoint;
using hyphall::Model;

struct Edge {
  double x0, x1;    // x-span (x0 < x1); zero-width for vertical geodesics
  double m, r;      // circle center on the real axis and radius
  bool vertical;
};

inline Edge make_edge(cd p, cd q) {
  Edge e;
  double xp = p.real(), xq = q.real();
  e.x0 = std::min(xp, xq);
  e.x1 = std::max(xp, xq);
  if (std::abs(xp - xq) < 1e-13 * (1.0 + std::abs(xp))) {
    e.vertical = true;
    e.m = xp;
    e.r = 0.0;
    return e;
  }
  e.vertical = false;
  e.m = (std::norm(p) - std::norm(q)) / (2.0 * (xp - xq));
  e.r = std::abs(p - cd(e.m, 0.0));
  return e;
}

inline double edge_y(const Edge& e, double x) {
  double t = e.r * e.r - (x - e.m) * (x - e.m);
  return std::sqrt(std::max(t, 0.0));
}

// |area| of the geodesic triangle by scanline quadrature of dx dy / y^2 in
// the half-plane: at fixed x the y-integral is exact, the x-integral uses a
// composite midpoint rule on the smooth pieces between vertex abscissae.
inline double area_quadrature(HPoint va, HPoint vb, HPoint vc) {
  cd p = to_model(va, Model::HalfPlane).z;
  cd q = to_model(vb, Model::HalfPlane).z;
  cd r = to_model(vc, Model::HalfPlane).z;
  Edge edges[3] = {make_edge(p, q), make_edge(q, r), make_edge(r, p)};
  std::vector<double> cuts = {p.real(), q.real(), r.real()};
  std::sort(cuts.begin(), cuts.end());

  double total = 0.0;
  for (int seg = 0; seg < 2; ++seg) {
    double xa = cuts[seg], xb = cuts[seg + 1];
    if (xb - xa < 1e-14) continue;
    const int n = 60000;
    double h = (xb - xa) / n;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      double x = xa + (k + 0.5) * h;
      double ys[2];
      int found = 0;
      for (const Edge& e : edges) {
        if (e.vertical) continue;
        if (x > e.x0 && x < e.x1 && found < 2) ys[found++] = edge_y(e, x);
      }
      if (found == 2) {
        double ylo = std::min(ys[0], ys[1]);
        double yhi = std::max(ys[0], ys[1]);
        if (ylo > 0.0) acc += (1.0 / ylo - 1.0 / yhi);
      }
    }
    total += acc * h;
  }
  return total;
}

// Line integral of dx/y from w to z along the geodesic (exact circle-arc
// parametrization: the integrand reduces to -dt).  Building block for the
// signed-area and transport oracles.
inline double dx_over_y(cd w, cd z) {
  if (std::abs(w.real() - z.real()) < 1e-13 * (1.0 + std::abs(w.real()))) {
    return 0.0;  // vertical geodesic
  }
  Edge e = make_edge(w, z);
  double tw = std::atan2(w.imag(), w.real() - e.m);
  double tz = std::atan2(z.imag(), z.real() - e.m);
  return -(tz - tw);
}

// Signed area via Stokes: area(T) = boundary integral of dx/y traversed
// v -> w -> z -> v (counterclockwise positive).
inline double signed_area_stokes(HPoint va, HPoint vb, HPoint vc) {
  cd v = to_model(va, Model::HalfPlane).z;
  cd w = to_model(vb, Model::HalfPlane).z;
  cd z = to_model(vc, Model::HalfPlane).z;
  return dx_over_y(v, w) + dx_over_y(w, z) + dx_over_y(z, v);
}

// Transport phase from the gauge integral exp(i theta int_w^z (-dx/y)).
inline cd transport_integral(double theta, HPoint za, HPoint wa) {
  cd z = to_model(za, Model::HalfPlane).z;
  cd w = to_model(wa, Model::HalfPlane).z;
  return std::polar(1.0, -theta * dx_over_y(w, z));
}

}  // namespace oracles
