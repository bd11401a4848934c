#pragma once

// Hyperbolic plane primitives: upper half-plane H = {Im z > 0} with metric
// (dx^2+dy^2)/y^2 (curvature -1), Poincare disk D as a second chart, Moebius
// action of SL(2,R), geodesic triangle areas, and the magnetic parallel
// transport tau along geodesics for the gauge potential proportional to dx/y.

#include <array>
#include <complex>
#include <vector>

#include "hyphall/errors.hpp"

namespace hyphall {

using cd = std::complex<double>;

enum class Model { HalfPlane, Disk };

struct HPoint {
  cd z{0.0, 1.0};
  Model model{Model::HalfPlane};
};

// z = (zeta - i)/(zeta + i) maps H onto D; i -> 0.
cd cayley_to_disk(cd zeta);
cd cayley_to_halfplane(cd z);

HPoint to_model(const HPoint& p, Model m);

// Interior checks; points within 1e-14 of the boundary are rejected by the
// metric routines as numerically degenerate.
bool is_interior(const HPoint& p);

// Element of SL(2,R) acting on H by z -> (az+b)/(cz+d); acts on D through the
// Cayley transform.  Stored un-projectivized: M and -M act identically.
class Isometry {
 public:
  Isometry() : m_{{1.0, 0.0, 0.0, 1.0}} {}
  Isometry(double a, double b, double c, double d);

  static Isometry identity() { return Isometry(); }

  double a() const { return m_[0]; }
  double b() const { return m_[1]; }
  double c() const { return m_[2]; }
  double d() const { return m_[3]; }

  double det() const { return m_[0] * m_[3] - m_[1] * m_[2]; }

  Isometry compose(const Isometry& rhs) const;  // this * rhs
  Isometry inverse() const;

  HPoint apply(const HPoint& p) const;

  // Frobenius distance min(|M-N|, |M+N|): projective equality measure.
  double projective_distance(const Isometry& rhs) const;

  // Rescales so det == 1 exactly (guards drift in long products).
  void renormalize();

 private:
  std::array<double, 4> m_;  // row major {a,b,c,d}
};

// Geodesic distance; arguments may be in either model.
double hyp_distance(const HPoint& p, const HPoint& q);

// Signed area of the geodesic triangle (v,w,z) via the angle defect
// pi - (alpha+beta+gamma); the sign is the winding of the boundary path
// v->w->z->v, read off the signed corner angles between geodesic tangents
// (the Euclidean orientation of the vertex triple can disagree when a side
// bulges across the opposite vertex).  Degenerate triangles give exactly 0.
double signed_triangle_area(const HPoint& v, const HPoint& w, const HPoint& z);

struct TransportPhase {
  cd value{1.0, 0.0};
  bool branch_ambiguous = false;  // argument landed within 1e-12 of +-pi
};

// Parallel transport of the magnetic line bundle along the geodesic from w
// to z: tau(z,w) = exp(i*theta*Arg[(z - conj(w))/(w - conj(z))]), principal
// branch.  Unit modulus by construction.
TransportPhase parallel_transport(double theta, const HPoint& z, const HPoint& w);

// Holonomy around the geodesic triangle (v,w,z):
// exp(i*theta*signed_triangle_area(v,w,z)).  Equals the transport product
// tau(v,z)^{-1} tau(v,w) tau(w,z).
cd holonomy(double theta, const HPoint& v, const HPoint& w, const HPoint& z);

struct LandauSpectrum {
  std::vector<double> levels;  // (2k+1)theta - k(k+1) for k < theta - 1/2
  double continuum_edge;       // 1/4 + theta^2
};

// Discrete Landau levels of the continuum hyperbolic Landau Hamiltonian at
// flux parameter theta > 0.
LandauSpectrum landau_levels(double theta);

}  // namespace hyphall
