#pragma once

#include <complex>
#include <vector>

#include "geometry.hpp"
#include "surface_group.hpp"

namespace hyphall {

// Magnetic twist data: a flux density theta and a base point u determine the
// area 2-cocycle c(g1, g2) = signed area of the geodesic triangle
// (u, g1.u, g1 g2.u) and the unit-modulus multiplier sigma = exp(i theta c).
//
// Areas are evaluated in the g1^-1-translated frame, i.e. as the signed area
// of (g1^-1.u, u, g2.u): the same number by isometry invariance, but the
// vertices stay within one word length of the base point, which keeps the
// corner angles well conditioned.  Degenerate argument patterns (either
// argument trivial, or g2 = g1^-1) produce bitwise-equal vertices and hence
// exact zeros.
class MagneticData {
 public:
  MagneticData(const SurfaceGroup& group, double theta);
  MagneticData(const SurfaceGroup& group, double theta, const HPoint& u);

  const SurfaceGroup& group() const { return *group_; }
  double theta() const { return theta_; }
  const HPoint& base_point() const { return u_; }

  // Arguments are arbitrary words; they are reduced internally.
  double area_cocycle(const Word& g1, const Word& g2) const;
  std::complex<double> multiplier(const Word& g1, const Word& g2) const;

 private:
  std::complex<double> translated_base(const Word& canonical) const;

  const SurfaceGroup* group_;
  double theta_;
  HPoint u_;
  std::complex<double> u_disk_;
};

// Index-addressed cocycle evaluation over a Ball.  The translated base point
// gamma_i.u is cached once per element, so each (i, j) pair costs a single
// corner-angle computation; inverse pairs reuse the same cached vertex and
// give exact zeros.
class CocycleTable {
 public:
  CocycleTable(const Ball& ball, const MagneticData& data);

  const Ball& ball() const { return *ball_; }
  double theta() const { return theta_; }

  double area(int i, int j) const;
  std::complex<double> sigma(int i, int j) const;

 private:
  const Ball* ball_;
  double theta_;
  std::complex<double> u_disk_;
  std::vector<std::complex<double>> vertex_;  // gamma_i . u in the disk
};

}  // namespace hyphall
