#include "hyphall/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace hyphall {

namespace {

constexpr double kBoundaryTol = 1e-14;
constexpr double kDetTol = 1e-12;
constexpr double kBranchTol = 1e-12;

const cd kI{0.0, 1.0};

}  // namespace

cd cayley_to_disk(cd zeta) { return (zeta - kI) / (zeta + kI); }

cd cayley_to_halfplane(cd z) { return kI * (1.0 + z) / (1.0 - z); }

HPoint to_model(const HPoint& p, Model m) {
  if (p.model == m) return p;
  if (m == Model::Disk) return {cayley_to_disk(p.z), Model::Disk};
  return {cayley_to_halfplane(p.z), Model::HalfPlane};
}

bool is_interior(const HPoint& p) {
  if (p.model == Model::HalfPlane) return p.z.imag() > kBoundaryTol;
  return std::abs(p.z) < 1.0 - kBoundaryTol;
}

Isometry::Isometry(double a, double b, double c, double d) : m_{{a, b, c, d}} {
  if (std::abs(det() - 1.0) > kDetTol) {
    throw Error(ErrorKind::InvalidIsometry,
                "isometry determinant deviates from 1 by more than 1e-12");
  }
}

Isometry Isometry::compose(const Isometry& rhs) const {
  Isometry out;
  out.m_[0] = m_[0] * rhs.m_[0] + m_[1] * rhs.m_[2];
  out.m_[1] = m_[0] * rhs.m_[1] + m_[1] * rhs.m_[3];
  out.m_[2] = m_[2] * rhs.m_[0] + m_[3] * rhs.m_[2];
  out.m_[3] = m_[2] * rhs.m_[1] + m_[3] * rhs.m_[3];
  if (std::abs(out.det() - 1.0) > 1e-13) out.renormalize();
  return out;
}

Isometry Isometry::inverse() const {
  Isometry out;
  out.m_ = {m_[3], -m_[1], -m_[2], m_[0]};
  return out;
}

void Isometry::renormalize() {
  double s = std::sqrt(std::abs(det()));
  if (s <= 0.0 || !std::isfinite(s)) {
    throw Error(ErrorKind::InvalidIsometry, "isometry determinant collapsed");
  }
  for (double& x : m_) x /= s;
  if (det() < 0.0) {
    throw Error(ErrorKind::InvalidIsometry, "orientation-reversing matrix");
  }
}

HPoint Isometry::apply(const HPoint& p) const {
  HPoint hp = to_model(p, Model::HalfPlane);
  cd num = m_[0] * hp.z + m_[1];
  cd den = m_[2] * hp.z + m_[3];
  HPoint out{num / den, Model::HalfPlane};
  return to_model(out, p.model);
}

double Isometry::projective_distance(const Isometry& rhs) const {
  double dplus = 0.0, dminus = 0.0;
  for (int k = 0; k < 4; ++k) {
    double dp = m_[k] - rhs.m_[k];
    double dm = m_[k] + rhs.m_[k];
    dplus += dp * dp;
    dminus += dm * dm;
  }
  return std::sqrt(std::min(dplus, dminus));
}

double hyp_distance(const HPoint& p, const HPoint& q) {
  if (!is_interior(p) || !is_interior(q)) {
    throw Error(ErrorKind::NumericalDegeneracy,
                "distance requested for a point too close to the boundary");
  }
  // sinh(d/2) forms: stable for both tiny and large separations.
  if (p.model == Model::Disk || q.model == Model::Disk) {
    HPoint a = to_model(p, Model::Disk), b = to_model(q, Model::Disk);
    double na = 1.0 - std::norm(a.z), nb = 1.0 - std::norm(b.z);
    double s = std::abs(a.z - b.z) / std::sqrt(na * nb);
    return 2.0 * std::asinh(s);
  }
  double s = std::abs(p.z - q.z) /
             (2.0 * std::sqrt(p.z.imag() * q.z.imag()));
  return 2.0 * std::asinh(s);
}

namespace {

// Signed interior angle at vertex p of the geodesic triangle p -> q -> r,
// measured in the disk chart by centering p (geodesics through the origin
// are diameters, so initial tangents point at the centered images).  The
// value is the rotation from the outgoing side p->q to the closing side
// p->r; its sign is the winding of the triangle, shared by all vertices.
double signed_corner(cd p, cd q, cd r) {
  cd wq = (q - p) / (1.0 - std::conj(p) * q);
  cd wr = (r - p) / (1.0 - std::conj(p) * r);
  return std::arg(wr * std::conj(wq));
}

}  // namespace

double signed_triangle_area(const HPoint& v, const HPoint& w, const HPoint& z) {
  cd a = to_model(v, Model::Disk).z;
  cd b = to_model(w, Model::Disk).z;
  cd c = to_model(z, Model::Disk).z;
  // Coincident vertices: zero area by definition (cocycle degeneracies).
  if (a == b || b == c || a == c) return 0.0;
  double sa = signed_corner(a, b, c);
  double sb = signed_corner(b, c, a);
  double sc = signed_corner(c, a, b);
  double defect = M_PI - std::abs(sa) - std::abs(sb) - std::abs(sc);
  if (defect < 0.0) defect = 0.0;  // rounding on thin triangles
  // Winding from the numerically safest corner (largest magnitude).  Note
  // the Euclidean orientation of the vertex triple is NOT reliable here: a
  // strongly bulging geodesic side can wind opposite to the straight chords.
  double s = sa;
  if (std::abs(sb) > std::abs(s)) s = sb;
  if (std::abs(sc) > std::abs(s)) s = sc;
  double sign = (s > 0.0) ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
  return sign * defect;
}

TransportPhase parallel_transport(double theta, const HPoint& z, const HPoint& w) {
  HPoint hz = to_model(z, Model::HalfPlane);
  HPoint hw = to_model(w, Model::HalfPlane);
  if (!is_interior(hz) || !is_interior(hw)) {
    throw Error(ErrorKind::NumericalDegeneracy,
                "transport endpoint too close to the boundary");
  }
  // (z - conj(w)) and (w - conj(z)) both lie in H, so the quotient's
  // argument stays inside (-pi, pi); the cut is only reachable by rounding.
  cd q = (hz.z - std::conj(hw.z)) / (hw.z - std::conj(hz.z));
  double arg = std::arg(q);
  TransportPhase out;
  out.branch_ambiguous = (M_PI - std::abs(arg)) < kBranchTol;
  out.value = std::polar(1.0, theta * arg);
  return out;
}

cd holonomy(double theta, const HPoint& v, const HPoint& w, const HPoint& z) {
  return std::polar(1.0, theta * signed_triangle_area(v, w, z));
}

LandauSpectrum landau_levels(double theta) {
  if (theta <= 0.0) {
    throw Error(ErrorKind::Config, "landau_levels requires theta > 0");
  }
  LandauSpectrum out;
  out.continuum_edge = 0.25 + theta * theta;
  for (int k = 0; static_cast<double>(k) < theta - 0.5; ++k) {
    out.levels.push_back((2.0 * k + 1.0) * theta - static_cast<double>(k) * (k + 1.0));
  }
  return out;
}

}  // namespace hyphall
