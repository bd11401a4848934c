#include "hyphall/magnetic.hpp"

#include <cmath>

namespace hyphall {

namespace {

cd disk_coords(const HPoint& p) { return to_model(p, Model::Disk).z; }

HPoint disk_point(cd z) { return HPoint{z, Model::Disk}; }

}  // namespace

MagneticData::MagneticData(const SurfaceGroup& group, double theta)
    : MagneticData(group, theta, group.base_point()) {}

MagneticData::MagneticData(const SurfaceGroup& group, double theta,
                           const HPoint& u)
    : group_(&group), theta_(theta), u_(u), u_disk_(disk_coords(u)) {
  if (!is_interior(u)) {
    throw Error(ErrorKind::Config, "magnetic base point must be interior");
  }
}

cd MagneticData::translated_base(const Word& canonical) const {
  if (canonical.empty()) return u_disk_;
  return disk_coords(group_->evaluate(canonical).apply(u_));
}

double MagneticData::area_cocycle(const Word& g1, const Word& g2) const {
  // Signed area of (u, g1.u, g1 g2.u), computed as (g1^-1.u, u, g2.u).
  // Reducing both arguments first makes coincident vertices bitwise equal,
  // so the degenerate cases return exactly zero.
  Word r1 = group_->reduce(word_inverse(g1));
  Word r2 = group_->reduce(g2);
  cd v1 = translated_base(r1);
  cd v2 = translated_base(r2);
  return signed_triangle_area(disk_point(v1), disk_point(u_disk_),
                              disk_point(v2));
}

std::complex<double> MagneticData::multiplier(const Word& g1,
                                              const Word& g2) const {
  return std::polar(1.0, theta_ * area_cocycle(g1, g2));
}

CocycleTable::CocycleTable(const Ball& ball, const MagneticData& data)
    : ball_(&ball), theta_(data.theta()) {
  u_disk_ = disk_coords(data.base_point());
  const int n = ball.size();
  vertex_.resize(n);
  bool centered = (u_disk_ == cd(0.0, 0.0));
  vertex_[0] = u_disk_;
  for (int i = 1; i < n; ++i) {
    vertex_[i] = centered ? ball.orbit_disk(i)
                          : disk_coords(ball.matrix(i).apply(data.base_point()));
  }
}

double CocycleTable::area(int i, int j) const {
  int ii = ball_->inverse_index(i);
  return signed_triangle_area(disk_point(vertex_[ii]), disk_point(u_disk_),
                              disk_point(vertex_[j]));
}

std::complex<double> CocycleTable::sigma(int i, int j) const {
  return std::polar(1.0, theta_ * area(i, j));
}

}  // namespace hyphall
