#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>

#include "hyphall/hamiltonian.hpp"

using namespace hyphall;

TEST_CASE("zero flux ball-1 spectrum is the star graph") {
  SurfaceGroup g(2);
  Ball ball(g, 1);
  MagneticData data(g, 0.0);
  TruncatedSpace space(ball, data, 0);
  SpectralData sd = eigensolve(build_harper(space));
  REQUIRE(sd.eigenvalues.size() == 9);
  double s8 = std::sqrt(8.0);
  CHECK(std::abs(sd.eigenvalues(0) + s8) < 1e-12);
  CHECK(std::abs(sd.eigenvalues(8) - s8) < 1e-12);
  for (int i = 1; i < 8; ++i) CHECK(std::abs(sd.eigenvalues(i)) < 1e-12);
}

TEST_CASE("harper matrix structure") {
  SurfaceGroup g(2);
  Ball ball(g, 3);
  MagneticData data(g, 0.73);
  TruncatedSpace space(ball, data, 1);
  TruncatedOperator h = build_harper(space);
  REQUIRE(h.is_sparse);
  DenseMatrix m = h.to_dense();
  CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  int letters = g.alphabet_size();
  for (int t = 0; t < space.dimension(); ++t) {
    int nnz = 0;
    for (int r = 0; r < space.dimension(); ++r) {
      double a = std::abs(m(r, t));
      if (a == 0.0) continue;
      CHECK(std::abs(a - 1.0) < 1e-14);  // unit-modulus hops
      ++nnz;
    }
    CHECK(nnz <= letters);
    if (space.interior(t)) CHECK(nnz == letters);
  }
}

TEST_CASE("zero flux spectrum is symmetric by bipartiteness") {
  SurfaceGroup g(2);
  Ball ball(g, 2);
  MagneticData data(g, 0.0);
  TruncatedSpace space(ball, data, 0);
  SpectralData sd = eigensolve(build_harper(space));
  int n = static_cast<int>(sd.eigenvalues.size());
  for (int i = 0; i < n; ++i) {
    CHECK(std::abs(sd.eigenvalues(i) + sd.eigenvalues(n - 1 - i)) < 1e-10);
  }
}

TEST_CASE("radius zero ball reduces to the on-site potential") {
  SurfaceGroup g(2);
  Ball ball(g, 0);
  MagneticData data(g, 0.4);
  TruncatedSpace space(ball, data, 0);
  TruncatedOperator h = build_harper(space);
  CHECK(h.to_dense().cwiseAbs().maxCoeff() == 0.0);
  DisorderModel dm = DisorderModel::iid(0.8, 7);
  TruncatedOperator hd = apply_disorder(h, dm);
  SpectralData sd = eigensolve(hd);
  REQUIRE(sd.eigenvalues.size() == 1);
  CHECK(std::abs(sd.eigenvalues(0) - dm.value(g, Word{})) < 1e-14);
}

TEST_CASE("disorder models behave") {
  SurfaceGroup g(2);
  Ball ball(g, 2);
  MagneticData data(g, 0.37);
  TruncatedSpace space(ball, data, 0);
  TruncatedOperator h = build_harper(space);

  // none and zero strength leave the matrix untouched
  TruncatedOperator h0 = apply_disorder(h, DisorderModel::none());
  CHECK((h0.to_dense() - h.to_dense()).cwiseAbs().maxCoeff() == 0.0);
  TruncatedOperator hz = apply_disorder(h, DisorderModel::iid(0.0, 5));
  CHECK((hz.to_dense() - h.to_dense()).cwiseAbs().maxCoeff() == 0.0);

  // reproducible from the seed; different seeds differ; range respected
  DisorderModel d1 = DisorderModel::iid(0.6, 42);
  DisorderModel d2 = DisorderModel::iid(0.6, 42);
  DisorderModel d3 = DisorderModel::iid(0.6, 43);
  DenseMatrix m1 = apply_disorder(h, d1).to_dense();
  DenseMatrix m2 = apply_disorder(h, d2).to_dense();
  DenseMatrix m3 = apply_disorder(h, d3).to_dense();
  CHECK((m1 - m2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((m1 - m3).diagonal().cwiseAbs().maxCoeff() > 1e-3);
  double vmax = 0.0;
  for (int i = 0; i < space.dimension(); ++i) {
    double v = d1.value(g, ball.word(i));
    CHECK(std::abs(v) <= 0.6);
    vmax = std::max(vmax, std::abs(v));
    CHECK(v == d1.value(g, ball.word(i)));  // pure function of the site
  }
  CHECK(vmax > 0.3);  // spread over the range

  // almost-periodic values follow the torus formula
  std::vector<double> alpha{0.31, 0.17, 0.57, 0.41};
  DisorderModel ap = DisorderModel::almost_periodic(0.9, alpha);
  for (int i = 0; i < space.dimension(); ++i) {
    std::vector<int> ab = g.abelianization(ball.word(i));
    double phase = 0.0;
    for (size_t j = 0; j < ab.size(); ++j) phase += alpha[j] * ab[j];
    CHECK(std::abs(ap.value(g, ball.word(i)) -
                   0.9 * std::cos(2.0 * M_PI * phase)) < 1e-14);
  }
  DisorderModel bad = DisorderModel::almost_periodic(0.9, {0.1, 0.2});
  CHECK_THROWS_AS(apply_disorder(h, bad), Error);
}

TEST_CASE("dense eigensolve invariants") {
  SurfaceGroup g(2);
  Ball ball(g, 2);
  MagneticData data(g, 0.81);
  TruncatedSpace space(ball, data, 1);
  TruncatedOperator h =
      apply_disorder(build_harper(space), DisorderModel::iid(0.5, 11));
  SpectralData sd = eigensolve(h);
  DenseMatrix m = h.to_dense();
  // trace identity
  Complex tr = m.trace();
  CHECK(std::abs(sd.eigenvalues.sum() - tr.real()) < 1e-8);
  CHECK(std::abs(tr.imag()) < 1e-12);
  // residuals
  for (int i = 0; i < sd.eigenvalues.size(); i += 7) {
    double res =
        (m * sd.eigenvectors.col(i) - sd.eigenvalues(i) * sd.eigenvectors.col(i))
            .norm();
    CHECK(res < 1e-10);
  }
  // interior weights in [0, 1] summing to the interior dimension
  CHECK(sd.interior_weight.minCoeff() > -1e-15);
  CHECK(sd.interior_weight.maxCoeff() < 1.0 + 1e-12);
  CHECK(std::abs(sd.interior_weight.sum() - space.interior_dimension()) < 1e-9);
}

TEST_CASE("ids and dos") {
  SurfaceGroup g(2);
  Ball ball(g, 2);
  MagneticData data(g, 0.63);
  TruncatedSpace space(ball, data, 1);
  SpectralData sd = eigensolve(build_harper(space));
  double lo = sd.eigenvalues(0), hi = sd.eigenvalues(sd.eigenvalues.size() - 1);
  CHECK(ids(sd, lo - 0.1) == 0.0);
  CHECK(std::abs(ids(sd, hi + 0.1) - 1.0) < 1e-12);
  double prev = -1.0;
  for (int k = 0; k <= 200; ++k) {
    double e = lo - 0.2 + (hi - lo + 0.4) * k / 200.0;
    double v = ids(sd, e);
    CHECK(v >= prev - 1e-15);
    prev = v;
  }
  Histogram hist = dos(sd, 40);
  REQUIRE(hist.edges.size() == 41);
  int total = 0;
  double mass = 0.0;
  for (int b = 0; b < 40; ++b) {
    total += hist.counts[b];
    mass += hist.density[b] * (hist.edges[b + 1] - hist.edges[b]);
  }
  CHECK(total == space.dimension());
  CHECK(std::abs(mass - 1.0) < 1e-9);
  CHECK_THROWS_AS(dos(sd, 0), Error);
}

TEST_CASE("gap detection raw and weighted") {
  SurfaceGroup g(2);
  Ball ball(g, 2);
  MagneticData data(g, 0.63);
  TruncatedSpace space(ball, data, 1);
  SpectralData sd = eigensolve(build_harper(space));
  auto gaps = find_gaps(sd, 0.05);
  for (const auto& gap : gaps) {
    CHECK(gap.width() > 0.05);
    // no eigenvalue strictly inside
    for (int i = 0; i < sd.eigenvalues.size(); ++i) {
      bool inside = sd.eigenvalues(i) > gap.lower + 1e-14 &&
                    sd.eigenvalues(i) < gap.upper - 1e-14;
      CHECK(!inside);
    }
    CHECK(std::abs(gap.midpoint() - 0.5 * (gap.lower + gap.upper)) < 1e-15);
  }
  // weighted gaps are at least as wide as raw gaps at the same threshold
  auto wgaps = find_gaps_weighted(sd, 0.05, 1e-3);
  CHECK(wgaps.size() >= gaps.size());
  for (const auto& gap : wgaps) CHECK(gap.width() > 0.05);
}

TEST_CASE("spectral projections") {
  SurfaceGroup g(2);
  Ball ball(g, 2);
  MagneticData data(g, 0.8);
  TruncatedSpace space(ball, data, 1);
  SpectralData sd = eigensolve(build_harper(space));
  const int n = space.dimension();

  // pick the widest raw gap for a well-conditioned projection
  auto gaps = find_gaps(sd, 1e-3);
  REQUIRE(!gaps.empty());
  auto widest = *std::max_element(
      gaps.begin(), gaps.end(),
      [](const GapInterval& a, const GapInterval& b) { return a.width() < b.width(); });
  SpectralProjection p = spectral_projection(sd, widest.midpoint(), 1e-3);
  CHECK(p.well_conditioned);
  CHECK(p.idempotency < 1e-9);
  DenseMatrix pm = p.op.to_dense();
  CHECK((pm - pm.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(pm.trace().real() - p.rank) < 1e-9);
  int count = 0;
  while (count < n && sd.eigenvalues(count) <= widest.midpoint()) ++count;
  CHECK(p.rank == count);
  CHECK(p.kernel.support_size() > 0);
  CHECK(p.support_radius <= space.radius());

  // trivial ends
  SpectralProjection pz = spectral_projection(sd, sd.eigenvalues(0) - 1.0);
  CHECK(pz.rank == 0);
  CHECK(pz.op.to_dense().cwiseAbs().maxCoeff() == 0.0);
  CHECK(pz.kernel.support_size() == 0);
  SpectralProjection pi = spectral_projection(sd, sd.eigenvalues(n - 1) + 1.0);
  CHECK(pi.rank == n);
  CHECK((pi.op.to_dense() - DenseMatrix::Identity(n, n)).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK(std::abs(pi.kernel.at(Word{}) - Complex(1.0, 0.0)) < 1e-12);
  CHECK(pi.kernel.support_size() == 1);

  // E on top of an eigenvalue is flagged
  SpectralProjection bad = spectral_projection(sd, sd.eigenvalues(3), 1e-3);
  CHECK(!bad.well_conditioned);
  CHECK(bad.eigenvalue_distance < 1e-12);
}

TEST_CASE("spectra are base point independent") {
  SurfaceGroup g(2);
  Ball ball(g, 2);
  double theta = 0.5;
  MagneticData d0(g, theta);
  MagneticData d1(g, theta, HPoint{cd(0.3, 0.1), Model::Disk});
  MagneticData d2(g, theta, HPoint{cd(-0.15, 0.22), Model::Disk});
  TruncatedSpace s0(ball, d0, 1), s1(ball, d1, 1), s2(ball, d2, 1);
  SpectralData e0 = eigensolve(build_harper(s0));
  SpectralData e1 = eigensolve(build_harper(s1));
  SpectralData e2 = eigensolve(build_harper(s2));
  CHECK((e0.eigenvalues - e1.eigenvalues).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((e0.eigenvalues - e2.eigenvalues).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("perturbation bounds hold for disorder and flux steps") {
  SurfaceGroup g(2);
  Ball ball(g, 2);
  MagneticData data(g, 0.55);
  TruncatedSpace space(ball, data, 1);
  TruncatedOperator h = build_harper(space);
  SpectralData base = eigensolve(h);

  double w = 0.3;
  SpectralData pert = eigensolve(apply_disorder(h, DisorderModel::iid(w, 3)));
  CHECK((base.eigenvalues - pert.eigenvalues).cwiseAbs().maxCoeff() < w + 1e-10);

  // flux continuity: hop phases move by at most theta-step times pi
  double step = 0.01;
  MagneticData data2(g, 0.55 + step);
  TruncatedSpace space2(ball, data2, 1);
  SpectralData moved = eigensolve(build_harper(space2));
  double bound = g.alphabet_size() * step * M_PI;
  CHECK((base.eigenvalues - moved.eigenvalues).cwiseAbs().maxCoeff() < bound);
}

TEST_CASE("windowed eigensolver matches the dense decomposition") {
  SurfaceGroup g(2);
  Ball ball(g, 2);
  MagneticData data(g, 0.47);
  TruncatedSpace space(ball, data, 1);
  TruncatedOperator h =
      apply_disorder(build_harper(space), DisorderModel::iid(0.4, 9));
  SpectralData dense = eigensolve(h);
  int n = static_cast<int>(dense.eigenvalues.size());
  double lo = dense.eigenvalues(n / 3) - 1e-6;
  double hi = dense.eigenvalues(n / 2) + 1e-6;
  WindowedEigen win = eigensolve_window(h, lo, hi, 700, 48, 1, 1e-8);
  CHECK(win.max_residual < 1e-8);
  std::vector<double> expect;
  for (int i = 0; i < n; ++i) {
    if (dense.eigenvalues(i) >= lo && dense.eigenvalues(i) <= hi) {
      expect.push_back(dense.eigenvalues(i));
    }
  }
  REQUIRE(win.eigenvalues.size() == static_cast<int>(expect.size()));
  for (size_t i = 0; i < expect.size(); ++i) {
    CHECK(std::abs(win.eigenvalues(i) - expect[i]) < 1e-8);
  }
}

TEST_CASE("chebyshev step filter approximates the projection") {
  SurfaceGroup g(2);
  Ball ball(g, 2);
  MagneticData data(g, 0.8);
  TruncatedSpace space(ball, data, 1);
  TruncatedOperator h = build_harper(space);
  SpectralData sd = eigensolve(h);
  auto gaps = find_gaps(sd, 0.2);
  REQUIRE(!gaps.empty());
  double e = gaps.front().midpoint();
  double lo, hi;
  spectral_bounds(h.sparse, lo, hi);
  ChebyshevFilter f = make_step_filter(e, lo, hi, 800);
  // filter applied to identity columns reproduces dense projection columns
  SpectralProjection p = spectral_projection(sd, e);
  int n = space.dimension();
  DenseMatrix probe = DenseMatrix::Identity(n, 4);
  DenseMatrix cols = apply_filter(h.sparse, f, probe);
  double worst = (cols - p.op.to_dense().leftCols(4)).cwiseAbs().maxCoeff();
  CHECK(worst < 5e-3);  // Jackson-damped step at this degree and gap width
}
