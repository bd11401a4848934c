#include "hyphall/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hyphall {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based site value: mixes the seed with the canonical word bytes,
// so the draw is independent of enumeration order and ball radius.
double site_uniform(std::uint64_t seed, const Word& w) {
  std::uint64_t h = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
  for (std::uint8_t b : w) h = splitmix64(h ^ (static_cast<std::uint64_t>(b) + 1));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(w.size()) << 32));
  return static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
}

SparseMatrix diagonal_sparse(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (v(i) != 0.0) trips.emplace_back(i, i, Complex(v(i), 0.0));
  }
  SparseMatrix d(n, n);
  d.setFromTriplets(trips.begin(), trips.end());
  return d;
}

double sparse_hermiticity_residual(const SparseMatrix& m) {
  SparseMatrix diff = m - SparseMatrix(m.adjoint());
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) {
      worst = std::max(worst, std::abs(it.value()));
    }
  }
  return worst;
}

// Jackson damping factors for a degree-N expansion.
std::vector<double> jackson_factors(int degree) {
  std::vector<double> g(degree + 1);
  const double q = M_PI / (degree + 1);
  for (int k = 0; k <= degree; ++k) {
    g[k] = ((degree - k + 1) * std::cos(q * k) +
            std::sin(q * k) / std::tan(q)) /
           (degree + 1);
  }
  return g;
}

// chi_[e1, e2] expanded over the spectral interval [lo, hi].
ChebyshevFilter make_band_filter(double e1, double e2, double lo, double hi,
                                 int degree) {
  ChebyshevFilter f;
  f.center = 0.5 * (hi + lo);
  f.half = 0.5 * (hi - lo);
  auto clamp01 = [](double x) { return std::clamp(x, -1.0, 1.0); };
  double ta = std::acos(clamp01((e1 - f.center) / f.half));  // larger angle
  double tb = std::acos(clamp01((e2 - f.center) / f.half));
  std::vector<double> damp = jackson_factors(degree);
  f.coeff.resize(degree + 1);
  f.coeff[0] = (ta - tb) / M_PI * damp[0];
  for (int k = 1; k <= degree; ++k) {
    f.coeff[k] = 2.0 / (M_PI * k) * (std::sin(k * ta) - std::sin(k * tb)) *
                 damp[k];
  }
  return f;
}

void truncate_shells(EquivariantKernel& k, int max_radius) {
  EquivariantKernel kept;
  for (const auto& [w, v] : k.terms()) {
    if (static_cast<int>(w.size()) <= max_radius) kept.add(w, v);
  }
  k = std::move(kept);
}

}  // namespace

DisorderModel DisorderModel::none() { return DisorderModel{}; }

DisorderModel DisorderModel::iid(double w, std::uint64_t seed) {
  DisorderModel m;
  m.kind = Kind::IidUniform;
  m.strength = w;
  m.seed = seed;
  return m;
}

DisorderModel DisorderModel::almost_periodic(double lambda,
                                             std::vector<double> alpha) {
  DisorderModel m;
  m.kind = Kind::AlmostPeriodic;
  m.strength = lambda;
  m.alpha = std::move(alpha);
  return m;
}

double DisorderModel::value(const SurfaceGroup& group, const Word& site) const {
  switch (kind) {
    case Kind::None:
      return 0.0;
    case Kind::IidUniform:
      return strength * (2.0 * site_uniform(seed, site) - 1.0);
    case Kind::AlmostPeriodic: {
      std::vector<int> ab = group.abelianization(site);
      if (alpha.size() != ab.size()) {
        throw Error(ErrorKind::Config,
                    "almost-periodic frequency vector must have length 2g");
      }
      double phase = 0.0;
      for (size_t j = 0; j < ab.size(); ++j) phase += alpha[j] * ab[j];
      return strength * std::cos(2.0 * M_PI * phase);
    }
  }
  return 0.0;
}

TruncatedOperator build_harper(const TruncatedSpace& space) {
  const Ball& ball = space.ball();
  const int n = space.dimension();
  const int letters = ball.group().alphabet_size();
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(static_cast<size_t>(n) * letters);
  for (int t = 0; t < n; ++t) {
    for (int l = 0; l < letters; ++l) {
      int r = ball.left_step(l, t);
      if (r < 0) continue;
      trips.emplace_back(r, t, space.cocycle().sigma(l + 1, t));
    }
  }
  TruncatedOperator op;
  op.space = &space;
  op.is_sparse = true;
  op.sparse.resize(n, n);
  op.sparse.setFromTriplets(trips.begin(), trips.end());
  op.sparse.makeCompressed();
  double herm = sparse_hermiticity_residual(op.sparse);
  if (herm > 1e-10) {
    throw Error(ErrorKind::InternalConsistency,
                "hopping matrix lost Hermiticity");
  }
  return op;
}

TruncatedOperator apply_disorder(const TruncatedOperator& h,
                                 const DisorderModel& model) {
  if (model.kind == DisorderModel::Kind::None) return h;
  const TruncatedSpace& space = *h.space;
  const Ball& ball = space.ball();
  const int n = space.dimension();
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    v(i) = model.value(ball.group(), ball.word(i));
  }
  TruncatedOperator out = h;
  if (out.is_sparse) {
    out.sparse = h.sparse + diagonal_sparse(v);
    out.sparse.makeCompressed();
  } else {
    out.dense.diagonal() += v.cast<Complex>();
  }
  return out;
}

SpectralData eigensolve(const TruncatedOperator& h) {
  const TruncatedSpace& space = *h.space;
  const int n = space.dimension();
  if (n > 4000) {
    throw Error(ErrorKind::Solver,
                "dense eigensolve limited to dimension 4000; use the "
                "windowed path");
  }
  DenseMatrix m = h.to_dense();
  double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10) {
    throw Error(ErrorKind::Solver, "matrix is not Hermitian");
  }
  DenseMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::Solver, "dense eigensolver failed to converge");
  }
  SpectralData sd;
  sd.space = &space;
  sd.eigenvalues = es.eigenvalues();
  sd.eigenvectors = es.eigenvectors();
  sd.hermiticity_residual = herm;
  const int ni = space.interior_dimension();
  sd.interior_weight.resize(n);
  for (int i = 0; i < n; ++i) {
    sd.interior_weight(i) = sd.eigenvectors.col(i).head(ni).squaredNorm();
  }
  return sd;
}

double ids(const SpectralData& sd, double energy) {
  const int n = static_cast<int>(sd.eigenvalues.size());
  const int ni = sd.space->interior_dimension();
  double mass = 0.0;
  for (int i = 0; i < n && sd.eigenvalues(i) <= energy; ++i) {
    mass += sd.interior_weight(i);
  }
  return mass / ni;
}

Histogram dos(const SpectralData& sd, int bins) {
  if (bins < 1) throw Error(ErrorKind::Config, "dos needs at least one bin");
  Histogram h;
  const int n = static_cast<int>(sd.eigenvalues.size());
  const int ni = sd.space->interior_dimension();
  double lo = sd.eigenvalues(0), hi = sd.eigenvalues(n - 1);
  double pad = std::max(1e-12, 1e-9 * (hi - lo));
  lo -= pad;
  hi += pad;
  double width = (hi - lo) / bins;
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) h.edges[b] = lo + b * width;
  h.counts.assign(bins, 0);
  h.density.assign(bins, 0.0);
  for (int i = 0; i < n; ++i) {
    int b = std::min(bins - 1,
                     static_cast<int>((sd.eigenvalues(i) - lo) / width));
    h.counts[b] += 1;
    h.density[b] += sd.interior_weight(i) / (ni * width);
  }
  return h;
}

std::vector<GapInterval> find_gaps(const SpectralData& sd, double gap_min) {
  std::vector<GapInterval> gaps;
  const int n = static_cast<int>(sd.eigenvalues.size());
  for (int i = 0; i + 1 < n; ++i) {
    if (sd.eigenvalues(i + 1) - sd.eigenvalues(i) > gap_min) {
      gaps.push_back({sd.eigenvalues(i), sd.eigenvalues(i + 1)});
    }
  }
  return gaps;
}

std::vector<GapInterval> find_gaps_weighted(const SpectralData& sd,
                                            double gap_min,
                                            double weight_tol) {
  std::vector<GapInterval> gaps;
  const int n = static_cast<int>(sd.eigenvalues.size());
  double prev = 0.0;
  bool have_prev = false;
  for (int i = 0; i < n; ++i) {
    if (sd.interior_weight(i) < weight_tol) continue;  // boundary artifact
    if (have_prev && sd.eigenvalues(i) - prev > gap_min) {
      gaps.push_back({prev, sd.eigenvalues(i)});
    }
    prev = sd.eigenvalues(i);
    have_prev = true;
  }
  return gaps;
}

SpectralProjection spectral_projection(const SpectralData& sd, double energy,
                                       double gap_min, double kernel_tol) {
  const TruncatedSpace& space = *sd.space;
  const int n = space.dimension();
  if (sd.eigenvectors.cols() != n) {
    throw Error(ErrorKind::Solver, "projection needs a full eigenbasis");
  }
  int count = 0;
  while (count < n && sd.eigenvalues(count) <= energy) ++count;

  SpectralProjection out;
  out.rank = count;
  double dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    dist = std::min(dist, std::abs(sd.eigenvalues(i) - energy));
  }
  out.eigenvalue_distance = dist;
  out.well_conditioned = gap_min <= 0.0 || dist >= gap_min / 10.0;

  DenseMatrix p;
  if (count == 0) {
    p = DenseMatrix::Zero(n, n);
  } else {
    auto block = sd.eigenvectors.leftCols(count);
    p = block * block.adjoint();
  }
  out.idempotency = (p * p - p).cwiseAbs().maxCoeff();
  out.op.space = &space;
  out.op.is_sparse = false;
  out.op.dense = std::move(p);

  KernelExtraction ext = kernel_from_operator(out.op);
  out.extraction_residual = ext.residual;
  out.kernel = std::move(ext.kernel);
  std::vector<double> prof = out.kernel.shell_profile();
  int keep = 0;
  for (int r = 0; r < static_cast<int>(prof.size()); ++r) {
    if (prof[r] >= kernel_tol) keep = r;
  }
  out.support_radius = keep;
  truncate_shells(out.kernel, keep);
  return out;
}

void spectral_bounds(const SparseMatrix& h, double& lo, double& hi) {
  const int n = static_cast<int>(h.rows());
  Eigen::VectorXd radius = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < h.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(h, k); it; ++it) {
      if (it.row() == it.col()) {
        diag(it.row()) = it.value().real();
      } else {
        radius(it.row()) += std::abs(it.value());
      }
    }
  }
  lo = (diag - radius).minCoeff();
  hi = (diag + radius).maxCoeff();
  if (lo == hi) {  // single point spectrum; give the interval some width
    lo -= 0.5;
    hi += 0.5;
  }
}

ChebyshevFilter make_step_filter(double energy, double lo, double hi,
                                 int degree) {
  return make_band_filter(lo, energy, lo, hi, degree);
}

DenseMatrix apply_filter(const SparseMatrix& h, const ChebyshevFilter& f,
                         const DenseMatrix& block) {
  const double c = f.center, s = f.half;
  const int degree = static_cast<int>(f.coeff.size()) - 1;
  DenseMatrix t0 = block;
  DenseMatrix acc = f.coeff[0] * t0;
  if (degree == 0) return acc;
  DenseMatrix t1 = (h * t0 - c * t0) / s;
  acc += f.coeff[1] * t1;
  for (int k = 2; k <= degree; ++k) {
    DenseMatrix t2 = 2.0 * ((h * t1 - c * t1) / s) - t0;
    acc += f.coeff[k] * t2;
    t0.swap(t1);
    t1.swap(t2);
  }
  return acc;
}

WindowedEigen eigensolve_window(const TruncatedOperator& h, double lo,
                                double hi, int degree, int block,
                                std::uint64_t seed, double tol) {
  SparseMatrix hs = h.is_sparse ? h.sparse : h.dense.sparseView();
  const int n = static_cast<int>(hs.rows());
  block = std::min(block, n);
  double glo, ghi;
  spectral_bounds(hs, glo, ghi);
  ChebyshevFilter f = make_band_filter(lo, hi, glo, ghi, degree);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  DenseMatrix q(n, block);
  for (int j = 0; j < block; ++j) {
    for (int i = 0; i < n; ++i) q(i, j) = Complex(gauss(rng), gauss(rng));
  }

  // Filtered subspace iteration with Ritz restarts.  A fixed pass count is
  // not enough when the window hugs a dense part of the spectrum: leakage
  // from eigenvalues just outside decays only geometrically in the number of
  // filter applications, so iterate until the in-window residuals converge.
  const int max_passes = 16;
  double worst = 0.0;
  for (int pass = 1; pass <= max_passes; ++pass) {
    DenseMatrix y = apply_filter(hs, f, q);
    Eigen::ColPivHouseholderQR<DenseMatrix> qr(y);
    qr.setThreshold(1e-10);
    int rank = std::max<int>(1, static_cast<int>(qr.rank()));
    rank = std::min(rank, block);
    DenseMatrix thin = DenseMatrix::Identity(n, rank);
    q = qr.householderQ() * thin;

    DenseMatrix small = q.adjoint() * (hs * q);
    small = 0.5 * (small + small.adjoint());
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(small);
    if (es.info() != Eigen::Success) {
      throw Error(ErrorKind::Solver, "windowed eigensolver failed");
    }
    DenseMatrix ritz = q * es.eigenvectors();

    // Ritz values inside the window split into converged pairs and suspects.
    // A suspect whose filter amplitude ||f(H) v|| is negligible against the
    // strongest in-window pair is leakage the filter already rejected — its
    // Rayleigh quotient landed in the window by accident, and iterating the
    // (invariant) subspace can never repair it, so it is dropped.  A suspect
    // carrying real filter weight is a genuinely unconverged state.
    std::vector<int> window;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      double lam = es.eigenvalues()(i);
      if (lam >= lo && lam <= hi) window.push_back(i);
    }
    std::vector<int> keep;
    worst = 0.0;
    if (!window.empty()) {
      DenseMatrix cand(n, window.size());
      for (size_t j = 0; j < window.size(); ++j)
        cand.col(j) = ritz.col(window[j]);
      DenseMatrix amp = apply_filter(hs, f, cand);
      double amp_ref = 0.0;
      for (size_t j = 0; j < window.size(); ++j)
        amp_ref = std::max(amp_ref, amp.col(j).norm());
      for (size_t j = 0; j < window.size(); ++j) {
        int i = window[j];
        double lam = es.eigenvalues()(i);
        double res = (hs * ritz.col(i) - lam * ritz.col(i)).norm();
        if (res > tol && amp.col(j).norm() < 1e-3 * amp_ref) continue;
        worst = std::max(worst, res);
        keep.push_back(i);
      }
    }

    // An empty window is only trusted once the filter has had a chance to
    // pull states in; before that it may just mean slow convergence.
    bool converged = keep.empty() ? pass >= 3 : worst <= tol;
    if (converged) {
      if (static_cast<int>(keep.size()) > block - 4) {
        throw Error(ErrorKind::Solver,
                    "window saturates the iteration block; completeness "
                    "cannot be certified — enlarge block or shrink window");
      }
      WindowedEigen out;
      out.max_residual = worst;
      out.eigenvalues.resize(keep.size());
      out.vectors.resize(n, keep.size());
      for (size_t i = 0; i < keep.size(); ++i) {
        out.eigenvalues(i) = es.eigenvalues()(keep[i]);
        out.vectors.col(i) = ritz.col(keep[i]);
      }
      return out;
    }
    q = ritz;  // restart from the Ritz basis
  }
  throw Error(ErrorKind::Solver,
              "windowed eigenpairs above tolerance; worst residual " +
                  std::to_string(worst));
}

}  // namespace hyphall
