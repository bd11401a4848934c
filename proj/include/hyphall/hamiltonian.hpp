#pragma once

#include <cstdint>
#include <vector>

#include "operators.hpp"

namespace hyphall {

// On-site potential models for the disordered Hamiltonian H + T.  The iid
// model draws the value at each site from a counter-based hash of
// (seed, canonical word), so samples are reproducible, independent of
// enumeration order, and exactly shift-covariant; the almost-periodic model
// evaluates lambda cos(2 pi alpha . abelianization) on the 2g-torus hull.
struct DisorderModel {
  enum class Kind { None, IidUniform, AlmostPeriodic };

  Kind kind = Kind::None;
  double strength = 0.0;         // W (iid half-width) or lambda (amplitude)
  std::vector<double> alpha;     // length 2g, almost-periodic frequencies
  std::uint64_t seed = 0;

  static DisorderModel none();
  static DisorderModel iid(double w, std::uint64_t seed);
  static DisorderModel almost_periodic(double lambda,
                                       std::vector<double> alpha);

  // Potential value at a site given by its canonical word.
  double value(const SurfaceGroup& group, const Word& site) const;
};

// Sorted spectrum of a finite Hermitian section, with eigenvectors and the
// interior weights used by boundary-insensitive counting functions.
struct SpectralData {
  const TruncatedSpace* space = nullptr;
  Eigen::VectorXd eigenvalues;       // ascending
  DenseMatrix eigenvectors;          // columns follow eigenvalues
  Eigen::VectorXd interior_weight;   // per eigenvector, sums to interior dim
  double hermiticity_residual = 0.0;
};

struct GapInterval {
  double lower = 0.0;    // top of the band below the gap
  double upper = 0.0;    // bottom of the band above
  double midpoint() const { return 0.5 * (lower + upper); }
  double width() const { return upper - lower; }
};

struct Histogram {
  std::vector<double> edges;     // bins + 1 entries
  std::vector<int> counts;       // raw eigenvalue counts
  std::vector<double> density;   // interior-weighted, integrates to 1
};

// H = sum over generator letters of U(letter): nearest-neighbor hops on the
// Cayley graph with magnetic phases.  Hermitian by sigma(g, g^-1) = 1.
TruncatedOperator build_harper(const TruncatedSpace& space);

// H + diagonal potential; preserves storage mode and Hermiticity.
TruncatedOperator apply_disorder(const TruncatedOperator& h,
                                 const DisorderModel& model);

// Dense full decomposition (guarded Hermitization; dimension <= 4000).
SpectralData eigensolve(const TruncatedOperator& h);

// Integrated density of states at energy E: interior-weighted eigenvalue
// counting, in [0, 1], monotone in E.
double ids(const SpectralData& sd, double energy);

Histogram dos(const SpectralData& sd, int bins);

// Maximal open intervals wider than gap_min between consecutive eigenvalues.
std::vector<GapInterval> find_gaps(const SpectralData& sd, double gap_min);

// Gap detection that ignores boundary modes: eigenvalues carrying interior
// weight below weight_tol are treated as truncation artifacts and skipped
// when measuring separations.
std::vector<GapInterval> find_gaps_weighted(const SpectralData& sd,
                                            double gap_min,
                                            double weight_tol = 1e-3);

struct SpectralProjection {
  TruncatedOperator op;          // dense P = sum_{lambda <= E} v v^dagger
  EquivariantKernel kernel;      // extracted, shell-truncated at kernel_tol
  int rank = 0;
  double idempotency = 0.0;      // max |P^2 - P| entry
  double extraction_residual = 0.0;
  int support_radius = 0;        // last shell with amplitude >= kernel_tol
  bool well_conditioned = true;  // false when E hugs an eigenvalue
  double eigenvalue_distance = 0.0;  // |E - nearest eigenvalue|
};

// Fermi projection chi_(-inf, E](H) from a dense decomposition.
SpectralProjection spectral_projection(const SpectralData& sd, double energy,
                                       double gap_min = 0.0,
                                       double kernel_tol = 1e-8);

// Chebyshev machinery: Jackson-damped polynomial approximation of the step
// chi_(-inf, E] over a spectral interval, applied matrix-free.  Shared by the
// windowed eigensolver here and the large-ball projection path downstream.
struct ChebyshevFilter {
  double center = 0.0;           // spectral interval midpoint
  double half = 1.0;             // half-width
  std::vector<double> coeff;     // damped Chebyshev coefficients
};

// Bounds every eigenvalue of a Hermitian sparse matrix (Gershgorin).
void spectral_bounds(const SparseMatrix& h, double& lo, double& hi);

ChebyshevFilter make_step_filter(double energy, double lo, double hi,
                                 int degree);

// Filter applied to a block of vectors: block -> f(H) block.
DenseMatrix apply_filter(const SparseMatrix& h, const ChebyshevFilter& f,
                         const DenseMatrix& block);

struct WindowedEigen {
  Eigen::VectorXd eigenvalues;
  DenseMatrix vectors;
  double max_residual = 0.0;
};

// Eigenpairs inside [lo, hi] via filtered subspace iteration; residuals
// ||Hv - lambda v|| <= tol or a Solver error reports the worst residual.
WindowedEigen eigensolve_window(const TruncatedOperator& h, double lo,
                                double hi, int degree = 600, int block = 48,
                                std::uint64_t seed = 1,
                                double tol = 1e-8);

}  // namespace hyphall
