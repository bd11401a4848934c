#pragma once
// Hall conductance machinery on the hyperbolic Cayley graph: the marked-point
// Fredholm symmetry, area and derivation conductance 2-cocycles, graded index
// sums over interior sites, Sobolev/Hilbert-Schmidt domain diagnostics,
// plateau detection with the gap-count bound, and disorder ensembles.

#include <cstdint>
#include <vector>

#include "hyphall/hamiltonian.hpp"

namespace hyphall {

// Unit tangent direction, in the conformal disk frame, of the geodesic from
// each orbit point toward a marked point x0 off the orbit.  On the doubled
// space the symmetry F = [[0, conj(phi)], [phi, 0]] then satisfies F = F^dag
// and F^2 = 1 exactly, and commutators [F, P] are concentrated where the
// tangent field varies — the geometric input of the index pairing.
struct FredholmData {
  const Ball* ball = nullptr;
  cd x0{0.0, 0.0};         // disk chart
  Eigen::VectorXcd phase;  // one unit complex per ball site
};

// Throws Placement if x0 comes within 1e-3 (hyperbolic) of an orbit point.
FredholmData fredholm_phase(const Ball& ball, const HPoint& x0);

// Graded commutator sums over interior sites.  With A = Phi P - P Phi and
// B = conj(Phi) P - P conj(Phi) (Phi = diag(phase)), the per-site masses
//   m_plus(s) = |A P e_s|^2   and   m_minus(s) = |B P e_s|^2
// are the squared column norms of the two off-diagonal blocks of [F,P] P,
// giving
//   psi          = sum(m_plus + m_minus)            >= 0,
//   sigma_graded = sum(m_minus - m_plus)            (the index sum),
//   xi_plus      = 2 sum(m_plus),  xi_minus = 2 sum(m_minus),
// so psi - sigma_graded = xi_plus and psi + sigma_graded = xi_minus hold to
// rounding by construction, and all of psi, xi_plus, xi_minus are manifestly
// nonnegative site by site.
struct FredholmReport {
  double psi = 0.0;
  double sigma_graded = 0.0;
  double xi_plus = 0.0;
  double xi_minus = 0.0;
  double index = 0.0;          // = sigma_graded
  double frac_int = 0.0;       // distance to the nearest integer
  double frac_even = 0.0;      // distance to the nearest point of 2(g-1)Z
  double boundary_leak = 0.0;  // outermost-shell share of the site masses
  bool reliable = true;        // boundary_leak below the threshold
  int interior_radius = 0;
  int sites = 0;
};

// Dense path (needs the full projection matrix); interior = space margin.
FredholmReport fredholm_pairing(const DenseMatrix& p,
                                const TruncatedSpace& space,
                                const FredholmData& f,
                                double leak_threshold = 0.25);
// Serial reference implementation, bit-identical to fredholm_pairing.
FredholmReport fredholm_pairing_serial(const DenseMatrix& p,
                                       const TruncatedSpace& space,
                                       const FredholmData& f,
                                       double leak_threshold = 0.25);
// Kernel path for balls too large to densify: the projection enters through
// its equivariant kernel and columns are expanded site by site.  column_tol
// drops expanded-column entries with |amplitude| <= column_tol before the
// second kernel application; the per-site error it introduces is bounded by
// column_tol * ||p||_1 * (support size), so keep it well below the kernel's
// smallest meaningful amplitude (0 keeps every entry).
FredholmReport fredholm_pairing_kernel(const EquivariantKernel& p,
                                       const TruncatedSpace& space,
                                       const FredholmData& f,
                                       int interior_radius,
                                       double leak_threshold = 0.25,
                                       double column_tol = 0.0);

struct PairingValue {
  double value = 0.0;
  double imag_residual = 0.0;
};

// Area-cocycle character: sum over support pairs (g1, g2) of
// p((g1 g2)^-1) p(g1) p(g2) c(g1, g2) sigma(g1, g2), the pairing of the
// projection with the hyperbolic area 2-cocycle.
PairingValue tr_c(const EquivariantKernel& p, const MagneticData& m);
// Serial reference, bit-identical to tr_c.
PairingValue tr_c_serial(const EquivariantKernel& p, const MagneticData& m);

// Derivation (Kubo) conductance: sum over symplectic pairs (j, j+g) of
// tr(p * (d_j p * d_{j+g} p - d_{j+g} p * d_j p)) with (d_j p)(w) multiplied
// by the j-th abelianization coordinate and * the twisted convolution.
PairingValue kubo(const EquivariantKernel& p, const MagneticData& m);

struct DomainDiagnostics {
  double hs_norm = 0.0;         // doubled-space |[F,P]|_HS^2 over interior
  std::vector<double> sobolev;  // 2g weighted kernel norms
  double hs_tail = 0.0;         // outermost kernel shell share
  double sobolev_tail = 0.0;
  bool in_domain = false;       // below ceilings and shell-stable
};

DomainDiagnostics domain_diagnostics(const EquivariantKernel& p,
                                     const TruncatedSpace& space,
                                     const FredholmData& f,
                                     double ceiling = 100.0,
                                     double stability_tol = 0.10);

// One energy row of a conductance sweep.
struct EnergyReport {
  double energy = 0.0;
  double ids = 0.0;
  int rank = 0;
  bool well_conditioned = false;
  double kubo_value = 0.0, kubo_residual = 0.0;
  double trc_value = 0.0, trc_residual = 0.0;
  double index = 0.0, psi = 0.0, xi_plus = 0.0, xi_minus = 0.0;
  double boundary_leak = 0.0;
  bool reliable_index = false;
  double hs_norm = 0.0;
  std::vector<double> sobolev;
  bool in_domain = false;
  double extraction_residual = 0.0;
  int support_radius = 0;
  int plateau_id = -1;  // filled by plateau_report
};

struct SweepOptions {
  double gap_min = 0.0;        // conditioning scale for projections
  double kernel_tol = 1e-8;    // kernel shell truncation
  double ceiling = 100.0;      // domain norm ceiling
  double stability_tol = 0.10; // shell-stability bound for in_domain
  double leak_threshold = 0.25;
};

// Dense sweep: Fermi projection at each energy from the decomposition, then
// every functional.  Energies must be sorted ascending.
std::vector<EnergyReport> sweep_conductance(const SpectralData& sd,
                                            const FredholmData& f,
                                            const std::vector<double>& energies,
                                            const SweepOptions& opt = {});

struct Plateau {
  double lo = 0.0, hi = 0.0;  // energy extent
  double value = 0.0;         // conductance level
  int points = 0;
};

struct PlateauReport {
  std::vector<Plateau> plateaus;
  double kappa = 1.0;
  double plateau_tol = 0.0;
  double psi_max = 0.0;
  int bound = 0;               // floor(psi_max / (2(g-1) kappa)) + 1
  bool bound_satisfied = true;
  bool psi_monotone = true;    // over in-domain rows
};

// Detects maximal constant stretches of the Kubo conductance over in-domain
// rows and checks the finite-gap-count bound.  plateau_tol < 0 selects the
// default 0.05 * 2(g-1) * kappa.  Assigns plateau_id on the rows.
PlateauReport plateau_report(std::vector<EnergyReport>& rows, int genus,
                             double kappa, double plateau_tol = -1.0);

struct AverageConfig {
  int genus = 2;
  double theta = 0.0;
  int radius = 4;
  int margin = 2;
  double energy = 0.0;
  double gap_min = 0.0;
  double w = 0.0;            // iid disorder half-width
  std::uint64_t seed0 = 1;   // seeds are seed0, seed0+1, ...
  int samples = 1;
  cd x0{0.35, 0.20};         // marked point, disk chart
  SweepOptions sweep;
};

struct AverageReport {
  std::vector<EnergyReport> samples;
  double mean_kubo = 0.0, se_kubo = 0.0;
  double mean_index = 0.0;
  std::vector<long> rounded;   // per-sample rounded index
  bool index_constant = true;
};

// Disorder ensemble at a fixed energy: per-seed spectra, projections, and
// pairings; the rounded index must not move between samples.
AverageReport disorder_average(const AverageConfig& cfg);

struct FilteredKernel {
  EquivariantKernel kernel;
  double residual = 0.0;  // max deviation between column estimates
  int columns = 0;
};

// Projection kernel via a Jackson-damped step filter: filtered identity
// columns at the sites of the sub-ball of column_radius, averaged into one
// equivariant kernel.  The route to pairings on balls too large to solve
// densely.
FilteredKernel chebyshev_projection_kernel(const TruncatedOperator& h,
                                           double energy, int degree,
                                           int column_radius,
                                           double kernel_tol = 1e-8);

}  // namespace hyphall
