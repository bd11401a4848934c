#include "hyphall/conductance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hyphall {

namespace {

Word reduced_concat(const SurfaceGroup& g, const Word& a, const Word& b) {
  Word w = a;
  w.insert(w.end(), b.begin(), b.end());
  return g.reduce(w);
}

double dist_to_multiple(double v, double step) {
  double k = std::round(v / step);
  return std::abs(v - k * step);
}

// Per-site graded masses of the dense pairing.  A = Phi P - P Phi acts on
// P e_s as Phi (P v) - P (Phi v) with v = P e_s, so each site costs three
// dense mat-vecs; sites are independent, which keeps the parallel and serial
// paths bitwise identical.
void dense_site_masses(const DenseMatrix& p, const Eigen::VectorXcd& phi,
                       int ni, bool parallel, Eigen::VectorXd& plus,
                       Eigen::VectorXd& minus) {
  plus.resize(ni);
  minus.resize(ni);
  auto site = [&](int s) {
    Eigen::VectorXcd v = p.col(s);
    Eigen::VectorXcd pv = p * v;
    Eigen::VectorXcd pfv = p * phi.cwiseProduct(v).eval();
    Eigen::VectorXcd pgv = p * phi.conjugate().cwiseProduct(v).eval();
    plus(s) = (phi.cwiseProduct(pv) - pfv).squaredNorm();
    minus(s) = (phi.conjugate().cwiseProduct(pv) - pgv).squaredNorm();
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int s = 0; s < ni; ++s) site(s);
  } else {
    for (int s = 0; s < ni; ++s) site(s);
  }
}

FredholmReport masses_from(const Ball& ball, int interior_radius,
                           const Eigen::VectorXd& plus,
                           const Eigen::VectorXd& minus,
                           double leak_threshold) {
  const int ni = static_cast<int>(plus.size());
  double sp = 0.0, sm = 0.0, rim = 0.0;
  for (int s = 0; s < ni; ++s) {
    sp += plus(s);
    sm += minus(s);
    if (ball.depth(s) == interior_radius) rim += plus(s) + minus(s);
  }
  FredholmReport r;
  r.psi = sp + sm;
  r.sigma_graded = sm - sp;
  r.xi_plus = 2.0 * sp;
  r.xi_minus = 2.0 * sm;
  r.index = r.sigma_graded;
  r.frac_int = dist_to_multiple(r.index, 1.0);
  int genus = ball.group().genus();
  r.frac_even = dist_to_multiple(r.index, 2.0 * (genus - 1));
  r.boundary_leak = r.psi > 0.0 ? rim / r.psi : 0.0;
  r.reliable = r.boundary_leak < leak_threshold;
  r.interior_radius = interior_radius;
  r.sites = ni;
  return r;
}

}  // namespace

FredholmData fredholm_phase(const Ball& ball, const HPoint& x0) {
  cd z0 = to_model(x0, Model::Disk).z;
  if (!(std::abs(z0) < 1.0)) {
    throw Error(ErrorKind::Placement, "marked point must lie inside the disk");
  }
  const int n = ball.size();
  FredholmData f;
  f.ball = &ball;
  f.x0 = z0;
  f.phase.resize(n);
  for (int i = 0; i < n; ++i) {
    cd p = ball.orbit_disk(i);
    // Moebius transport of x0 into the frame centered at the orbit point:
    // its direction is the unit tangent at p of the geodesic toward x0.
    cd t = (z0 - p) / (1.0 - std::conj(p) * z0);
    double r = std::abs(t);
    if (2.0 * std::atanh(std::min(r, 1.0 - 1e-16)) < 1e-3) {
      throw Error(ErrorKind::Placement,
                  "marked point sits on the orbit at site " +
                      std::to_string(i) + "; move it off the lattice");
    }
    f.phase(i) = t / r;
  }
  return f;
}

static FredholmReport fredholm_dense(const DenseMatrix& p,
                                     const TruncatedSpace& space,
                                     const FredholmData& f,
                                     double leak_threshold, bool parallel) {
  const Ball& ball = space.ball();
  if (f.ball != &ball) {
    throw Error(ErrorKind::Config,
                "marked-point data was built on a different ball");
  }
  const int n = space.dimension();
  if (p.rows() != n || p.cols() != n) {
    throw Error(ErrorKind::Config, "projection does not match the space");
  }
  Eigen::VectorXd plus, minus;
  dense_site_masses(p, f.phase, space.interior_dimension(), parallel, plus,
                    minus);
  return masses_from(ball, space.radius() - space.margin(), plus, minus,
                     leak_threshold);
}

FredholmReport fredholm_pairing(const DenseMatrix& p,
                                const TruncatedSpace& space,
                                const FredholmData& f, double leak_threshold) {
  return fredholm_dense(p, space, f, leak_threshold, true);
}

FredholmReport fredholm_pairing_serial(const DenseMatrix& p,
                                       const TruncatedSpace& space,
                                       const FredholmData& f,
                                       double leak_threshold) {
  return fredholm_dense(p, space, f, leak_threshold, false);
}

FredholmReport fredholm_pairing_kernel(const EquivariantKernel& p,
                                       const TruncatedSpace& space,
                                       const FredholmData& f,
                                       int interior_radius,
                                       double leak_threshold,
                                       double column_tol) {
  const Ball& ball = space.ball();
  if (f.ball != &ball) {
    throw Error(ErrorKind::Config,
                "marked-point data was built on a different ball");
  }
  if (interior_radius < 0 || interior_radius > ball.radius()) {
    throw Error(ErrorKind::Config, "interior radius must lie in [0, radius]");
  }
  const SurfaceGroup& g = space.data().group();
  const int n = ball.size();
  const int ni = ball.size_at(interior_radius);

  struct Term {
    int gi;  // ball index, or -1 when the word leaves the ball
    const Word* w;
    Complex amp;
  };
  std::vector<Term> terms;
  terms.reserve(p.support_size());
  for (const auto& [w, v] : p.terms()) terms.push_back({ball.find(w), &w, v});

  Eigen::VectorXd plus(ni), minus(ni);
  auto resolve = [&](const Term& t, int c, int& x, Complex& phase) {
    if (t.gi >= 0) {
      x = ball.product(t.gi, c);
      if (x < 0) return false;
      phase = space.cocycle().sigma(t.gi, c);
    } else {
      x = ball.find(reduced_concat(g, *t.w, ball.word(c)));
      if (x < 0) return false;
      phase = space.data().multiplier(*t.w, ball.word(c));
    }
    return true;
  };
  auto site = [&](int s) {
    // Column P e_s straight from the kernel, then one more kernel
    // application for each of P v, P (Phi v), P (conj(Phi) v).
    std::vector<std::pair<int, Complex>> vcol;
    vcol.reserve(terms.size());
    int x;
    Complex phase;
    for (const auto& t : terms) {
      if (std::abs(t.amp) <= column_tol) continue;
      if (resolve(t, s, x, phase)) vcol.emplace_back(x, t.amp * phase);
    }
    Eigen::VectorXcd u = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXcd w1 = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXcd w2 = Eigen::VectorXcd::Zero(n);
    std::vector<char> seen(n, 0);
    std::vector<int> touched;
    touched.reserve(4 * terms.size());
    for (const auto& [c, vc] : vcol) {
      Complex fc = f.phase(c);
      for (const auto& t : terms) {
        if (!resolve(t, c, x, phase)) continue;
        Complex base = t.amp * phase;
        if (!seen[x]) {
          seen[x] = 1;
          touched.push_back(x);
        }
        u(x) += base * vc;
        w1(x) += base * (fc * vc);
        w2(x) += base * (std::conj(fc) * vc);
      }
    }
    double mp = 0.0, mm = 0.0;
    for (int xi : touched) {
      mp += std::norm(f.phase(xi) * u(xi) - w1(xi));
      mm += std::norm(std::conj(f.phase(xi)) * u(xi) - w2(xi));
    }
    plus(s) = mp;
    minus(s) = mm;
  };
#pragma omp parallel for schedule(static)
  for (int s = 0; s < ni; ++s) site(s);
  return masses_from(ball, interior_radius, plus, minus, leak_threshold);
}

static PairingValue trc_impl(const EquivariantKernel& p, const MagneticData& m,
                             bool parallel) {
  const SurfaceGroup& g = m.group();
  struct Term {
    const Word* w;
    Complex amp;
  };
  std::vector<Term> terms;
  terms.reserve(p.support_size());
  for (const auto& [w, v] : p.terms()) terms.push_back({&w, v});
  const int nt = static_cast<int>(terms.size());

  std::vector<Complex> partial(nt, Complex(0.0, 0.0));
  auto row = [&](int i) {
    const Word& w1 = *terms[i].w;
    Complex acc(0.0, 0.0);
    for (int j = 0; j < nt; ++j) {
      const Word& w2 = *terms[j].w;
      Complex a0 = p.at(word_inverse(reduced_concat(g, w1, w2)));
      if (a0 == Complex(0.0, 0.0)) continue;
      double c = m.area_cocycle(w1, w2);
      if (c == 0.0) continue;
      acc += a0 * terms[i].amp * terms[j].amp * c *
             std::polar(1.0, m.theta() * c);
    }
    partial[i] = acc;
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < nt; ++i) row(i);
  } else {
    for (int i = 0; i < nt; ++i) row(i);
  }
  Complex total(0.0, 0.0);
  for (int i = 0; i < nt; ++i) total += partial[i];
  return {total.real(), std::abs(total.imag())};
}

PairingValue tr_c(const EquivariantKernel& p, const MagneticData& m) {
  return trc_impl(p, m, true);
}

PairingValue tr_c_serial(const EquivariantKernel& p, const MagneticData& m) {
  return trc_impl(p, m, false);
}

// Written out as one double sum over the support: for words with
// g0 g1 g2 = e the cocycle identity collapses the two twisted-convolution
// multipliers to the single factor sigma(g1, g2), so the Kubo character has
// exactly the shape of tr_c with the symplectic abelianization form
// sum_j Omega_j(g1) Omega_{j+g}(g2) - Omega_{j+g}(g1) Omega_j(g2) in place
// of the area cocycle.  Equal to the twisted-convolution evaluation, at
// support-squared instead of support-cubed cost.
PairingValue kubo(const EquivariantKernel& p, const MagneticData& m) {
  const SurfaceGroup& g = m.group();
  const int genus = g.genus();
  struct Term {
    const Word* w;
    Complex amp;
    std::vector<int> ab;
  };
  std::vector<Term> terms;
  terms.reserve(p.support_size());
  for (const auto& [w, v] : p.terms()) {
    terms.push_back({&w, v, g.abelianization(w)});
  }
  const int nt = static_cast<int>(terms.size());

  std::vector<Complex> partial(nt, Complex(0.0, 0.0));
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < nt; ++i) {
    const Word& w1 = *terms[i].w;
    Complex acc(0.0, 0.0);
    for (int j = 0; j < nt; ++j) {
      double omega = 0.0;
      for (int k = 0; k < genus; ++k) {
        omega += static_cast<double>(terms[i].ab[k]) * terms[j].ab[k + genus] -
                 static_cast<double>(terms[i].ab[k + genus]) * terms[j].ab[k];
      }
      if (omega == 0.0) continue;
      const Word& w2 = *terms[j].w;
      Complex a0 = p.at(word_inverse(reduced_concat(g, w1, w2)));
      if (a0 == Complex(0.0, 0.0)) continue;
      acc += a0 * terms[i].amp * terms[j].amp * omega * m.multiplier(w1, w2);
    }
    partial[i] = acc;
  }
  Complex total(0.0, 0.0);
  for (int i = 0; i < nt; ++i) total += partial[i];
  return {total.real(), std::abs(total.imag())};
}

DomainDiagnostics domain_diagnostics(const EquivariantKernel& p,
                                     const TruncatedSpace& space,
                                     const FredholmData& f, double ceiling,
                                     double stability_tol) {
  const Ball& ball = space.ball();
  if (f.ball != &ball) {
    throw Error(ErrorKind::Config,
                "marked-point data was built on a different ball");
  }
  const SurfaceGroup& g = space.data().group();
  const int slots = 2 * g.genus();
  const int ni = space.interior_dimension();
  const int rmax = p.radius();

  std::vector<double> hs_shell(rmax + 1, 0.0);
  std::vector<std::vector<double>> sob_shell(
      slots, std::vector<double>(rmax + 1, 0.0));
  for (const auto& [w, v] : p.terms()) {
    double a2 = std::norm(v);
    int shell = static_cast<int>(w.size());
    auto ab = g.abelianization(w);
    for (int j = 0; j < slots; ++j) {
      sob_shell[j][shell] += static_cast<double>(ab[j]) * ab[j] * a2;
    }
    int gi = ball.find(w);
    double acc = 0.0;
    for (int s = 0; s < ni; ++s) {
      int x = gi >= 0 ? ball.product(gi, s)
                      : ball.find(reduced_concat(g, w, ball.word(s)));
      if (x < 0) continue;
      acc += std::norm(f.phase(x) - f.phase(s));
    }
    // Both off-diagonal blocks of [F, P] contribute the same magnitude, and
    // the canonical trace is the per-site average over the interior.
    hs_shell[shell] += 2.0 * acc * a2 / static_cast<double>(ni);
  }

  DomainDiagnostics d;
  d.sobolev.assign(slots, 0.0);
  double sob_tail = 0.0, sob_peak = 0.0;
  for (int j = 0; j < slots; ++j) {
    for (double v : sob_shell[j]) d.sobolev[j] += v;
    sob_peak = std::max(sob_peak, d.sobolev[j]);
    if (d.sobolev[j] > 1e-14) {
      sob_tail = std::max(sob_tail, sob_shell[j][rmax] / d.sobolev[j]);
    }
  }
  for (double v : hs_shell) d.hs_norm += v;
  d.hs_tail = d.hs_norm > 1e-14 ? hs_shell[rmax] / d.hs_norm : 0.0;
  d.sobolev_tail = sob_tail;
  d.in_domain = d.hs_norm <= ceiling && sob_peak <= ceiling &&
                d.hs_tail <= stability_tol && d.sobolev_tail <= stability_tol;
  return d;
}

std::vector<EnergyReport> sweep_conductance(const SpectralData& sd,
                                            const FredholmData& f,
                                            const std::vector<double>& energies,
                                            const SweepOptions& opt) {
  if (!std::is_sorted(energies.begin(), energies.end())) {
    throw Error(ErrorKind::Config, "energy grid must be sorted ascending");
  }
  const TruncatedSpace& space = *sd.space;
  if (f.ball != &space.ball()) {
    throw Error(ErrorKind::Config,
                "marked-point data was built on a different ball");
  }
  std::vector<EnergyReport> rows;
  rows.reserve(energies.size());
  for (double e : energies) {
    SpectralProjection proj =
        spectral_projection(sd, e, opt.gap_min, opt.kernel_tol);
    EnergyReport row;
    row.energy = e;
    row.ids = ids(sd, e);
    row.rank = proj.rank;
    row.well_conditioned = proj.well_conditioned;
    row.extraction_residual = proj.extraction_residual;
    row.support_radius = proj.support_radius;
    PairingValue kv = kubo(proj.kernel, space.data());
    row.kubo_value = kv.value;
    row.kubo_residual = kv.imag_residual;
    PairingValue tv = tr_c(proj.kernel, space.data());
    row.trc_value = tv.value;
    row.trc_residual = tv.imag_residual;
    FredholmReport fr =
        fredholm_pairing(proj.op.dense, space, f, opt.leak_threshold);
    row.index = fr.index;
    row.psi = fr.psi;
    row.xi_plus = fr.xi_plus;
    row.xi_minus = fr.xi_minus;
    row.boundary_leak = fr.boundary_leak;
    row.reliable_index = fr.reliable;
    DomainDiagnostics dd = domain_diagnostics(proj.kernel, space, f,
                                              opt.ceiling, opt.stability_tol);
    row.hs_norm = dd.hs_norm;
    row.sobolev = dd.sobolev;
    row.in_domain = dd.in_domain;
    rows.push_back(std::move(row));
  }
  return rows;
}

PlateauReport plateau_report(std::vector<EnergyReport>& rows, int genus,
                             double kappa, double plateau_tol) {
  if (genus < 2) {
    throw Error(ErrorKind::Config, "plateau analysis needs genus >= 2");
  }
  if (!(kappa > 0.0)) {
    throw Error(ErrorKind::Config, "kappa must be positive");
  }
  PlateauReport rep;
  rep.kappa = kappa;
  const double step = 2.0 * (genus - 1);
  rep.plateau_tol = plateau_tol < 0.0 ? 0.05 * step * kappa : plateau_tol;

  Plateau cur;
  bool open = false;
  auto close = [&]() {
    if (open) rep.plateaus.push_back(cur);
    open = false;
  };
  double prev_psi = 0.0;
  bool have_prev = false;
  for (auto& row : rows) {
    row.plateau_id = -1;
    if (!row.in_domain) {
      close();
      continue;
    }
    if (row.psi > rep.psi_max) rep.psi_max = row.psi;
    if (have_prev && row.psi < prev_psi - 1e-9) rep.psi_monotone = false;
    prev_psi = row.psi;
    have_prev = true;
    double v = row.kubo_value;
    if (open && std::abs(v - cur.value) <= rep.plateau_tol) {
      // Track the running mean so ties are judged against the level, not
      // the first sample.
      cur.value = (cur.value * cur.points + v) / (cur.points + 1);
      cur.hi = row.energy;
      ++cur.points;
    } else {
      close();
      cur = {row.energy, row.energy, v, 1};
      open = true;
    }
    row.plateau_id = static_cast<int>(rep.plateaus.size());
  }
  close();

  rep.bound = static_cast<int>(std::floor(rep.psi_max / (step * kappa))) + 1;
  rep.bound_satisfied = static_cast<int>(rep.plateaus.size()) <= rep.bound;
  return rep;
}

AverageReport disorder_average(const AverageConfig& cfg) {
  if (cfg.samples < 1) {
    throw Error(ErrorKind::Config, "need at least one disorder sample");
  }
  SurfaceGroup group(cfg.genus);
  Ball ball(group, cfg.radius);
  MagneticData data(group, cfg.theta);
  TruncatedSpace space(ball, data, cfg.margin);
  FredholmData f = fredholm_phase(ball, HPoint{cfg.x0, Model::Disk});
  TruncatedOperator h0 = build_harper(space);
  SweepOptions opt = cfg.sweep;
  opt.gap_min = cfg.gap_min;

  AverageReport rep;
  rep.samples.reserve(cfg.samples);
  for (int k = 0; k < cfg.samples; ++k) {
    TruncatedOperator h =
        cfg.w > 0.0
            ? apply_disorder(h0, DisorderModel::iid(cfg.w, cfg.seed0 + k))
            : h0;
    SpectralData sd = eigensolve(h);
    std::vector<EnergyReport> rows =
        sweep_conductance(sd, f, {cfg.energy}, opt);
    rep.samples.push_back(rows.front());
  }

  const int m = cfg.samples;
  double sk = 0.0, si = 0.0;
  for (const auto& r : rep.samples) {
    sk += r.kubo_value;
    si += r.index;
    rep.rounded.push_back(std::lround(r.index));
  }
  rep.mean_kubo = sk / m;
  rep.mean_index = si / m;
  if (m > 1) {
    double var = 0.0;
    for (const auto& r : rep.samples) {
      var += (r.kubo_value - rep.mean_kubo) * (r.kubo_value - rep.mean_kubo);
    }
    rep.se_kubo = std::sqrt(var / (static_cast<double>(m) * (m - 1)));
  }
  rep.index_constant =
      std::all_of(rep.rounded.begin(), rep.rounded.end(),
                  [&](long v) { return v == rep.rounded.front(); });
  return rep;
}

FilteredKernel chebyshev_projection_kernel(const TruncatedOperator& h,
                                           double energy, int degree,
                                           int column_radius,
                                           double kernel_tol) {
  const TruncatedSpace& space = *h.space;
  const Ball& ball = space.ball();
  if (column_radius < 0 || column_radius > ball.radius()) {
    throw Error(ErrorKind::Config, "column radius must lie in [0, radius]");
  }
  if (degree < 1) throw Error(ErrorKind::Config, "filter degree must be >= 1");
  SparseMatrix hs = h.is_sparse ? h.sparse : SparseMatrix(h.dense.sparseView());
  double lo = 0.0, hi = 0.0;
  spectral_bounds(hs, lo, hi);
  ChebyshevFilter filt = make_step_filter(energy, lo, hi, degree);

  const int n = space.dimension();
  const int nc = ball.size_at(column_radius);
  DenseMatrix probe = DenseMatrix::Zero(n, nc);
  for (int c = 0; c < nc; ++c) probe(c, c) = Complex(1.0, 0.0);
  DenseMatrix cols = apply_filter(hs, filt, probe);

  // Average the per-column estimates a(gamma) = col_c(gamma c) sigma(g, c)^*
  // into one equivariant kernel, exactly as the dense extraction does, then
  // report the worst spread between columns on the retained words.
  std::vector<Complex> amp(n, Complex(0.0, 0.0));
#pragma omp parallel for schedule(static)
  for (int gi = 0; gi < n; ++gi) {
    Complex sum(0.0, 0.0);
    int count = 0;
    for (int c = 0; c < nc; ++c) {
      int r = ball.product(gi, c);
      if (r < 0) continue;
      sum += cols(r, c) * std::conj(space.cocycle().sigma(gi, c));
      ++count;
    }
    if (count > 0) amp[gi] = sum / static_cast<double>(count);
  }

  FilteredKernel out;
  out.columns = nc;
  std::vector<double> dev(n, 0.0);
#pragma omp parallel for schedule(static)
  for (int gi = 0; gi < n; ++gi) {
    if (std::abs(amp[gi]) < kernel_tol) continue;
    double worst = 0.0;
    for (int c = 0; c < nc; ++c) {
      int r = ball.product(gi, c);
      if (r < 0) continue;
      worst = std::max(
          worst, std::abs(cols(r, c) * std::conj(space.cocycle().sigma(gi, c)) -
                          amp[gi]));
    }
    dev[gi] = worst;
  }
  for (int gi = 0; gi < n; ++gi) {
    out.residual = std::max(out.residual, dev[gi]);
    if (std::abs(amp[gi]) >= kernel_tol) out.kernel.add(ball.word(gi), amp[gi]);
  }
  return out;
}

}  // namespace hyphall
