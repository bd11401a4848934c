// Benchmark: parallel kernels against their serial reference
// implementations.  Both routes must agree bitwise; wall times are reported
// per route so the parallel speedup (or its absence on single-core hosts)
// is measured honestly.
#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hyphall/conductance.hpp"

using namespace hyphall;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

template <typename F>
double timed(int reps, F&& f) {
  auto t0 = clock_type::now();
  for (int k = 0; k < reps; ++k) f();
  return seconds_since(t0) / reps;
}

}  // namespace

int main(int argc, char** argv) {
  int radius = argc > 1 ? std::atoi(argv[1]) : 3;
  int reps = argc > 2 ? std::atoi(argv[2]) : 3;
  double theta = 0.8;

#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled (serial build)\n");
#endif

  SurfaceGroup g(2);
  Ball ball(g, radius);
  MagneticData data(g, theta);
  TruncatedSpace space(ball, data, 1);
  std::printf("genus 2, radius %d, %d sites, margin 1, theta %.3f, "
              "%d reps per timing\n\n",
              radius, ball.size(), theta, reps);

  auto t0 = clock_type::now();
  SpectralData sd = eigensolve(build_harper(space));
  std::printf("eigensolve                   %8.3f s\n", seconds_since(t0));

  auto gaps = find_gaps_weighted(sd, 0.05);
  if (gaps.empty()) {
    std::printf("no gaps above 0.05; nothing to project\n");
    return 1;
  }
  t0 = clock_type::now();
  SpectralProjection proj = spectral_projection(sd, gaps[0].midpoint());
  std::printf("spectral_projection          %8.3f s  (rank %d, %d words)\n",
              seconds_since(t0), proj.rank, proj.kernel.support_size());

  FredholmData f = fredholm_phase(ball, HPoint{cd(0.35, 0.20), Model::Disk});
  const DenseMatrix& p = proj.op.dense;

  FredholmReport fp, fs;
  double tp = timed(reps, [&] { fp = fredholm_pairing(p, space, f); });
  double ts = timed(reps, [&] { fs = fredholm_pairing_serial(p, space, f); });
  bool f_same = fp.psi == fs.psi && fp.sigma_graded == fs.sigma_graded &&
                fp.xi_plus == fs.xi_plus && fp.xi_minus == fs.xi_minus;
  std::printf("fredholm_pairing   parallel  %8.3f s\n", tp);
  std::printf("fredholm_pairing   serial    %8.3f s  speedup %.2fx  "
              "bitwise %s\n",
              ts, ts / tp, f_same ? "identical" : "DIFFERENT");

  PairingValue cp, cs;
  double tcp = timed(reps, [&] { cp = tr_c(proj.kernel, data); });
  double tcs = timed(reps, [&] { cs = tr_c_serial(proj.kernel, data); });
  bool c_same = cp.value == cs.value && cp.imag_residual == cs.imag_residual;
  std::printf("tr_c               parallel  %8.3f s\n", tcp);
  std::printf("tr_c               serial    %8.3f s  speedup %.2fx  "
              "bitwise %s\n",
              tcs, tcs / tcp, c_same ? "identical" : "DIFFERENT");

  PairingValue kv;
  double tk = timed(reps, [&] { kv = kubo(proj.kernel, data); });
  std::printf("kubo                         %8.3f s\n", tk);

  std::printf("\nvalues: psi %.12f  sigma %.3e  tr_c %.3e  kubo %.3e\n",
              fp.psi, fp.sigma_graded, cp.value, kv.value);
  if (!f_same || !c_same) {
    std::printf("FAIL: serial and parallel routes disagree\n");
    return 1;
  }
  std::printf("serial and parallel routes agree bitwise\n");
  return 0;
}
