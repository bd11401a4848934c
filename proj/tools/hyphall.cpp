// Command-line driver: configuration, experiment orchestration, persistence,
// and figure emission.  Subcommands: validate | butterfly | spectrum |
// conductance | average.  Exit codes: 0 ok, 1 config, 2 numeric failure,
// 3 invariant violation.  Outputs are deterministic for a fixed config and
// every file embeds the config hash.
#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hyphall/conductance.hpp"

using nlohmann::json;
using namespace hyphall;

namespace {

constexpr const char* kArtifactVersion = "hyphall 1.0.0";

int code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
    case ErrorKind::InvalidIsometry:
    case ErrorKind::Placement:
      return 1;
    case ErrorKind::Solver:
    case ErrorKind::NumericalDegeneracy:
    case ErrorKind::TruncationInsufficient:
      return 2;
    case ErrorKind::Construction:
    case ErrorKind::Freeness:
    case ErrorKind::InternalConsistency:
      return 3;
  }
  return 2;
}

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  int genus = 2;
  double theta = 0.8;
  std::string theta_grid;  // "lo:hi:n" (butterfly)
  int radius = 3;
  int margin = 1;
  std::string disorder = "none";  // none | iid | ap
  double W = 0.0;
  double lambda = 0.0;
  std::string alpha;     // comma list, 2g entries (ap model)
  std::uint64_t seed0 = 1;
  int seeds = 1;         // ensemble size (average)
  std::string energies;  // comma list; empty -> weighted-gap midpoints
  double gap_min = 0.03;
  double plateau_tol = -1.0;  // <0 -> 0.05 * 2(g-1) * kappa
  double kappa = 6.283185307179586;  // frozen trace normalization (2 pi)
  std::string x0 = "0.35,0.20";      // marked point, disk chart
  int instances = 1000;  // validate suite size
  std::string out = ".";
  bool no_csv = false, no_json = false, no_svg = false;
  bool fault_inject = false;  // validate: corrupt the presentation
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmtg(double v, int prec = 6) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

// Canonical key=value serialization; the hash of this string is embedded in
// every output file, so artifacts can be traced back to their exact config.
std::string canonical_config(const RunConfig& c) {
  std::string s;
  s += "alpha=" + c.alpha + "\n";
  s += "disorder=" + c.disorder + "\n";
  s += "energies=" + c.energies + "\n";
  s += "gap_min=" + fmt(c.gap_min) + "\n";
  s += "genus=" + std::to_string(c.genus) + "\n";
  s += "instances=" + std::to_string(c.instances) + "\n";
  s += "kappa=" + fmt(c.kappa) + "\n";
  s += "lambda=" + fmt(c.lambda) + "\n";
  s += "margin=" + std::to_string(c.margin) + "\n";
  s += "plateau_tol=" + fmt(c.plateau_tol) + "\n";
  s += "radius=" + std::to_string(c.radius) + "\n";
  s += "seed0=" + std::to_string(c.seed0) + "\n";
  s += "seeds=" + std::to_string(c.seeds) + "\n";
  s += "theta=" + fmt(c.theta) + "\n";
  s += "theta_grid=" + c.theta_grid + "\n";
  s += "w=" + fmt(c.W) + "\n";
  s += "x0=" + c.x0 + "\n";
  return s;
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    std::string tok = s.substr(pos, next - pos);
    try {
      size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config,
                  std::string(what) + ": bad entry '" + tok + "'");
    }
    pos = next + 1;
  }
  return out;
}

cd parse_x0(const RunConfig& c) {
  auto v = parse_list(c.x0, "--x0");
  if (v.size() != 2)
    throw Error(ErrorKind::Config, "--x0 expects 're,im' in the disk chart");
  return cd(v[0], v[1]);
}

std::vector<double> parse_theta_grid(const RunConfig& c) {
  if (c.theta_grid.empty()) return {c.theta};
  double lo = 0, hi = 0;
  int n = 0;
  if (std::sscanf(c.theta_grid.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3 ||
      n < 1)
    throw Error(ErrorKind::Config, "--theta-grid expects 'lo:hi:n' with n >= 1");
  std::vector<double> grid(n);
  for (int k = 0; k < n; ++k)
    grid[k] = (n == 1) ? lo : lo + (hi - lo) * k / (n - 1);
  return grid;
}

DisorderModel make_disorder(const RunConfig& c, std::uint64_t seed) {
  if (c.disorder == "none") return DisorderModel::none();
  if (c.disorder == "iid") return DisorderModel::iid(c.W, seed);
  if (c.disorder == "ap") {
    std::vector<double> a;
    if (c.alpha.empty()) {
      // Deterministic default: golden-ratio multiples on the 2g-torus.
      for (int j = 1; j <= 2 * c.genus; ++j)
        a.push_back(std::fmod(j * 0.6180339887498949, 1.0));
    } else {
      a = parse_list(c.alpha, "--alpha");
    }
    if (static_cast<int>(a.size()) != 2 * c.genus)
      throw Error(ErrorKind::Config, "--alpha needs 2*genus entries");
    return DisorderModel::almost_periodic(c.lambda, a);
  }
  throw Error(ErrorKind::Config, "--disorder must be none, iid, or ap");
}

TruncatedOperator make_hamiltonian(const TruncatedSpace& space,
                                   const RunConfig& c, std::uint64_t seed) {
  TruncatedOperator h = build_harper(space);
  DisorderModel dm = make_disorder(c, seed);
  if (dm.kind == DisorderModel::Kind::None) return h;
  return apply_disorder(h, dm);
}

// ---------------------------------------------------------------------------
// Persistence

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::Config, "cannot open " + p.string());
  out << content;
  if (!out.good())
    throw Error(ErrorKind::Config, "write failed on " + p.string());
  std::fprintf(stderr, "wrote %s\n", p.string().c_str());
}

std::string csv_header(const std::string& kind, const std::string& hash,
                       const std::string& columns) {
  std::string s;
  s += "# " + std::string(kArtifactVersion) + " " + kind + "\n";
  s += "# config " + hash + "\n";
  s += "# columns " + columns + "\n";
  return s;
}

json config_json(const RunConfig& c, const std::string& hash) {
  json j;
  j["artifact"] = kArtifactVersion;
  j["config_hash"] = hash;
  j["genus"] = c.genus;
  j["theta"] = c.theta;
  j["theta_grid"] = c.theta_grid;
  j["radius"] = c.radius;
  j["margin"] = c.margin;
  j["disorder"] = c.disorder;
  j["w"] = c.W;
  j["lambda"] = c.lambda;
  j["alpha"] = c.alpha;
  j["seed0"] = c.seed0;
  j["seeds"] = c.seeds;
  j["energies"] = c.energies;
  j["gap_min"] = c.gap_min;
  j["plateau_tol"] = c.plateau_tol;
  j["kappa"] = c.kappa;
  j["x0"] = c.x0;
  j["instances"] = c.instances;
  return j;
}

// ---------------------------------------------------------------------------
// SVG figures (no plotting dependency: hand-rolled, deterministic)

struct Frame {
  double x_lo, x_hi, y_lo, y_hi;       // data window
  double px0, px1, py0, py1;           // plot rectangle in pixels
  double x(double v) const {
    return px0 + (v - x_lo) / (x_hi - x_lo) * (px1 - px0);
  }
  double y(double v) const {
    return py1 - (v - y_lo) / (y_hi - y_lo) * (py1 - py0);
  }
};

double nice_step(double range) {
  if (range <= 0) return 1.0;
  double raw = range / 5.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double frac = raw / mag;
  double step = frac < 1.5 ? 1.0 : frac < 3.5 ? 2.0 : frac < 7.5 ? 5.0 : 10.0;
  return step * mag;
}

void pad_window(double& lo, double& hi) {
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
    return;
  }
  double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
}

std::string svg_open(int w, int h, const std::string& hash,
                     const std::string& kind) {
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
       std::to_string(w) + "\" height=\"" + std::to_string(h) + "\">\n";
  s += "<!-- " + std::string(kArtifactVersion) + " " + kind + " config " +
       hash + " -->\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return s;
}

std::string svg_axes(const Frame& f, const std::string& xlabel,
                     const std::string& ylabel) {
  std::string s;
  s += "<g stroke=\"#333\" stroke-width=\"1\" font-family=\"monospace\" "
       "font-size=\"11\">\n";
  s += "<line x1=\"" + fmtg(f.px0) + "\" y1=\"" + fmtg(f.py1) + "\" x2=\"" +
       fmtg(f.px1) + "\" y2=\"" + fmtg(f.py1) + "\"/>\n";
  s += "<line x1=\"" + fmtg(f.px0) + "\" y1=\"" + fmtg(f.py0) + "\" x2=\"" +
       fmtg(f.px0) + "\" y2=\"" + fmtg(f.py1) + "\"/>\n";
  double xs = nice_step(f.x_hi - f.x_lo);
  for (double t = std::ceil(f.x_lo / xs) * xs; t <= f.x_hi + 1e-12 * xs;
       t += xs) {
    s += "<line x1=\"" + fmtg(f.x(t)) + "\" y1=\"" + fmtg(f.py1) + "\" x2=\"" +
         fmtg(f.x(t)) + "\" y2=\"" + fmtg(f.py1 + 5) + "\"/>\n";
    s += "<text x=\"" + fmtg(f.x(t)) + "\" y=\"" + fmtg(f.py1 + 18) +
         "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#333\">" +
         fmtg(t, 4) + "</text>\n";
  }
  double ys = nice_step(f.y_hi - f.y_lo);
  for (double t = std::ceil(f.y_lo / ys) * ys; t <= f.y_hi + 1e-12 * ys;
       t += ys) {
    s += "<line x1=\"" + fmtg(f.px0 - 5) + "\" y1=\"" + fmtg(f.y(t)) +
         "\" x2=\"" + fmtg(f.px0) + "\" y2=\"" + fmtg(f.y(t)) + "\"/>\n";
    s += "<text x=\"" + fmtg(f.px0 - 8) + "\" y=\"" + fmtg(f.y(t) + 4) +
         "\" text-anchor=\"end\" stroke=\"none\" fill=\"#333\">" + fmtg(t, 4) +
         "</text>\n";
  }
  s += "<text x=\"" + fmtg(0.5 * (f.px0 + f.px1)) + "\" y=\"" +
       fmtg(f.py1 + 34) + "\" text-anchor=\"middle\" stroke=\"none\" "
       "fill=\"#333\">" + xlabel + "</text>\n";
  s += "<text x=\"14\" y=\"" + fmtg(0.5 * (f.py0 + f.py1)) +
       "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#333\" "
       "transform=\"rotate(-90 14 " + fmtg(0.5 * (f.py0 + f.py1)) + ")\">" +
       ylabel + "</text>\n";
  s += "</g>\n";
  return s;
}

// ---------------------------------------------------------------------------
// validate

struct SuiteResult {
  std::string name;
  int instances = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

int cmd_validate(const RunConfig& c) {
  const std::string hash = fnv1a_hex(canonical_config(c));
  SurfaceGroup g(c.genus);
  Ball ball(g, 3);
  MagneticData data(g, c.theta);
  TruncatedSpace space(ball, data, 0);
  std::mt19937_64 rng(c.seed0);
  std::uniform_int_distribution<int> pick(0, ball.size() - 1);
  std::vector<SuiteResult> suites;
  const double tol = 1e-9;

  // Presentation: generators are unimodular, the relator closes projectively
  // and reduces to the empty word, and letter * inverse cancels.
  {
    SuiteResult r{"relator-closure", 0, 0.0, tol, false, ""};
    for (int l = 0; l < g.alphabet_size(); ++l)
      r.max_residual =
          std::max(r.max_residual, std::abs(g.generator(l).det() - 1.0));
    Isometry rel = Isometry::identity();
    const Word& relator = g.relator();
    for (size_t i = 0; i < relator.size(); ++i) {
      Isometry m = g.generator(relator[i]);
      if (c.fault_inject && i == relator.size() / 2) {
        // Corrupted presentation: one side-pairing matrix replaced by
        // itself composed with a small unimodular boost.
        m = m.compose(Isometry(1.0 + 1e-3, 0.0, 0.0, 1.0 / (1.0 + 1e-3)));
        r.note = "fault injected: generator " +
                 letter_name(relator[i]) + " perturbed";
      }
      rel = rel.compose(m);
      rel.renormalize();
    }
    r.max_residual =
        std::max(r.max_residual, rel.projective_distance(Isometry::identity()));
    if (!g.reduce(g.relator()).empty()) r.max_residual = 1.0;
    for (int l = 0; l < g.alphabet_size(); ++l) {
      Word w{static_cast<std::uint8_t>(l),
             static_cast<std::uint8_t>(inverse_letter(l))};
      if (!g.reduce(w).empty()) r.max_residual = 1.0;
    }
    r.instances = g.alphabet_size() + 1;
    r.pass = r.max_residual < r.tolerance;
    suites.push_back(r);
  }

  // Holonomy identity: the transport product around a geodesic triangle of
  // orbit points equals exp(i theta area).
  {
    SuiteResult r{"holonomy-identity", 0, 0.0, tol, false, ""};
    while (r.instances < c.instances) {
      HPoint v = ball.orbit_point(pick(rng));
      HPoint w = ball.orbit_point(pick(rng));
      HPoint z = ball.orbit_point(pick(rng));
      TransportPhase tvw = parallel_transport(c.theta, v, w);
      TransportPhase twz = parallel_transport(c.theta, w, z);
      TransportPhase tvz = parallel_transport(c.theta, v, z);
      if (tvw.branch_ambiguous || twz.branch_ambiguous || tvz.branch_ambiguous)
        continue;  // resample: principal branch undefined on the cut
      cd lhs = std::conj(tvz.value) * tvw.value * twz.value;
      cd rhs = holonomy(c.theta, v, w, z);
      r.max_residual = std::max(r.max_residual, std::abs(lhs - rhs));
      cd area_form =
          std::polar(1.0, c.theta * signed_triangle_area(v, w, z));
      r.max_residual = std::max(r.max_residual, std::abs(rhs - area_form));
      ++r.instances;
    }
    r.pass = r.max_residual < r.tolerance;
    suites.push_back(r);
  }

  // Real 2-cocycle identity for the triangle-area cocycle.
  {
    SuiteResult r{"area-cocycle-identity", 0, 0.0, tol, false, ""};
    for (int k = 0; k < c.instances; ++k) {
      const Word& w1 = ball.word(pick(rng));
      const Word& w2 = ball.word(pick(rng));
      const Word& w3 = ball.word(pick(rng));
      Word w12 = w1, w23 = w2;
      w12.insert(w12.end(), w2.begin(), w2.end());
      w23.insert(w23.end(), w3.begin(), w3.end());
      double lhs = data.area_cocycle(w1, w2) + data.area_cocycle(w12, w3);
      double rhs = data.area_cocycle(w1, w23) + data.area_cocycle(w2, w3);
      r.max_residual = std::max(r.max_residual, std::abs(lhs - rhs));
      ++r.instances;
    }
    r.pass = r.max_residual < r.tolerance;
    suites.push_back(r);
  }

  // Multiplier 2-cocycle identity.
  {
    SuiteResult r{"sigma-cocycle-identity", 0, 0.0, tol, false, ""};
    for (int k = 0; k < c.instances; ++k) {
      const Word& w1 = ball.word(pick(rng));
      const Word& w2 = ball.word(pick(rng));
      const Word& w3 = ball.word(pick(rng));
      Word w12 = w1, w23 = w2;
      w12.insert(w12.end(), w2.begin(), w2.end());
      w23.insert(w23.end(), w3.begin(), w3.end());
      cd lhs = data.multiplier(w1, w2) * data.multiplier(w12, w3);
      cd rhs = data.multiplier(w1, w23) * data.multiplier(w2, w3);
      r.max_residual = std::max(r.max_residual, std::abs(lhs - rhs));
      ++r.instances;
    }
    r.pass = r.max_residual < r.tolerance;
    suites.push_back(r);
  }

  // Projective representation law U(g1)U(g2) = sigma(g1,g2) U(g1 g2) on
  // columns whose images stay inside the ball.
  {
    SuiteResult r{"projective-law", 0, 0.0, tol, false, ""};
    std::uniform_int_distribution<int> pick2(0, ball.size_at(2) - 1);
    std::map<int, TruncatedOperator> cache;
    auto rep = [&](int idx) -> const TruncatedOperator& {
      auto it = cache.find(idx);
      if (it == cache.end())
        it = cache.emplace(idx, left_regular(space, ball.word(idx))).first;
      return it->second;
    };
    while (r.instances < c.instances) {
      int i1 = pick2(rng), i2 = pick2(rng);
      int i12 = ball.product(i1, i2);
      if (i12 < 0) continue;
      int t = pick(rng);
      if (ball.product(i2, t) < 0 || ball.product(i12, t) < 0 ||
          ball.product(i1, ball.product(i2, t)) < 0)
        continue;  // truncated column: the law only holds untruncated
      Eigen::VectorXcd e = Eigen::VectorXcd::Zero(ball.size());
      e(t) = 1.0;
      Eigen::VectorXcd lhs = rep(i1).sparse * (rep(i2).sparse * e);
      Eigen::VectorXcd rhs =
          data.multiplier(ball.word(i1), ball.word(i2)) * (rep(i12).sparse * e);
      r.max_residual = std::max(r.max_residual, (lhs - rhs).norm());
      ++r.instances;
    }
    r.pass = r.max_residual < r.tolerance;
    suites.push_back(r);
  }

  // Hermiticity of the Harper operator, sampled entrywise.
  {
    SuiteResult r{"hermiticity", 0, 0.0, 1e-12, false, ""};
    TruncatedOperator h = make_hamiltonian(space, c, c.seed0);
    DenseMatrix hd = h.to_dense();
    for (int k = 0; k < c.instances; ++k) {
      int i = pick(rng), j = pick(rng);
      r.max_residual =
          std::max(r.max_residual, std::abs(hd(i, j) - std::conj(hd(j, i))));
      ++r.instances;
    }
    r.pass = r.max_residual < r.tolerance;
    suites.push_back(r);
  }

  // Trivial-multiplier fast path at theta = 0: sigma is exactly 1.
  if (c.theta == 0.0) {
    SuiteResult r{"sigma-trivial-fast-path", 0, 0.0, 0.0, false,
                  "theta = 0: multiplier identically one"};
    for (int k = 0; k < c.instances; ++k) {
      cd s = data.multiplier(ball.word(pick(rng)), ball.word(pick(rng)));
      r.max_residual = std::max(r.max_residual, std::abs(s - cd(1.0, 0.0)));
      ++r.instances;
    }
    r.pass = r.max_residual == 0.0;
    suites.push_back(r);
  }

  bool all_pass = true;
  std::string failing;
  for (const auto& r : suites) {
    all_pass = all_pass && r.pass;
    if (!r.pass && failing.empty()) failing = r.name;
    std::printf("%-24s %5d instances  max residual %.3e  %s%s%s\n",
                r.name.c_str(), r.instances, r.max_residual,
                r.pass ? "pass" : "FAIL", r.note.empty() ? "" : "  -- ",
                r.note.c_str());
  }
  std::printf("validate: %s\n", all_pass ? "all suites pass" : "FAILURES");

  if (!c.no_json) {
    std::filesystem::create_directories(c.out);
    json j = json::object();
    j["config"] = config_json(c, hash);
    j["suites"] = json::array();
    for (const auto& r : suites) {
      json s;
      s["name"] = r.name;
      s["instances"] = r.instances;
      s["max_residual"] = r.max_residual;
      s["tolerance"] = r.tolerance;
      s["pass"] = r.pass;
      if (!r.note.empty()) s["note"] = r.note;
      j["suites"].push_back(s);
    }
    j["all_pass"] = all_pass;
    if (!failing.empty()) j["failing_invariant"] = failing;
    write_file(std::filesystem::path(c.out) / "validate.json", j.dump(2) + "\n");
  }
  return all_pass ? 0 : 3;
}

// ---------------------------------------------------------------------------
// butterfly

int cmd_butterfly(const RunConfig& c) {
  if (c.radius < 2)
    throw Error(ErrorKind::Config, "butterfly needs radius >= 2");
  const std::string hash = fnv1a_hex(canonical_config(c));
  std::vector<double> grid = parse_theta_grid(c);
  SurfaceGroup g(c.genus);
  Ball ball(g, c.radius);

  std::string csv = csv_header("butterfly", hash, "theta,eigenvalue");
  std::vector<std::pair<double, double>> points;
  points.reserve(grid.size() * ball.size());
  for (size_t k = 0; k < grid.size(); ++k) {
    MagneticData data(g, grid[k]);
    TruncatedSpace space(ball, data, c.margin);
    SpectralData sd = eigensolve(make_hamiltonian(space, c, c.seed0));
    for (int i = 0; i < sd.eigenvalues.size(); ++i) {
      csv += fmt(grid[k]) + "," + fmt(sd.eigenvalues(i)) + "\n";
      points.emplace_back(grid[k], sd.eigenvalues(i));
    }
    std::fprintf(stderr, "theta %zu/%zu done\n", k + 1, grid.size());
  }
  std::filesystem::create_directories(c.out);
  if (!c.no_csv)
    write_file(std::filesystem::path(c.out) / "butterfly.csv", csv);

  if (!c.no_svg) {
    Frame f{grid.front(), grid.back(), 0, 0, 70, 820, 20, 460};
    for (const auto& p : points) {
      f.y_lo = std::min(f.y_lo, p.second);
      f.y_hi = std::max(f.y_hi, p.second);
    }
    pad_window(f.x_lo, f.x_hi);
    pad_window(f.y_lo, f.y_hi);
    std::string svg = svg_open(860, 520, hash, "butterfly");
    svg += svg_axes(f, "theta", "energy");
    svg += "<g fill=\"#1a4f8a\" fill-opacity=\"0.55\">\n";
    for (const auto& p : points)
      svg += "<circle cx=\"" + fmtg(f.x(p.first)) + "\" cy=\"" +
             fmtg(f.y(p.second)) + "\" r=\"1\"/>\n";
    svg += "</g>\n</svg>\n";
    write_file(std::filesystem::path(c.out) / "butterfly.svg", svg);
  }
  std::printf("butterfly: %zu theta points, %d eigenvalues each\n",
              grid.size(), ball.size());
  return 0;
}

// ---------------------------------------------------------------------------
// spectrum

int cmd_spectrum(const RunConfig& c) {
  if (c.radius < 2)
    throw Error(ErrorKind::Config, "spectrum needs radius >= 2");
  const std::string hash = fnv1a_hex(canonical_config(c));
  SurfaceGroup g(c.genus);
  Ball ball(g, c.radius);
  MagneticData data(g, c.theta);
  TruncatedSpace space(ball, data, c.margin);
  SpectralData sd = eigensolve(make_hamiltonian(space, c, c.seed0));
  std::vector<GapInterval> gaps = find_gaps_weighted(sd, c.gap_min);

  std::filesystem::create_directories(c.out);
  if (!c.no_csv) {
    std::string csv = csv_header("spectrum", hash, "k,eigenvalue,interior_weight");
    for (int i = 0; i < sd.eigenvalues.size(); ++i)
      csv += std::to_string(i) + "," + fmt(sd.eigenvalues(i)) + "," +
             fmt(sd.interior_weight(i)) + "\n";
    write_file(std::filesystem::path(c.out) / "spectrum.csv", csv);
  }
  if (!c.no_json) {
    json j;
    j["config"] = config_json(c, hash);
    j["dimension"] = ball.size();
    j["hermiticity_residual"] = sd.hermiticity_residual;
    j["eigenvalues"] = json::array();
    for (int i = 0; i < sd.eigenvalues.size(); ++i)
      j["eigenvalues"].push_back(sd.eigenvalues(i));
    j["gaps"] = json::array();
    for (const auto& gap : gaps) {
      json row;
      row["lower"] = gap.lower;
      row["upper"] = gap.upper;
      row["width"] = gap.width();
      row["ids_at_midpoint"] = ids(sd, gap.midpoint());
      j["gaps"].push_back(row);
    }
    write_file(std::filesystem::path(c.out) / "spectrum.json", j.dump(2) + "\n");
  }
  if (!c.no_svg) {
    Frame f{sd.eigenvalues(0), sd.eigenvalues(sd.eigenvalues.size() - 1),
            0.0, 1.0, 70, 820, 20, 460};
    pad_window(f.x_lo, f.x_hi);
    std::string svg = svg_open(860, 520, hash, "spectrum");
    svg += "<g fill=\"#d9e8f5\">\n";
    for (const auto& gap : gaps)
      svg += "<rect x=\"" + fmtg(f.x(gap.lower)) + "\" y=\"" + fmtg(f.py0) +
             "\" width=\"" + fmtg(f.x(gap.upper) - f.x(gap.lower)) +
             "\" height=\"" + fmtg(f.py1 - f.py0) + "\"/>\n";
    svg += "</g>\n";
    svg += svg_axes(f, "energy", "");
    svg += "<g stroke=\"#1a4f8a\" stroke-opacity=\"0.6\">\n";
    for (int i = 0; i < sd.eigenvalues.size(); ++i)
      svg += "<line x1=\"" + fmtg(f.x(sd.eigenvalues(i))) + "\" y1=\"" +
             fmtg(f.y(0.15)) + "\" x2=\"" + fmtg(f.x(sd.eigenvalues(i))) +
             "\" y2=\"" + fmtg(f.y(0.85)) + "\"/>\n";
    svg += "</g>\n</svg>\n";
    write_file(std::filesystem::path(c.out) / "spectrum.svg", svg);
  }
  std::printf("spectrum: %d eigenvalues in [%.6f, %.6f], %zu gaps above %.3g\n",
              ball.size(), sd.eigenvalues(0),
              sd.eigenvalues(sd.eigenvalues.size() - 1), gaps.size(),
              c.gap_min);
  return 0;
}

// ---------------------------------------------------------------------------
// conductance

int cmd_conductance(const RunConfig& c) {
  if (c.radius < 2)
    throw Error(ErrorKind::Config, "conductance needs radius >= 2");
  const std::string hash = fnv1a_hex(canonical_config(c));
  SurfaceGroup g(c.genus);
  Ball ball(g, c.radius);
  MagneticData data(g, c.theta);
  TruncatedSpace space(ball, data, c.margin);
  std::fprintf(stderr, "solving %d x %d section...\n", ball.size(), ball.size());
  SpectralData sd = eigensolve(make_hamiltonian(space, c, c.seed0));

  std::vector<double> grid = parse_list(c.energies, "--energies");
  if (grid.empty())
    for (const auto& gap : find_gaps_weighted(sd, c.gap_min))
      grid.push_back(gap.midpoint());
  std::sort(grid.begin(), grid.end());

  FredholmData f = fredholm_phase(ball, HPoint{parse_x0(c), Model::Disk});
  SweepOptions opt;
  opt.gap_min = c.gap_min;

  std::vector<EnergyReport> rows;
  json failures = json::array();
  int failure_code = 0;
  for (size_t k = 0; k < grid.size(); ++k) {
    try {
      auto part = sweep_conductance(sd, f, {grid[k]}, opt);
      rows.push_back(part.front());
    } catch (const Error& e) {
      json fail;
      fail["energy"] = grid[k];
      fail["kind"] = to_string(e.kind());
      fail["message"] = e.what();
      failures.push_back(fail);
      if (failure_code == 0) failure_code = code_for(e.kind());
    }
    std::fprintf(stderr, "energy %zu/%zu done\n", k + 1, grid.size());
  }
  PlateauReport rep = plateau_report(rows, c.genus, c.kappa, c.plateau_tol);

  std::filesystem::create_directories(c.out);
  if (!c.no_csv) {
    std::string csv = csv_header(
        "conductance", hash,
        "energy,kubo,tr_c,index,psi,ids,in_domain,plateau_id,rank,boundary_leak");
    for (const auto& r : rows)
      csv += fmt(r.energy) + "," + fmt(r.kubo_value) + "," + fmt(r.trc_value) +
             "," + fmt(r.index) + "," + fmt(r.psi) + "," + fmt(r.ids) + "," +
             std::to_string(r.in_domain ? 1 : 0) + "," +
             std::to_string(r.plateau_id) + "," + std::to_string(r.rank) +
             "," + fmt(r.boundary_leak) + "\n";
    write_file(std::filesystem::path(c.out) / "conductance.csv", csv);
  }
  if (!c.no_json) {
    json j;
    j["config"] = config_json(c, hash);
    j["rows"] = json::array();
    for (const auto& r : rows) {
      json row;
      row["energy"] = r.energy;
      row["ids"] = r.ids;
      row["rank"] = r.rank;
      row["well_conditioned"] = r.well_conditioned;
      row["kubo"] = r.kubo_value;
      row["kubo_residual"] = r.kubo_residual;
      row["tr_c"] = r.trc_value;
      row["trc_residual"] = r.trc_residual;
      row["index"] = r.index;
      row["psi"] = r.psi;
      row["xi_plus"] = r.xi_plus;
      row["xi_minus"] = r.xi_minus;
      row["boundary_leak"] = r.boundary_leak;
      row["reliable_index"] = r.reliable_index;
      row["hs_norm"] = r.hs_norm;
      row["sobolev"] = r.sobolev;
      row["in_domain"] = r.in_domain;
      row["extraction_residual"] = r.extraction_residual;
      row["support_radius"] = r.support_radius;
      row["plateau_id"] = r.plateau_id;
      j["rows"].push_back(row);
    }
    j["failures"] = failures;
    json p;
    p["kappa"] = rep.kappa;
    p["plateau_tol"] = rep.plateau_tol;
    p["psi_max"] = rep.psi_max;
    p["bound"] = rep.bound;
    p["bound_satisfied"] = rep.bound_satisfied;
    p["psi_monotone"] = rep.psi_monotone;
    p["plateaus"] = json::array();
    for (const auto& pl : rep.plateaus) {
      json row;
      row["lo"] = pl.lo;
      row["hi"] = pl.hi;
      row["value"] = pl.value;
      row["points"] = pl.points;
      p["plateaus"].push_back(row);
    }
    j["plateau_report"] = p;
    write_file(std::filesystem::path(c.out) / "conductance.json",
               j.dump(2) + "\n");
  }
  if (!c.no_svg && !rows.empty()) {
    Frame f2{rows.front().energy, rows.back().energy, 0, 0, 70, 820, 20, 460};
    for (const auto& r : rows) {
      f2.y_lo = std::min(f2.y_lo, r.kubo_value);
      f2.y_hi = std::max(f2.y_hi, r.kubo_value);
    }
    pad_window(f2.x_lo, f2.x_hi);
    pad_window(f2.y_lo, f2.y_hi);
    std::string svg = svg_open(860, 520, hash, "conductance");
    svg += svg_axes(f2, "energy", "kubo conductance");
    svg += "<g stroke=\"#1a4f8a\" stroke-width=\"1.5\" fill=\"none\">\n";
    std::string path;
    for (size_t i = 0; i < rows.size(); ++i) {
      double x = f2.x(rows[i].energy), y = f2.y(rows[i].kubo_value);
      if (i == 0)
        path += "M" + fmtg(x) + " " + fmtg(y);
      else
        path += " H" + fmtg(x) + " V" + fmtg(y);
    }
    svg += "<path d=\"" + path + "\"/>\n</g>\n";
    svg += "<g stroke=\"#1a4f8a\">\n";
    for (const auto& r : rows)
      svg += "<circle cx=\"" + fmtg(f2.x(r.energy)) + "\" cy=\"" +
             fmtg(f2.y(r.kubo_value)) + "\" r=\"3\" fill=\"" +
             (r.in_domain ? "#1a4f8a" : "white") + "\"/>\n";
    svg += "</g>\n</svg>\n";
    write_file(std::filesystem::path(c.out) / "conductance.svg", svg);
  }

  std::printf("conductance: %zu rows, %zu failures, %zu plateaus, "
              "bound %d (%s), psi monotone %s\n",
              rows.size(), failures.size(), rep.plateaus.size(), rep.bound,
              rep.bound_satisfied ? "satisfied" : "VIOLATED",
              rep.psi_monotone ? "yes" : "NO");
  if (failure_code == 0 && !rep.bound_satisfied) failure_code = 3;
  return failure_code;
}

// ---------------------------------------------------------------------------
// average

int cmd_average(const RunConfig& c) {
  const std::string hash = fnv1a_hex(canonical_config(c));
  std::vector<double> grid = parse_list(c.energies, "--energies");
  if (grid.empty())
    throw Error(ErrorKind::Config, "average needs --energies with one entry");
  if (c.disorder == "ap")
    throw Error(ErrorKind::Config,
                "average supports --disorder none or iid");

  AverageConfig a;
  a.genus = c.genus;
  a.theta = c.theta;
  a.radius = c.radius;
  a.margin = c.margin;
  a.energy = grid.front();
  a.gap_min = c.gap_min;
  a.w = (c.disorder == "iid") ? c.W : 0.0;
  a.seed0 = c.seed0;
  a.samples = c.seeds;
  a.x0 = parse_x0(c);
  AverageReport rep = disorder_average(a);

  std::filesystem::create_directories(c.out);
  if (!c.no_csv) {
    std::string csv = csv_header("average", hash,
                                 "sample,seed,kubo,tr_c,index,psi,rounded");
    for (size_t k = 0; k < rep.samples.size(); ++k)
      csv += std::to_string(k) + "," + std::to_string(c.seed0 + k) + "," +
             fmt(rep.samples[k].kubo_value) + "," +
             fmt(rep.samples[k].trc_value) + "," + fmt(rep.samples[k].index) +
             "," + fmt(rep.samples[k].psi) + "," +
             std::to_string(rep.rounded[k]) + "\n";
    write_file(std::filesystem::path(c.out) / "average.csv", csv);
  }
  if (!c.no_json) {
    json j;
    j["config"] = config_json(c, hash);
    j["energy"] = a.energy;
    j["samples"] = json::array();
    for (size_t k = 0; k < rep.samples.size(); ++k) {
      json row;
      row["sample"] = k;
      row["seed"] = c.seed0 + k;
      row["kubo"] = rep.samples[k].kubo_value;
      row["tr_c"] = rep.samples[k].trc_value;
      row["index"] = rep.samples[k].index;
      row["psi"] = rep.samples[k].psi;
      row["ids"] = rep.samples[k].ids;
      row["rank"] = rep.samples[k].rank;
      row["rounded_index"] = rep.rounded[k];
      j["samples"].push_back(row);
    }
    j["mean_kubo"] = rep.mean_kubo;
    j["se_kubo"] = rep.se_kubo;
    j["mean_index"] = rep.mean_index;
    j["index_constant"] = rep.index_constant;
    write_file(std::filesystem::path(c.out) / "average.json", j.dump(2) + "\n");
  }
  std::printf("average: %d samples, mean kubo %.6e (se %.3e), "
              "rounded index %s\n",
              a.samples, rep.mean_kubo, rep.se_kubo,
              rep.index_constant ? "constant" : "VARIES");
  return rep.index_constant ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Magnetic Schroedinger operators on hyperbolic Cayley graphs: "
               "spectra, butterflies, and quantized Hall conductance"};
  app.set_config("--config", "", "key=value config file; flags override");
  RunConfig c;
  app.add_option("--genus", c.genus, "surface genus (>= 2)")
      ->capture_default_str();
  app.add_option("--theta", c.theta, "flux density")->capture_default_str();
  app.add_option("--theta-grid", c.theta_grid,
                 "butterfly grid 'lo:hi:n' (overrides --theta)");
  app.add_option("--radius", c.radius, "truncation ball radius")
      ->capture_default_str();
  app.add_option("--margin", c.margin, "interior margin (shells)")
      ->capture_default_str();
  app.add_option("--disorder", c.disorder, "none | iid | ap")
      ->capture_default_str();
  app.add_option("--W", c.W, "iid disorder half-width")->capture_default_str();
  app.add_option("--lambda", c.lambda, "almost-periodic amplitude")
      ->capture_default_str();
  app.add_option("--alpha", c.alpha, "almost-periodic frequencies, 2g comma values");
  app.add_option("--seed0", c.seed0, "base seed")->capture_default_str();
  app.add_option("--seeds", c.seeds, "ensemble size (average)")
      ->capture_default_str();
  app.add_option("--energies", c.energies,
                 "comma list; empty selects weighted-gap midpoints");
  app.add_option("--gap-min", c.gap_min, "minimum reported gap width")
      ->capture_default_str();
  app.add_option("--plateau-tol", c.plateau_tol,
                 "plateau flatness tolerance (<0: 0.05*2(g-1)*kappa)")
      ->capture_default_str();
  app.add_option("--kappa", c.kappa, "frozen trace normalization")
      ->capture_default_str();
  app.add_option("--x0", c.x0, "marked point 're,im' (disk chart)")
      ->capture_default_str();
  app.add_option("--instances", c.instances, "validate suite instances")
      ->capture_default_str();
  app.add_option("--out", c.out, "output directory")->capture_default_str();
  app.add_flag("--no-csv", c.no_csv, "skip CSV outputs");
  app.add_flag("--no-json", c.no_json, "skip JSON outputs");
  app.add_flag("--no-svg", c.no_svg, "skip SVG outputs");
  auto* fault = app.add_flag("--fault-inject", c.fault_inject,
                             "validate: corrupt the presentation");
  fault->group("");  // hidden

  auto* v = app.add_subcommand("validate", "run the invariant suites");
  auto* b = app.add_subcommand("butterfly", "spectrum vs theta sweep");
  auto* s = app.add_subcommand("spectrum", "one spectrum with gaps");
  auto* k = app.add_subcommand("conductance", "full conductance sweep");
  auto* a = app.add_subcommand("average", "disorder ensemble at one energy");
  for (auto* sub : {v, b, s, k, a}) sub->fallthrough();
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (c.genus < 2)
      throw Error(ErrorKind::Config, "genus must be at least 2");
    if (!std::isfinite(c.theta))
      throw Error(ErrorKind::Config, "theta must be finite");
    if (v->parsed()) return cmd_validate(c);
    if (b->parsed()) return cmd_butterfly(c);
    if (s->parsed()) return cmd_spectrum(c);
    if (k->parsed()) return cmd_conductance(c);
    if (a->parsed()) return cmd_average(c);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", to_string(e.kind()), e.what());
    return code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
