#include "hyphall/operators.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace hyphall {

namespace {

Word reduced_concat(const SurfaceGroup& g, const Word& a, const Word& b) {
  Word w = a;
  w.insert(w.end(), b.begin(), b.end());
  return g.reduce(w);
}

// Column c of A as a dense vector without materializing the whole matrix.
Eigen::VectorXcd column_of(const TruncatedOperator& A, int c) {
  if (!A.is_sparse) return A.dense.col(c);
  Eigen::VectorXcd col = Eigen::VectorXcd::Zero(A.sparse.rows());
  for (SparseMatrix::InnerIterator it(A.sparse, c); it; ++it) {
    col(it.row()) = it.value();
  }
  return col;
}

}  // namespace

TruncatedSpace::TruncatedSpace(const Ball& ball, const MagneticData& data,
                               int margin)
    : ball_(&ball), data_(&data), cocycle_(ball, data), margin_(margin) {
  if (margin < 0 || margin > ball.radius()) {
    throw Error(ErrorKind::Config, "interior margin must lie in [0, radius]");
  }
  interior_dim_ = ball.size_at(ball.radius() - margin);
}

EquivariantKernel EquivariantKernel::delta(const Word& w, Complex amp) {
  EquivariantKernel k;
  k.add(w, amp);
  return k;
}

void EquivariantKernel::add(const Word& w, Complex amp) {
  auto [it, inserted] = terms_.try_emplace(w, amp);
  if (!inserted) it->second += amp;
}

void EquivariantKernel::prune(double tol) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) < tol) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
}

Complex EquivariantKernel::at(const Word& w) const {
  auto it = terms_.find(w);
  return it == terms_.end() ? Complex(0.0, 0.0) : it->second;
}

int EquivariantKernel::radius() const {
  int r = 0;
  for (const auto& [w, v] : terms_) r = std::max(r, static_cast<int>(w.size()));
  return r;
}

std::vector<double> EquivariantKernel::shell_profile() const {
  std::vector<double> prof(radius() + 1, 0.0);
  for (const auto& [w, v] : terms_) {
    auto& slot = prof[w.size()];
    slot = std::max(slot, std::abs(v));
  }
  return prof;
}

TruncatedOperator left_regular(const TruncatedSpace& space, const Word& gamma) {
  const Ball& ball = space.ball();
  const int n = space.dimension();
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(n);
  int gi = ball.find(gamma);
  if (gi >= 0) {
    for (int t = 0; t < n; ++t) {
      int r = ball.product(gi, t);
      if (r < 0) continue;
      trips.emplace_back(r, t, space.cocycle().sigma(gi, t));
    }
  } else {
    // gamma outside the ball: some products may still land inside.
    const SurfaceGroup& g = space.data().group();
    Word gw = g.reduce(gamma);
    for (int t = 0; t < n; ++t) {
      int r = ball.find(reduced_concat(g, gw, ball.word(t)));
      if (r < 0) continue;
      trips.emplace_back(r, t, space.data().multiplier(gw, ball.word(t)));
    }
  }
  TruncatedOperator op;
  op.space = &space;
  op.is_sparse = true;
  op.sparse.resize(n, n);
  op.sparse.setFromTriplets(trips.begin(), trips.end());
  op.sparse.makeCompressed();
  return op;
}

TruncatedOperator matrix_from_kernel(const TruncatedSpace& space,
                                     const EquivariantKernel& a) {
  const Ball& ball = space.ball();
  const SurfaceGroup& g = space.data().group();
  const int n = space.dimension();
  std::vector<Eigen::Triplet<Complex>> trips;
  for (const auto& [gw, amp] : a.terms()) {
    int gi = ball.find(gw);
    for (int t = 0; t < n; ++t) {
      int r;
      Complex phase;
      if (gi >= 0) {
        r = ball.product(gi, t);
        if (r < 0) continue;
        phase = space.cocycle().sigma(gi, t);
      } else {
        r = ball.find(reduced_concat(g, gw, ball.word(t)));
        if (r < 0) continue;
        phase = space.data().multiplier(gw, ball.word(t));
      }
      trips.emplace_back(r, t, amp * phase);
    }
  }
  TruncatedOperator op;
  op.space = &space;
  op.is_sparse = true;
  op.sparse.resize(n, n);
  op.sparse.setFromTriplets(trips.begin(), trips.end());
  op.sparse.makeCompressed();
  return op;
}

EquivariantKernel twisted_convolve(const EquivariantKernel& a,
                                   const EquivariantKernel& b,
                                   const MagneticData& data) {
  const SurfaceGroup& g = data.group();
  EquivariantKernel out;
  for (const auto& [g1, v1] : a.terms()) {
    for (const auto& [g2, v2] : b.terms()) {
      Word w = reduced_concat(g, g1, g2);
      out.add(w, v1 * v2 * data.multiplier(g1, g2));
    }
  }
  out.prune();
  return out;
}

EquivariantKernel kernel_adjoint(const EquivariantKernel& a) {
  EquivariantKernel out;
  for (const auto& [w, v] : a.terms()) {
    out.add(word_inverse(w), std::conj(v));
  }
  return out;
}

KernelExtraction kernel_from_operator(const TruncatedOperator& A,
                                      double threshold) {
  const TruncatedSpace& space = *A.space;
  const Ball& ball = space.ball();
  const int n = space.dimension();
  const int ni = space.interior_dimension();

  KernelExtraction out;
  std::vector<Complex> amp(n, Complex(0.0, 0.0));
  std::vector<Eigen::VectorXcd> cols(ni);
  for (int s = 0; s < ni; ++s) cols[s] = column_of(A, s);

  for (int gi = 0; gi < n; ++gi) {
    Complex sum(0.0, 0.0);
    int count = 0;
    for (int s = 0; s < ni; ++s) {
      int r = ball.product(gi, s);
      if (r < 0) continue;
      sum += cols[s](r) * std::conj(space.cocycle().sigma(gi, s));
      ++count;
    }
    amp[gi] = sum / static_cast<double>(count);  // s = e always contributes
  }

  // Residual: largest interior-column entry the extracted kernel misses.
  double residual = 0.0;
  for (int s = 0; s < ni; ++s) {
    Eigen::VectorXcd rec = Eigen::VectorXcd::Zero(n);
    for (int gi = 0; gi < n; ++gi) {
      int r = ball.product(gi, s);
      if (r < 0) continue;
      rec(r) += amp[gi] * space.cocycle().sigma(gi, s);
    }
    residual = std::max(residual, (cols[s] - rec).cwiseAbs().maxCoeff());
  }

  for (int gi = 0; gi < n; ++gi) out.kernel.add(ball.word(gi), amp[gi]);
  out.kernel.prune();
  out.residual = residual;
  out.equivariant = residual <= threshold;
  return out;
}

Complex canonical_trace(const EquivariantKernel& a) { return a.at(Word{}); }

std::string kernel_json(const EquivariantKernel& a) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [w, v] : a.terms()) {
    arr.push_back({{"word", word_name(w)}, {"re", v.real()}, {"im", v.imag()}});
  }
  return arr.dump();
}

}  // namespace hyphall
