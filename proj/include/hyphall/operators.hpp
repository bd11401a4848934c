#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "magnetic.hpp"
#include "surface_group.hpp"

namespace hyphall {

using Complex = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex>;

// Finite section of l^2(Gamma) spanned by the delta functions on a ball
// B_R.  Interior sites are those of depth <= R - margin; since ball indices
// are sorted by depth, the interior is an index prefix.  Functionals that
// must not see the open boundary average over interior sites only.
class TruncatedSpace {
 public:
  TruncatedSpace(const Ball& ball, const MagneticData& data, int margin);

  const Ball& ball() const { return *ball_; }
  const MagneticData& data() const { return *data_; }
  const CocycleTable& cocycle() const { return cocycle_; }
  double theta() const { return cocycle_.theta(); }

  int dimension() const { return ball_->size(); }
  int radius() const { return ball_->radius(); }
  int margin() const { return margin_; }
  int interior_dimension() const { return interior_dim_; }
  bool interior(int idx) const { return idx < interior_dim_; }

 private:
  const Ball* ball_;
  const MagneticData* data_;
  CocycleTable cocycle_;
  int margin_;
  int interior_dim_;
};

// Finite matrix acting on a TruncatedSpace, stored dense or sparse.
struct TruncatedOperator {
  const TruncatedSpace* space = nullptr;
  DenseMatrix dense;
  SparseMatrix sparse;
  bool is_sparse = false;

  DenseMatrix to_dense() const { return is_sparse ? DenseMatrix(sparse) : dense; }
  int dimension() const { return space ? space->dimension() : 0; }
};

// Element of the twisted group algebra at one disorder sample: finitely
// supported map gamma -> amplitude with words in canonical reduced form,
// ordered by length then lexicographically.  Self-adjoint elements satisfy
// a(gamma^-1) = conj(a(gamma)) because sigma(gamma, gamma^-1) = 1.
class EquivariantKernel {
 public:
  struct ShortLexOrder {
    bool operator()(const Word& a, const Word& b) const {
      return shortlex_less(a, b);
    }
  };
  using Terms = std::map<Word, Complex, ShortLexOrder>;

  EquivariantKernel() = default;

  static EquivariantKernel delta(const Word& w, Complex amp = Complex(1.0, 0.0));

  void add(const Word& w, Complex amp);  // accumulates; w must be reduced
  void prune(double tol = 1e-14);

  Complex at(const Word& w) const;
  const Terms& terms() const { return terms_; }
  int support_size() const { return static_cast<int>(terms_.size()); }
  int radius() const;  // max word length in the support

  // Largest amplitude magnitude per word length 0..radius().
  std::vector<double> shell_profile() const;

 private:
  Terms terms_;
};

// Left sigma-regular representation on the truncation: U(gamma) maps delta_t
// to sigma(gamma, t) delta_{gamma t}, entries dropped when gamma t leaves the
// ball.  U(gamma1) U(gamma2) = sigma(gamma1, gamma2) U(gamma1 gamma2) holds
// exactly on columns whose images stay inside the ball (2-cocycle identity),
// and U(gamma)^dagger = U(gamma^-1) because sigma(gamma, gamma^-1) = 1.
TruncatedOperator left_regular(const TruncatedSpace& space, const Word& gamma);

// A = sum_gamma a(gamma) U(gamma); sparse when the support is small.
TruncatedOperator matrix_from_kernel(const TruncatedSpace& space,
                                     const EquivariantKernel& a);

// Twisted convolution (a * b)(gamma) = sum_{g1 g2 = gamma} a(g1) b(g2)
// sigma(g1, g2); realizes operator composition on kernels.
EquivariantKernel twisted_convolve(const EquivariantKernel& a,
                                   const EquivariantKernel& b,
                                   const MagneticData& data);

// Adjoint kernel a*(gamma) = conj(a(gamma^-1)).
EquivariantKernel kernel_adjoint(const EquivariantKernel& a);

struct KernelExtraction {
  EquivariantKernel kernel;
  double residual = 0.0;  // max interior-column deviation from equivariance
  bool equivariant = false;
};

// Recovers the kernel of an approximately equivariant operator by averaging
// phase-corrected matrix entries over interior sites; the residual reports
// the largest interior-column entry unexplained by the extracted kernel.
KernelExtraction kernel_from_operator(const TruncatedOperator& A,
                                      double threshold = 1e-8);

// Canonical trace on the twisted algebra: evaluation at the identity.
Complex canonical_trace(const EquivariantKernel& a);

// JSON list [{"word": name, "re": x, "im": y}, ...] in support order.
std::string kernel_json(const EquivariantKernel& a);

}  // namespace hyphall
