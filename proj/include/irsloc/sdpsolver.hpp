#pragma once
// Dense SDP solver for diagonally-constrained problems:
//     minimize tr(G V)  s.t.  V >= 0 (PSD),  V_ii <= u_i (bounded set),  V_ff = c_f (fixed set).
// Sizes here are small (n <= ~130), so everything is dense direct linear algebra.
//
// Method: log-barrier ascent on the dual
//     maximize -sum b_i d_i   s.t.  S(d) = G + Diag(d) >= 0,  d_i >= 0 on bounded indices,
// with barrier f_mu(d) = -b.d + mu ln det S + mu sum_{bounded} ln d_i and Newton steps.
// The primal iterate V = mu S^{-1} is feasible by construction at each stage optimum
// (V_ii = b_i - mu/d_i on bounded, V_ff = c_f on fixed), and the duality gap at a stage
// optimum equals mu (n + #bounded), which drives the stopping rule. -b.d is a certified
// lower bound on the primal for every PSD iterate, reported as dual_bound.
//
// hermitian_eig wraps Eigen's self-adjoint solver, re-ordered to descending eigenvalues.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

namespace irsloc {

enum class SdpStatus { optimal, max_iter, infeasible };

template <class Mat>
struct SdpResultT {
  Mat V;                    // primal iterate, PSD, diagonal constraints satisfied
  double objective = 0.0;   // tr(G V)
  double dual_bound = 0.0;  // certified lower bound on the primal optimum
  double duality_gap = 0.0;
  int iterations = 0;       // total Newton steps
  SdpStatus status = SdpStatus::max_iter;
};

using SdpResult = SdpResultT<Eigen::MatrixXcd>;
using SdpResultReal = SdpResultT<Eigen::MatrixXd>;

namespace detail {

template <class Mat>
SdpResultT<Mat> barrier_sdp(const Mat& G_in, const std::vector<std::optional<double>>& diag_upper,
                            const std::vector<std::optional<double>>& diag_fixed, double tol,
                            int max_iter) {
  using Scalar = typename Mat::Scalar;
  using VecD = Eigen::VectorXd;
  const int n = static_cast<int>(G_in.rows());
  if (G_in.cols() != n) throw std::invalid_argument("solve_sdp: matrix must be square");
  if (static_cast<int>(diag_upper.size()) != n || static_cast<int>(diag_fixed.size()) != n)
    throw std::invalid_argument("solve_sdp: constraint vectors must have length n");

  // Normalize the objective scale; constraints are untouched by this.
  const double g_scale = G_in.cwiseAbs().maxCoeff();
  SdpResultT<Mat> res;
  if (g_scale == 0.0) {
    res.V = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      if (diag_fixed[i]) res.V(i, i) = Scalar(*diag_fixed[i]);
    res.status = SdpStatus::optimal;
    return res;
  }
  const Mat G = G_in / g_scale;

  std::vector<int> cons;    // constrained indices, in order
  std::vector<bool> is_up;  // parallel: bounded (true) vs fixed (false)
  std::vector<double> bval; // parallel: u_i or c_f
  for (int i = 0; i < n; ++i) {
    if (diag_upper[i] && diag_fixed[i])
      throw std::invalid_argument("solve_sdp: index both bounded and fixed");
    if (diag_upper[i]) {
      if (!(*diag_upper[i] > 0.0)) throw std::invalid_argument("solve_sdp: bounds must be positive");
      cons.push_back(i);
      is_up.push_back(true);
      bval.push_back(*diag_upper[i]);
    } else if (diag_fixed[i]) {
      if (!(*diag_fixed[i] > 0.0)) throw std::invalid_argument("solve_sdp: fixed values must be positive");
      cons.push_back(i);
      is_up.push_back(false);
      bval.push_back(*diag_fixed[i]);
    }
  }
  const int nc = static_cast<int>(cons.size());
  int n_up = 0;
  for (bool u : is_up) n_up += u ? 1 : 0;

  if (nc == 0) {
    // No constraints: optimum is 0 if G is PSD (V = 0), otherwise unbounded below.
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    res.V = Mat::Zero(n, n);
    res.status = es.eigenvalues().minCoeff() >= -1e-12 ? SdpStatus::optimal : SdpStatus::infeasible;
    return res;
  }

  auto assemble = [&](const VecD& d) {
    Mat S = G;
    for (int k = 0; k < nc; ++k) S(cons[k], cons[k]) += Scalar(d[k]);
    return S;
  };

  // Gershgorin-based PD start on the constrained diagonal, grown until the factorization
  // succeeds. If no growth makes S PD, the dual is infeasible (primal unbounded below).
  VecD d(nc);
  for (int k = 0; k < nc; ++k) {
    const int i = cons[k];
    double radius = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) radius += std::abs(G(i, j));
    d[k] = std::max(1.0, radius - std::real(G(i, i)) + 1.0);
  }
  Eigen::LLT<Mat> llt;
  bool pd = false;
  for (int tries = 0; tries < 60 && !pd; ++tries) {
    llt.compute(assemble(d));
    if (llt.info() == Eigen::Success) pd = true;
    else d *= 10.0;
  }
  if (!pd) {
    res.V = Mat::Zero(n, n);
    res.status = SdpStatus::infeasible;
    return res;
  }

  auto barrier_value = [&](const VecD& dv, const Eigen::LLT<Mat>& fact, double mu) {
    double logdet = 0.0;
    const auto& L = fact.matrixLLT();
    for (int i = 0; i < n; ++i) logdet += std::log(std::real(L(i, i)));
    logdet *= 2.0;
    double val = mu * logdet;
    for (int k = 0; k < nc; ++k) {
      val -= bval[k] * dv[k];
      if (is_up[k]) val += mu * std::log(dv[k]);
    }
    return val;
  };

  const Mat eye = Mat::Identity(n, n);
  double mu = 1.0;
  int total_newton = 0;
  bool converged = false;
  Mat Sinv;

  for (int stage = 0; stage < 60 && !converged; ++stage) {
    for (int inner = 0; inner < 50; ++inner) {
      if (total_newton >= max_iter) break;
      Mat S = assemble(d);
      llt.compute(S);
      if (llt.info() != Eigen::Success) {
        // Should not happen (line search guards PD); recover by inflating.
        d *= 2.0;
        continue;
      }
      Sinv = llt.solve(eye);

      VecD grad(nc);
      for (int k = 0; k < nc; ++k) {
        grad[k] = -bval[k] + mu * std::real(Sinv(cons[k], cons[k]));
        if (is_up[k]) grad[k] += mu / d[k];
      }
      Eigen::MatrixXd negH(nc, nc);
      for (int a = 0; a < nc; ++a)
        for (int b = 0; b <= a; ++b) {
          double v = mu * Eigen::numext::abs2(Sinv(cons[a], cons[b]));
          if (a == b && is_up[a]) v += mu / (d[a] * d[a]);
          negH(a, b) = v;
          negH(b, a) = v;
        }
      negH.diagonal().array() += 1e-14 * negH.diagonal().maxCoeff();
      const VecD step = negH.llt().solve(grad);
      const double decrement = grad.dot(step);
      ++total_newton;
      if (!(decrement > 1e-11 * mu * (n + n_up))) break;  // stage centered

      const double f0 = barrier_value(d, llt, mu);
      double alpha = 1.0;
      for (int k = 0; k < nc; ++k)
        if (is_up[k] && d[k] + alpha * step[k] <= 0.0)
          alpha = std::min(alpha, -0.95 * d[k] / step[k]);
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        const VecD dn = d + alpha * step;
        bool pos_ok = true;
        for (int k = 0; k < nc; ++k)
          if (is_up[k] && dn[k] <= 0.0) pos_ok = false;
        if (pos_ok) {
          Eigen::LLT<Mat> lt(assemble(dn));
          if (lt.info() == Eigen::Success &&
              barrier_value(dn, lt, mu) >= f0 + 1e-4 * alpha * decrement) {
            d = dn;
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) break;  // numerical floor for this stage
    }

    // Stage gap estimate: mu (n + #bounded) once centered. Objective scale from the
    // current primal iterate keeps the relative test meaningful for tiny objectives.
    llt.compute(assemble(d));
    Sinv = llt.solve(eye);
    const double obj_now = Eigen::numext::real((G.cwiseProduct((mu * Sinv).transpose())).sum());
    if (mu * (n + n_up) <= tol * std::max(1.0, std::abs(obj_now))) converged = true;
    else if (total_newton >= max_iter) break;
    else mu *= 0.15;
  }

  // Primal recovery and diagonal polish. V = mu S^{-1} is PSD; a two-sided diagonal
  // rescale keeps it PSD while pinning the constrained diagonal entries.
  Mat V = mu * Sinv;
  VecD scale_diag = VecD::Ones(n);
  for (int k = 0; k < nc; ++k) {
    const int i = cons[k];
    const double vii = std::real(V(i, i));
    if (vii <= 0.0) continue;
    if (!is_up[k]) scale_diag[i] = std::sqrt(bval[k] / vii);
    else if (vii > bval[k]) scale_diag[i] = std::sqrt(bval[k] / vii);
  }
  for (int i = 0; i < n; ++i) V.row(i) *= Scalar(scale_diag[i]);
  for (int i = 0; i < n; ++i) V.col(i) *= Scalar(scale_diag[i]);

  res.V = V;  // the primal variable is unaffected by the objective normalization
  res.objective = Eigen::numext::real((G.cwiseProduct(V.transpose())).sum()) * g_scale;
  double dual = 0.0;
  for (int k = 0; k < nc; ++k) dual -= bval[k] * d[k];
  res.dual_bound = dual * g_scale;
  res.duality_gap = res.objective - res.dual_bound;
  res.iterations = total_newton;
  res.status = converged ? SdpStatus::optimal : SdpStatus::max_iter;
  return res;
}

}  // namespace detail

// Complex Hermitian interface. diag_upper / diag_fixed give per-index constraints
// (std::nullopt = unconstrained); an index cannot carry both.
inline SdpResult solve_sdp(const Eigen::MatrixXcd& G,
                           const std::vector<std::optional<double>>& diag_upper,
                           const std::vector<std::optional<double>>& diag_fixed,
                           double tol = 1e-6, int max_iter = 200) {
  const double dev = (G - G.adjoint()).cwiseAbs().maxCoeff();
  if (dev > 1e-12 * std::max(1.0, G.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("solve_sdp: matrix is not Hermitian");
  Eigen::MatrixXcd H = 0.5 * (G + G.adjoint());  // exact symmetrization for stability
  return detail::barrier_sdp<Eigen::MatrixXcd>(H, diag_upper, diag_fixed, tol, max_iter);
}

// Real symmetric variant (used for homogeneous problems whose variable is real).
inline SdpResultReal solve_sdp_real(const Eigen::MatrixXd& G,
                                    const std::vector<std::optional<double>>& diag_upper,
                                    const std::vector<std::optional<double>>& diag_fixed,
                                    double tol = 1e-6, int max_iter = 200) {
  const double dev = (G - G.transpose()).cwiseAbs().maxCoeff();
  if (dev > 1e-12 * std::max(1.0, G.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("solve_sdp: matrix is not symmetric");
  Eigen::MatrixXd H = 0.5 * (G + G.transpose());
  return detail::barrier_sdp<Eigen::MatrixXd>(H, diag_upper, diag_fixed, tol, max_iter);
}

// Eigendecomposition of a Hermitian matrix, eigenvalues descending,
// eigenvectors as matching orthonormal columns.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXcd> hermitian_eig(const Eigen::MatrixXcd& A) {
  const double dev = (A - A.adjoint()).cwiseAbs().maxCoeff();
  if (dev > 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("hermitian_eig: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (A + A.adjoint()));
  if (es.info() != Eigen::Success) throw std::runtime_error("hermitian_eig: failed to converge");
  const int n = static_cast<int>(A.rows());
  Eigen::VectorXd vals(n);
  Eigen::MatrixXcd vecs(n, n);
  for (int i = 0; i < n; ++i) {
    vals[i] = es.eigenvalues()[n - 1 - i];
    vecs.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return {vals, vecs};
}

}  // namespace irsloc
