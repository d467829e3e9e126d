#pragma once
// Side-lobe cancellation: given the pattern/weights of the current scan cell and the set
// of already-detected persons, find a small per-element phase perturbation that minimizes
// the detected persons' combined leakage into this cell's measurement.
//
// First-order model: with q = q0 . e^{j dphi} and |dphi_m| <= phi_max,
//   leakage(dphi) ~ |h_d + dphi . h_D|^2
// where h_d is the leakage at dphi = 0 and h_D its derivative. Homogenizing with t = 1
// gives the quadratic form v^H G v + |h_d|^2, v = [dphi; t]. Since dphi and t are real by
// construction, tr(G vv^H) = v^T Re(G) v exactly, so the semidefinite relaxation is taken
// over real symmetric V with Re(G); the complex relaxation's extraction step can lose the
// optimum to a global phase rotation, the real one cannot. Extraction: top eigenpair,
// v = sqrt(l1) p1, normalize so t = 1, clip to the box, fall back to zero if that
// degrades the objective (zero is always feasible, making non-worsening an invariant).

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "irsloc/beamform.hpp"
#include "irsloc/channel.hpp"
#include "irsloc/irscontrol.hpp"
#include "irsloc/scene.hpp"
#include "irsloc/sdpsolver.hpp"

namespace irsloc {

struct NullProblem {
  std::complex<double> h_d;  // detected-person leakage at zero perturbation
  Eigen::VectorXcd h_D;      // d(leakage)/d(dphi), length M
  double phi_max = kPi / 6.0;
  Eigen::MatrixXcd G;        // (M+1)x(M+1) Hermitian, last diagonal entry zero
};

struct Perturbation {
  Eigen::VectorXd delta_phi;        // |dphi_m| <= phi_max
  double objective_before = 0.0;    // |h_d|^2
  double objective_after = 0.0;     // |h_d + dphi . h_D|^2  (<= objective_before)
  double sdp_lower_bound = 0.0;     // certified relaxation bound on the linearized objective
};

inline NullProblem build_problem(const Scenario& s, const PhasePattern& q0, const BeamWeights& w,
                                 const std::vector<Vec3>& detected, double phi_max) {
  if (detected.empty()) throw std::invalid_argument("build_problem: detected set is empty");
  if (!(phi_max > 0.0) || !(phi_max < kPi / 2.0))
    throw std::invalid_argument("build_problem: phi_max must lie in (0, pi/2)");
  const int m = s.irs.element_count();
  if (static_cast<int>(q0.phases.size()) != m)
    throw std::invalid_argument("build_problem: pattern length mismatch");

  std::vector<cplx> q0_phasor(m);
  for (int i = 0; i < m; ++i) q0_phasor[i] = std::polar(1.0, q0.phases[i]);

  NullProblem p;
  p.phi_max = phi_max;
  p.h_d = {0.0, 0.0};
  p.h_D = Eigen::VectorXcd::Zero(m);
  for (const Vec3& person : detected) {
    const ReflectorResponse r = reflector_response(s, person);
    cplx a{0.0, 0.0};  // combined object->rx response under w
    for (std::size_t n = 0; n < r.h_or.size(); ++n) a += w.weights[n] * r.h_or[n];
    cplx bracket = r.h_to;
    for (int i = 0; i < m; ++i) bracket += r.g[i] * q0_phasor[i];
    p.h_d += a * bracket;
    for (int i = 0; i < m; ++i)
      p.h_D[i] += cplx{0.0, 1.0} * a * q0_phasor[i] * r.g[i];
  }

  const int n1 = m + 1;
  p.G = Eigen::MatrixXcd::Zero(n1, n1);
  p.G.topLeftCorner(m, m) = p.h_D * p.h_D.adjoint();
  p.G.topRightCorner(m, 1) = p.h_D * std::conj(p.h_d);
  p.G.bottomLeftCorner(1, m) = p.h_d * p.h_D.adjoint();
  p.G(m, m) = {0.0, 0.0};
  return p;
}

// Linearized leakage power at a given perturbation.
inline double null_objective(const NullProblem& p, const Eigen::VectorXd& delta_phi) {
  cplx s = p.h_d;
  for (int i = 0; i < p.h_D.size(); ++i) s += delta_phi[i] * p.h_D[i];
  return std::norm(s);
}

inline Perturbation solve_null(const NullProblem& p, double tol = 1e-6, int max_iter = 200) {
  const int m = static_cast<int>(p.h_D.size());
  const int n1 = m + 1;
  if (p.G.rows() != n1 || p.G.cols() != n1)
    throw std::invalid_argument("solve_null: G dimension mismatch");
  if ((p.G - p.G.adjoint()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, p.G.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("solve_null: G is not Hermitian");

  Perturbation out;
  out.objective_before = std::norm(p.h_d);
  out.delta_phi = Eigen::VectorXd::Zero(m);

  if (p.h_D.cwiseAbs().maxCoeff() == 0.0) {  // nothing controllable
    out.objective_after = out.objective_before;
    out.sdp_lower_bound = out.objective_before;
    return out;
  }

  const Eigen::MatrixXd Gr = p.G.real();
  std::vector<std::optional<double>> upper(n1), fixed(n1);
  for (int i = 0; i < m; ++i) upper[i] = p.phi_max * p.phi_max;
  fixed[m] = 1.0;
  const SdpResultReal sdp = solve_sdp_real(Gr, upper, fixed, tol, max_iter);
  if (sdp.status == SdpStatus::infeasible)
    throw std::runtime_error("solve_null: SDP reported infeasible");
  if (sdp.status == SdpStatus::max_iter) {
    const double scale = std::max(1.0, std::abs(sdp.objective));
    if (sdp.duality_gap > 1e-3 * scale)
      throw std::runtime_error("solve_null: SDP did not converge, duality gap " +
                               std::to_string(sdp.duality_gap));
  }
  // Lower bound on the linearized objective: certified dual bound plus the constant term.
  out.sdp_lower_bound = sdp.dual_bound + out.objective_before;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sdp.V);
  const int top = n1 - 1;  // Eigen sorts ascending
  const double l1 = es.eigenvalues()[top];
  if (l1 > 0.0) {
    Eigen::VectorXd v = std::sqrt(l1) * es.eigenvectors().col(top);
    const double t = v[m];
    if (std::abs(t) > 1e-12) {
      v /= t;
      for (int i = 0; i < m; ++i)
        out.delta_phi[i] = std::clamp(v[i], -p.phi_max, p.phi_max);
    }
  }

  out.objective_after = null_objective(p, out.delta_phi);
  if (out.objective_after > out.objective_before) {  // zero fallback keeps non-worsening exact
    out.delta_phi.setZero();
    out.objective_after = out.objective_before;
  }
  return out;
}

// Cancellation adjustments ride on a much finer phase grid than the scan
// codebook: the optimal per-element corrections are typically far smaller than
// half a codebook step, so rounding them back to the codebook lattice would
// erase them entirely. 30 bits keeps the grid effectively continuous while
// staying on the same quantized-pattern representation.
inline constexpr int kPerturbationBits = 30;

// q = (q0 + dphi) mod 2pi, re-quantized to a lattice with the given depth.
inline PhasePattern apply_perturbation(const PhasePattern& q0, const Perturbation& d, int bits) {
  if (q0.phases.size() != static_cast<std::size_t>(d.delta_phi.size()))
    throw std::invalid_argument("apply_perturbation: length mismatch");
  PhasePattern shifted;
  shifted.quantized = false;
  shifted.bits = 0;
  shifted.phases.resize(q0.phases.size());
  for (std::size_t i = 0; i < q0.phases.size(); ++i) {
    double phi = std::fmod(q0.phases[i] + d.delta_phi[static_cast<int>(i)], kTwoPi);
    if (phi < 0.0) phi += kTwoPi;
    shifted.phases[i] = phi;
  }
  return quantize(shifted, bits);
}

}  // namespace irsloc
