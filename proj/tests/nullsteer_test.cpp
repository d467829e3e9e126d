#include "irsloc/nullsteer.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <random>

namespace irsloc {
namespace {

using Eigen::VectorXcd;
using Eigen::VectorXd;

// Rebuild the homogenized quadratic form from (h_d, h_D) the same way the library defines
// it, so synthetic problems can be fed to solve_null directly.
NullProblem make_problem(cplx h_d, const VectorXcd& h_D, double phi_max) {
  NullProblem p;
  p.h_d = h_d;
  p.h_D = h_D;
  p.phi_max = phi_max;
  const int m = static_cast<int>(h_D.size());
  p.G = Eigen::MatrixXcd::Zero(m + 1, m + 1);
  p.G.topLeftCorner(m, m) = h_D * h_D.adjoint();
  p.G.topRightCorner(m, 1) = h_D * std::conj(h_d);
  p.G.bottomLeftCorner(1, m) = h_d * h_D.adjoint();
  return p;
}

// Exact (non-linearized) leakage of the detected set into the cell served by (q, w).
double exact_leakage(const Scenario& s, const PhasePattern& q, const BeamWeights& w,
                     const std::vector<Vec3>& detected) {
  cplx acc{0.0, 0.0};
  for (const Vec3& person : detected) {
    const ReflectorResponse r = reflector_response(s, person);
    cplx a{0.0, 0.0};
    for (std::size_t n = 0; n < r.h_or.size(); ++n) a += w.weights[n] * r.h_or[n];
    acc += a * (r.h_to + r.irs_sum(q));
  }
  return std::norm(acc);
}

// Exhaustive minimum of the linearized objective over the 17-point-per-element box grid.
double grid_oracle(const NullProblem& p) {
  const int m = static_cast<int>(p.h_D.size());
  const int k_pts = 17;
  std::vector<double> vals(k_pts);
  for (int k = 0; k < k_pts; ++k) vals[k] = -p.phi_max + k * (p.phi_max / 8.0);
  double best = std::numeric_limits<double>::infinity();
  auto rec = [&](auto&& self, int i, cplx acc) -> void {
    if (i == m) {
      best = std::min(best, std::norm(acc));
      return;
    }
    for (int k = 0; k < k_pts; ++k) self(self, i + 1, acc + vals[k] * p.h_D[i]);
  };
  rec(rec, 0, p.h_d);
  return best;
}

TEST(BuildProblem, LeakageAtZeroMatchesExactChannel) {
  const Scenario s = default_scenario();
  const Vec3 focus{3.0, 3.0, 0.0};
  const std::vector<Vec3> detected{{4.2, 1.8, 0.0}, {1.7, 4.4, 0.0}};
  const PhasePattern q0 = quantize(optimal_phases(s, focus.x, focus.y), s.irs.bits);
  const BeamWeights w = steering_weights(s, focus.x, focus.y);
  const NullProblem p = build_problem(s, q0, w, detected, kPi / 6.0);

  EXPECT_NEAR(std::norm(p.h_d), exact_leakage(s, q0, w, detected),
              1e-12 * std::norm(p.h_d));
  EXPECT_EQ(p.h_D.size(), s.irs.element_count());
}

TEST(BuildProblem, DerivativeMatchesFiniteDifference) {
  const Scenario s = default_scenario();
  const Vec3 focus{2.5, 3.5, 0.0};
  const std::vector<Vec3> detected{{4.0, 2.0, 0.0}};
  const PhasePattern q0 = quantize(optimal_phases(s, focus.x, focus.y), s.irs.bits);
  const BeamWeights w = steering_weights(s, focus.x, focus.y);
  const NullProblem p = build_problem(s, q0, w, detected, kPi / 6.0);

  const double h = 1e-6;
  for (int i : {0, 17, 60, 80}) {
    PhasePattern plus = q0, minus = q0;
    plus.phases[i] += h;
    minus.phases[i] -= h;
    const double fd =
        (exact_leakage(s, plus, w, detected) - exact_leakage(s, minus, w, detected)) / (2.0 * h);
    const double analytic = 2.0 * std::real(std::conj(p.h_d) * p.h_D[i]);
    EXPECT_NEAR(fd, analytic, 1e-6 * (std::abs(analytic) + std::norm(p.h_d)));
  }
}

TEST(BuildProblem, QuadraticFormStructure) {
  const Scenario s = default_scenario();
  const PhasePattern q0 = quantize(optimal_phases(s, 3.0, 3.0), s.irs.bits);
  const BeamWeights w = steering_weights(s, 3.0, 3.0);
  const NullProblem p = build_problem(s, q0, w, {{4.5, 4.5, 0.0}}, kPi / 6.0);
  const int m = s.irs.element_count();
  ASSERT_EQ(p.G.rows(), m + 1);
  EXPECT_EQ(p.G(m, m), (cplx{0.0, 0.0}));
  EXPECT_LT((p.G - p.G.adjoint()).cwiseAbs().maxCoeff(),
            1e-14 * p.G.cwiseAbs().maxCoeff());
  // homogenized form evaluated at v = [dphi; 1] equals the linearized objective
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-kPi / 6.0, kPi / 6.0);
  for (int trial = 0; trial < 5; ++trial) {
    VectorXd dphi(m);
    for (int i = 0; i < m; ++i) dphi[i] = u(rng);
    Eigen::VectorXcd v(m + 1);
    v.head(m) = dphi.cast<cplx>();
    v[m] = 1.0;
    const double quad = std::real((v.adjoint() * p.G * v)(0, 0)) + std::norm(p.h_d);
    EXPECT_NEAR(quad, null_objective(p, dphi), 1e-10 * std::max(1.0, quad));
  }
}

TEST(BuildProblem, RejectsBadInputs) {
  const Scenario s = default_scenario();
  const PhasePattern q0 = quantize(optimal_phases(s, 3.0, 3.0), s.irs.bits);
  const BeamWeights w = steering_weights(s, 3.0, 3.0);
  EXPECT_THROW(build_problem(s, q0, w, {}, kPi / 6.0), std::invalid_argument);
  EXPECT_THROW(build_problem(s, q0, w, {{4.0, 4.0, 0.0}}, 0.0), std::invalid_argument);
  EXPECT_THROW(build_problem(s, q0, w, {{4.0, 4.0, 0.0}}, kPi), std::invalid_argument);
  EXPECT_THROW(build_problem(s, zero_pattern(5), w, {{4.0, 4.0, 0.0}}, kPi / 6.0),
               std::invalid_argument);
}

TEST(SolveNull, MatchesSingleElementClosedForm) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double phi_max = kPi / 6.0;
  int clamped_seen = 0, interior_seen = 0;
  for (int inst = 0; inst < 40; ++inst) {
    const cplx h_d{u(rng), u(rng)};
    VectorXcd h_D(1);
    h_D[0] = cplx{u(rng), u(rng)} * (inst % 2 ? 4.0 : 0.4);  // mix interior / clamped optima
    if (std::abs(h_D[0]) < 1e-3) continue;
    const NullProblem p = make_problem(h_d, h_D, phi_max);
    const Perturbation out = solve_null(p);

    const double unclamped = -std::real(std::conj(h_d) * h_D[0]) / std::norm(h_D[0]);
    const double star = std::clamp(unclamped, -phi_max, phi_max);
    (std::abs(unclamped) > phi_max ? clamped_seen : interior_seen) += 1;
    const double closed = std::norm(h_d + star * h_D[0]);
    EXPECT_NEAR(out.objective_after, closed, 1e-4 * std::max(closed, std::norm(h_d)))
        << "instance " << inst;
  }
  EXPECT_GT(clamped_seen, 0);
  EXPECT_GT(interior_seen, 0);
}

TEST(SolveNull, NearGridOracleUpToSixElements) {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double phi_max = kPi / 6.0;
  for (int m = 1; m <= 6; ++m) {
    for (int inst = 0; inst < 3; ++inst) {
      const cplx h_d{u(rng), u(rng)};
      VectorXcd h_D(m);
      for (int i = 0; i < m; ++i) h_D[i] = cplx{u(rng), u(rng)};
      const NullProblem p = make_problem(h_d, h_D, phi_max);
      const Perturbation out = solve_null(p);
      const double grid_best = grid_oracle(p);

      // the solver searches the full box, so it may only beat the grid, never trail
      // it by more than the 5% head room
      EXPECT_LE(out.objective_after, grid_best * 1.05 + 1e-9 * std::norm(h_d))
          << "m=" << m << " inst=" << inst;
      // a feasible grid point can never undercut the certified relaxation bound
      EXPECT_GE(grid_best, out.sdp_lower_bound - 1e-6 * std::max(1.0, std::norm(h_d)));
    }
  }
}

TEST(SolveNull, FeasibleNonWorseningAndBounded) {
  const Scenario s = default_scenario();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  const double phi_max = kPi / 6.0;
  for (int inst = 0; inst < 6; ++inst) {
    const Vec3 focus{u(rng), u(rng), 0.0};
    const std::vector<Vec3> detected{{u(rng), u(rng), 0.0}, {u(rng), u(rng), 0.0}};
    const PhasePattern q0 = quantize(optimal_phases(s, focus.x, focus.y), s.irs.bits);
    const BeamWeights w = steering_weights(s, focus.x, focus.y);
    const NullProblem p = build_problem(s, q0, w, detected, phi_max);
    const Perturbation out = solve_null(p);

    for (int i = 0; i < out.delta_phi.size(); ++i)
      EXPECT_LE(std::abs(out.delta_phi[i]), phi_max * (1.0 + 1e-12));
    EXPECT_LE(out.objective_after, out.objective_before);
    EXPECT_NEAR(out.objective_before, std::norm(p.h_d), 1e-15);
    EXPECT_DOUBLE_EQ(out.objective_after, null_objective(p, out.delta_phi));
    const double tol = 1e-5 * out.objective_before + 1e-12;
    EXPECT_LE(out.sdp_lower_bound, out.objective_after + tol);
    EXPECT_LE(out.sdp_lower_bound, out.objective_before + tol);
  }
}

TEST(SolveNull, UncontrollableLeakageReturnsZero) {
  NullProblem p = make_problem(cplx{0.7, 0.2}, VectorXcd::Zero(3), kPi / 6.0);
  const Perturbation out = solve_null(p);
  EXPECT_EQ(out.delta_phi.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(out.objective_after, out.objective_before);
  EXPECT_DOUBLE_EQ(out.sdp_lower_bound, out.objective_before);
}

TEST(SolveNull, RejectsMalformedProblems) {
  NullProblem p = make_problem(cplx{0.5, 0.0}, VectorXcd::Ones(3), kPi / 6.0);
  p.G = Eigen::MatrixXcd::Zero(3, 3);  // should be 4x4
  EXPECT_THROW(solve_null(p), std::invalid_argument);

  NullProblem q = make_problem(cplx{0.5, 0.0}, VectorXcd::Ones(2), kPi / 6.0);
  q.G(0, 1) = 1.0;
  q.G(1, 0) = 2.0;  // not Hermitian
  EXPECT_THROW(solve_null(q), std::invalid_argument);
}

// On well-separated geometry the first-order model tracks the exact leakage; the bound is
// loose enough for the second-order remainder yet tight enough to catch a wrong gradient.
TEST(SolveNull, LinearizationTracksExactLeakage) {
  const Scenario s = default_scenario();
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  const double phi_max = kPi / 6.0;
  int tested = 0;
  for (int inst = 0; tested < 8 && inst < 40; ++inst) {
    const Vec3 focus{u(rng), u(rng), 0.0};
    std::vector<Vec3> detected{{u(rng), u(rng), 0.0}};
    if (distance(focus, detected[0]) < 0.8) continue;  // keep the cell off the main lobe
    ++tested;
    const PhasePattern q0 = quantize(optimal_phases(s, focus.x, focus.y), s.irs.bits);
    const BeamWeights w = steering_weights(s, focus.x, focus.y);
    const NullProblem p = build_problem(s, q0, w, detected, phi_max);
    const Perturbation out = solve_null(p);

    PhasePattern q1 = q0;
    q1.quantized = false;
    for (int i = 0; i < out.delta_phi.size(); ++i) q1.phases[i] += out.delta_phi[i];
    const double exact = exact_leakage(s, q1, w, detected);
    EXPECT_LE(std::abs(exact - out.objective_after),
              0.15 * std::max(out.objective_after, 0.01 * out.objective_before))
        << "focus (" << focus.x << "," << focus.y << ") person (" << detected[0].x << ","
        << detected[0].y << ")";
  }
  EXPECT_EQ(tested, 8);
}

// Perturbing a quantized focusing pattern cannot destroy the focus: every element stays
// within (half quantization step + phi_max) of perfect alignment.
TEST(SolveNull, FocusGainSurvivesPerturbation) {
  const Scenario s = default_scenario();
  const Vec3 focus{3.0, 3.0, 0.0};
  const PhasePattern q0 = quantize(optimal_phases(s, focus.x, focus.y), s.irs.bits);
  const BeamWeights w = steering_weights(s, focus.x, focus.y);
  const NullProblem p = build_problem(s, q0, w, {{2.22, 3.0, 0.0}}, kPi / 6.0);
  const Perturbation out = solve_null(p);
  const PhasePattern q1 = apply_perturbation(q0, out, kPerturbationBits);

  const ReflectorResponse rf = reflector_response(s, focus);
  double rho_sum = 0.0;
  for (const cplx& g : rf.g) rho_sum += std::abs(g);
  const double misalign = kPi / (1 << s.irs.bits) + kPi / 6.0;  // half-step + box radius
  const double bound = std::abs(rf.h_to) + std::cos(misalign) * rho_sum;
  EXPECT_GE(std::abs(rf.h_to + rf.irs_sum(q1)), bound * (1.0 - 1e-9));
}

TEST(ApplyPerturbation, ZeroDeltaReducesToQuantization) {
  const Scenario s = default_scenario();
  const PhasePattern raw = optimal_phases(s, 3.5, 3.5);
  Perturbation zero;
  zero.delta_phi = VectorXd::Zero(raw.phases.size());
  const PhasePattern a = apply_perturbation(raw, zero, 2);
  const PhasePattern b = quantize(raw, 2);
  ASSERT_EQ(a.phases.size(), b.phases.size());
  for (std::size_t i = 0; i < a.phases.size(); ++i) EXPECT_EQ(a.phases[i], b.phases[i]);
}

TEST(ApplyPerturbation, FineLatticePreservesShift) {
  const Scenario s = default_scenario();
  const PhasePattern q0 = quantize(optimal_phases(s, 3.0, 3.0), 2);
  Perturbation d;
  d.delta_phi = VectorXd::Constant(q0.phases.size(), 0.1234);
  const PhasePattern q1 = apply_perturbation(q0, d, kPerturbationBits);
  for (std::size_t i = 0; i < q0.phases.size(); ++i) {
    double want = std::fmod(q0.phases[i] + 0.1234, kTwoPi);
    EXPECT_NEAR(q1.phases[i], want, kTwoPi / (1 << kPerturbationBits));
  }
}

// Re-quantizing to the scan codebook erases any correction smaller than half a codebook
// step — the no-op that motivates the fine perturbation lattice.
TEST(ApplyPerturbation, CoarseLatticeSwallowsSmallCorrections) {
  const Scenario s = default_scenario();
  const PhasePattern q0 = quantize(optimal_phases(s, 3.0, 3.0), 2);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-kPi / 4.0 * 0.98, kPi / 4.0 * 0.98);
  Perturbation d;
  d.delta_phi = VectorXd::Zero(q0.phases.size());
  for (int i = 0; i < d.delta_phi.size(); ++i) d.delta_phi[i] = u(rng);
  const PhasePattern q1 = apply_perturbation(q0, d, 2);
  for (std::size_t i = 0; i < q0.phases.size(); ++i) EXPECT_EQ(q1.phases[i], q0.phases[i]);
}

TEST(ApplyPerturbation, RejectsLengthMismatch) {
  Perturbation d;
  d.delta_phi = VectorXd::Zero(4);
  EXPECT_THROW(apply_perturbation(zero_pattern(5), d, 8), std::invalid_argument);
}

}  // namespace
}  // namespace irsloc
