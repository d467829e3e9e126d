#pragma once
// Receiver-side beamforming: unit-modulus steering weights that compensate the full
// Tx -> focus -> antenna phase, plain inner-product combining, and the classical
// angle/time resolution diagnostics.

#include <complex>
#include <stdexcept>
#include <vector>

#include "irsloc/channel.hpp"
#include "irsloc/scene.hpp"

namespace irsloc {

struct BeamWeights {
  std::vector<cplx> weights;  // |w_n| = 1
  double focus_x = 0.0;
  double focus_y = 0.0;
};

// w_n = e^{+j 2 pi (d_TO + d_OR^n) / lambda}: conjugates the focus-position channel phase
// so a reflector at the focus combines coherently.
inline BeamWeights steering_weights(const Scenario& s, double x, double y) {
  const Vec3 p{x, y, 0.0};
  if (!detail::inside_room(p, s.room))
    throw std::invalid_argument("steering_weights: focus outside room");
  const double lam = s.wavelength();
  const double d_to = distance(s.tx, p);
  BeamWeights w;
  w.focus_x = x;
  w.focus_y = y;
  w.weights.reserve(s.rx_antennas.size());
  for (const Vec3& rx : s.rx_antennas)
    w.weights.push_back(std::polar(1.0, kTwoPi * (d_to + distance(p, rx)) / lam));
  return w;
}

// Plain (unconjugated) inner product: the weights already carry the phase conjugation.
inline cplx combine(const BeamWeights& w, const std::vector<cplx>& residual) {
  if (w.weights.size() != residual.size())
    throw std::invalid_argument("combine: length mismatch");
  cplx acc{0.0, 0.0};
  for (std::size_t n = 0; n < residual.size(); ++n) acc += w.weights[n] * residual[n];
  return acc;
}

// 2 asin(lambda / (N d)) in degrees. N d = lambda gives the degenerate 180 degree value;
// below that the array cannot resolve angle at all.
inline double aoa_resolution(int n_antennas, double spacing, double lambda) {
  if (n_antennas < 1 || !(spacing > 0.0) || !(lambda > 0.0))
    throw std::invalid_argument("aoa_resolution: bad arguments");
  const double ratio = lambda / (n_antennas * spacing);
  if (ratio > 1.0) throw std::domain_error("no angular resolution");
  return 2.0 * std::asin(ratio) * 180.0 / kPi;
}

// 1 / (2 B) seconds for bandwidth B.
inline double tof_resolution(double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("tof_resolution: bandwidth must be positive");
  return 1.0 / (2.0 * bandwidth_hz);
}

}  // namespace irsloc
