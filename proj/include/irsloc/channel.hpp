#pragma once
// Narrowband complex-baseband signal synthesis. Every path is an amplitude from the
// power-law model times a carrier phase e^{-j 2 pi d / lambda}; the IRS contributes one
// extra programmable phase e^{j phi_m} per element. Double-bounce IRS paths are excluded.
//
// Received snapshot (noiseless part, per antenna):
//   s = sqrt(P) * [ direct + tx_irs_rx + sum_reflectors (tor + tior) ]
// where reflectors = static scatterers plus persons, and noise adds a circularly
// symmetric complex Gaussian of variance sigma^2 per antenna.

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "irsloc/rng.hpp"
#include "irsloc/scene.hpp"

namespace irsloc {

using cplx = std::complex<double>;

// Programmable IRS control word. If quantized, each phase lies on the 2^bits-point
// lattice {0, 2pi/2^B, ...}.
struct PhasePattern {
  std::vector<double> phases;  // radians in [0, 2pi)
  bool quantized = false;
  int bits = 0;

  // Content hash; measurement pairs must share it (FNV-1a over raw phase bytes).
  std::uint64_t id() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto eat = [&h](const unsigned char* p, std::size_t n) {
      for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
      }
    };
    eat(reinterpret_cast<const unsigned char*>(phases.data()), phases.size() * sizeof(double));
    const unsigned char qb[2] = {static_cast<unsigned char>(quantized), static_cast<unsigned char>(bits)};
    eat(qb, 2);
    return h;
  }
};

inline PhasePattern zero_pattern(int m) { return PhasePattern{std::vector<double>(m, 0.0), true, 1}; }

struct Snapshot {
  std::vector<cplx> values;   // one complex amplitude per rx antenna
  std::uint64_t pattern_id = 0;
  std::uint64_t t = 0;        // measurement index within a pair (0 = previous, 1 = current)
};

// Noiseless decomposition of one snapshot; terms sum to the synthesized values.
struct ChannelTerms {
  std::vector<cplx> direct;     // Tx -> Rx
  std::vector<cplx> tx_irs_rx;  // Tx -> IRS -> Rx (static: persons not involved)
  struct ReflectorTerms {
    std::vector<cplx> tor;   // Tx -> reflector -> Rx
    std::vector<cplx> tior;  // Tx -> IRS -> reflector -> Rx
  };
  std::vector<ReflectorTerms> reflectors;  // statics first, then persons
};

// rho(d) = 10^(rho0_db/20) * d^(-alpha/2): amplitude loss of one leg. d must be positive.
inline double path_amplitude(double d, double alpha, double rho0_db) {
  if (!(d > 0.0)) throw std::invalid_argument("path_amplitude: distance must be positive");
  return std::pow(10.0, rho0_db / 20.0) * std::pow(d, -alpha / 2.0);
}

// Per-reflector propagation constants that do not depend on the IRS pattern.
// Splitting them out lets scan loops reuse geometry across patterns:
//   tor_n  = h_or[n] * h_to
//   tior_n = h_or[n] * sum_m g[m] e^{j phi_m}
struct ReflectorResponse {
  std::vector<cplx> h_or;  // rho_OR^n e^{-j 2 pi d_OR^n / lambda}, per antenna
  cplx h_to;               // rho_TO e^{-j 2 pi d_TO / lambda}
  std::vector<cplx> g;     // rho_IO^m rho_TI^m e^{-j 2 pi (d_IO^m + d_TI^m) / lambda}, per element

  // sum_m g[m] e^{j phases[m]}
  cplx irs_sum(const PhasePattern& p) const {
    if (p.phases.size() != g.size())
      throw std::invalid_argument("pattern length does not match IRS element count");
    cplx acc{0.0, 0.0};
    for (std::size_t m = 0; m < g.size(); ++m)
      acc += g[m] * std::polar(1.0, p.phases[m]);
    return acc;
  }
};

inline ReflectorResponse reflector_response(const Scenario& s, const Vec3& obj) {
  const double lam = s.wavelength();
  const PathLossParams& pl = s.path_loss;
  ReflectorResponse r;

  const double d_to = distance(s.tx, obj);
  if (!(d_to > 0.0)) throw std::invalid_argument("reflector coincides with tx");
  r.h_to = path_amplitude(d_to, pl.alpha_to, pl.rho0_db) * std::polar(1.0, -kTwoPi * d_to / lam);

  r.h_or.reserve(s.rx_antennas.size());
  for (const Vec3& rx : s.rx_antennas) {
    const double d_or = distance(obj, rx);
    if (!(d_or > 0.0)) throw std::invalid_argument("reflector coincides with an rx antenna");
    r.h_or.push_back(path_amplitude(d_or, pl.alpha_or, pl.rho0_db) *
                     std::polar(1.0, -kTwoPi * d_or / lam));
  }

  const std::vector<Vec3> elems = irs_element_positions(s.irs);
  r.g.reserve(elems.size());
  for (const Vec3& e : elems) {
    const double d_ti = distance(s.tx, e);
    const double d_io = distance(e, obj);
    const double amp = path_amplitude(d_ti, pl.alpha_ti, pl.rho0_db) *
                       path_amplitude(d_io, pl.alpha_io, pl.rho0_db);
    r.g.push_back(amp * std::polar(1.0, -kTwoPi * (d_ti + d_io) / lam));
  }
  return r;
}

// Tx -> obj -> Rx two-bounce channel (no IRS), one entry per antenna.
inline std::vector<cplx> channel_tor(const Scenario& s, const Vec3& obj) {
  const ReflectorResponse r = reflector_response(s, obj);
  std::vector<cplx> out(r.h_or.size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = r.h_or[n] * r.h_to;
  return out;
}

// Tx -> IRS -> obj -> Rx channel under pattern p, one entry per antenna.
inline std::vector<cplx> channel_tior(const Scenario& s, const PhasePattern& p, const Vec3& obj) {
  const ReflectorResponse r = reflector_response(s, obj);
  const cplx bracket = r.irs_sum(p);
  std::vector<cplx> out(r.h_or.size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = r.h_or[n] * bracket;
  return out;
}

namespace detail {

// Static Tx -> Rx line-of-sight term. The Tx-Rx leg has no dedicated exponent in the
// model; it is LoS like the Tx-IRS leg, so alpha_ti applies. The term cancels in the
// frame subtraction either way.
inline std::vector<cplx> direct_channel(const Scenario& s) {
  const double lam = s.wavelength();
  std::vector<cplx> out;
  out.reserve(s.rx_antennas.size());
  for (const Vec3& rx : s.rx_antennas) {
    const double d = distance(s.tx, rx);
    out.push_back(path_amplitude(d, s.path_loss.alpha_ti, s.path_loss.rho0_db) *
                  std::polar(1.0, -kTwoPi * d / lam));
  }
  return out;
}

// Static Tx -> IRS -> Rx term (person not involved). IRS-Rx leg is LoS: alpha_io.
inline std::vector<cplx> tx_irs_rx_channel(const Scenario& s, const PhasePattern& p) {
  const double lam = s.wavelength();
  const std::vector<Vec3> elems = irs_element_positions(s.irs);
  if (p.phases.size() != elems.size())
    throw std::invalid_argument("pattern length does not match IRS element count");
  std::vector<cplx> out(s.rx_antennas.size(), cplx{0.0, 0.0});
  for (std::size_t n = 0; n < s.rx_antennas.size(); ++n) {
    cplx acc{0.0, 0.0};
    for (std::size_t m = 0; m < elems.size(); ++m) {
      const double d_ti = distance(s.tx, elems[m]);
      const double d_ir = distance(elems[m], s.rx_antennas[n]);
      const double amp = path_amplitude(d_ti, s.path_loss.alpha_ti, s.path_loss.rho0_db) *
                         path_amplitude(d_ir, s.path_loss.alpha_io, s.path_loss.rho0_db);
      acc += amp * std::polar(1.0, -kTwoPi * (d_ti + d_ir) / lam + p.phases[m]);
    }
    out[n] = acc;
  }
  return out;
}

}  // namespace detail

struct SynthesisOptions {
  bool noise = true;
  bool include_irs = true;      // false models a room with no IRS installed (baseline)
  std::uint64_t noise_key = 0;  // stream key for this snapshot's noise draw
};

// Full received snapshot for the given person positions, with the noiseless
// decomposition. Noise: per antenna, Re and Im ~ N(0, sigma^2 / 2) from the keyed stream.
inline Snapshot synthesize_snapshot_terms(const Scenario& s, const PhasePattern& p,
                                          const std::vector<Vec3>& person_positions,
                                          const SynthesisOptions& opts, ChannelTerms* terms_out) {
  const std::size_t nr = s.rx_antennas.size();
  const double sqrt_p = std::sqrt(s.tx_power_watts());

  ChannelTerms terms;
  terms.direct = detail::direct_channel(s);
  terms.tx_irs_rx = opts.include_irs ? detail::tx_irs_rx_channel(s, p)
                                     : std::vector<cplx>(nr, cplx{0.0, 0.0});

  auto add_reflector = [&](const Vec3& pos) {
    const ReflectorResponse r = reflector_response(s, pos);
    ChannelTerms::ReflectorTerms rt;
    rt.tor.resize(nr);
    rt.tior.resize(nr);
    const cplx bracket = opts.include_irs ? r.irs_sum(p) : cplx{0.0, 0.0};
    for (std::size_t n = 0; n < nr; ++n) {
      rt.tor[n] = r.h_or[n] * r.h_to;
      rt.tior[n] = r.h_or[n] * bracket;
    }
    terms.reflectors.push_back(std::move(rt));
  };
  for (const Vec3& r : s.static_reflectors) add_reflector(r);
  for (const Vec3& q : person_positions) add_reflector(q);

  Snapshot snap;
  snap.pattern_id = p.id();
  snap.values.assign(nr, cplx{0.0, 0.0});
  for (std::size_t n = 0; n < nr; ++n) {
    cplx acc = terms.direct[n] + terms.tx_irs_rx[n];
    for (const auto& rt : terms.reflectors) acc += rt.tor[n] + rt.tior[n];
    snap.values[n] = sqrt_p * acc;
  }

  if (opts.noise) {
    const double sigma = std::sqrt(s.noise_power_watts() / 2.0);  // per real component
    KeyedRng rng(mix_key(s.rng_seed, stream::kNoise, opts.noise_key));
    for (std::size_t n = 0; n < nr; ++n) {
      double re, im;
      rng.normal_pair(re, im);
      snap.values[n] += cplx{sigma * re, sigma * im};
    }
  }

  if (terms_out) *terms_out = std::move(terms);
  return snap;
}

inline Snapshot synthesize_snapshot(const Scenario& s, const PhasePattern& p,
                                    const std::vector<Vec3>& person_positions,
                                    const SynthesisOptions& opts) {
  return synthesize_snapshot_terms(s, p, person_positions, opts, nullptr);
}

// Consecutive-measurement clutter subtraction: a - b, valid only under the same pattern.
inline std::vector<cplx> subtract(const Snapshot& a, const Snapshot& b) {
  if (a.pattern_id != b.pattern_id)
    throw std::invalid_argument("subtract: snapshots were taken under different IRS patterns");
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("subtract: antenna count mismatch");
  std::vector<cplx> out(a.values.size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = a.values[n] - b.values[n];
  return out;
}

}  // namespace irsloc
