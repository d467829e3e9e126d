#pragma once
// IRS phase programming: the closed-form focusing solution, B-bit quantization,
// per-grid-cell codebooks with a diffable text format, and beam-pattern evaluation.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "irsloc/beamform.hpp"
#include "irsloc/channel.hpp"
#include "irsloc/grid.hpp"
#include "irsloc/scene.hpp"

namespace irsloc {

// phi_m = 2 pi (d_IO^m + d_TI^m - d_TO) / lambda mod 2pi: aligns every element's
// Tx -> IRS -> focus path with the direct Tx -> focus path, so all terms add in phase.
inline PhasePattern optimal_phases(const Scenario& s, double x, double y) {
  const Vec3 p{x, y, 0.0};
  if (!detail::inside_room(p, s.room))
    throw std::invalid_argument("optimal_phases: focus outside room");
  const double lam = s.wavelength();
  const double d_to = distance(s.tx, p);
  PhasePattern out;
  out.quantized = false;
  out.bits = 0;
  const std::vector<Vec3> elems = irs_element_positions(s.irs);
  out.phases.reserve(elems.size());
  for (const Vec3& e : elems) {
    const double arg = kTwoPi * (distance(e, p) + distance(s.tx, e) - d_to) / lam;
    double phi = std::fmod(arg, kTwoPi);
    if (phi < 0.0) phi += kTwoPi;
    out.phases.push_back(phi);
  }
  return out;
}

// Nearest lattice state by circular distance; exact half-step ties go to the smaller
// codeword (so both 2pi - step/2 and step/2 resolve to codeword 0).
inline PhasePattern quantize(const PhasePattern& p, int bits) {
  if (bits < 1) throw std::invalid_argument("quantize: bits must be >= 1");
  const int n_states = 1 << bits;
  const double step = kTwoPi / n_states;
  PhasePattern out;
  out.quantized = true;
  out.bits = bits;
  out.phases.reserve(p.phases.size());
  for (double phi : p.phases) {
    double x = std::fmod(phi, kTwoPi) / step;
    if (x < 0.0) x += n_states;
    const double k0 = std::floor(x);
    const double frac = x - k0;
    long k;
    if (frac < 0.5) k = static_cast<long>(k0);
    else if (frac > 0.5) k = static_cast<long>(k0) + 1;
    else k = std::min(static_cast<long>(k0) % n_states, (static_cast<long>(k0) + 1) % n_states);
    k %= n_states;
    out.phases.push_back(k * step);
  }
  return out;
}

// Lookup table: one quantized focusing pattern per grid cell.
struct Codebook {
  Grid grid;
  int element_count = 0;
  int bits = 0;
  std::vector<PhasePattern> entries;  // indexed by grid cell
};

inline Codebook build_codebook(const Scenario& s, const Grid& grid) {
  Codebook cb;
  cb.grid = grid;
  cb.element_count = s.irs.element_count();
  cb.bits = s.irs.bits;
  cb.entries.resize(grid.cell_count());
  for (std::size_t k = 0; k < grid.cell_count(); ++k) {
    const Vec3 c = grid.cell_center(k);
    cb.entries[k] = quantize(optimal_phases(s, c.x, c.y), s.irs.bits);
  }
  return cb;
}

// Text format: header "irsloc-codebook 1 <level> <x0> <y0> <cell> <rows> <cols> <M> <B>"
// then one line per cell: index followed by M integer codewords in 0 .. 2^B - 1.
inline void save_codebook(const Codebook& cb, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write codebook file: " + path);
  char head[256];
  std::snprintf(head, sizeof(head), "irsloc-codebook 1 %d %.17g %.17g %.17g %d %d %d %d",
                cb.grid.level, cb.grid.origin_x, cb.grid.origin_y, cb.grid.cell_m, cb.grid.rows,
                cb.grid.cols, cb.element_count, cb.bits);
  out << head << '\n';
  const double step = kTwoPi / (1 << cb.bits);
  for (std::size_t k = 0; k < cb.entries.size(); ++k) {
    out << k;
    for (double phi : cb.entries[k].phases)
      out << ' ' << static_cast<long>(phi / step + 0.5) % (1L << cb.bits);
    out << '\n';
  }
}

inline Codebook load_codebook(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open codebook file: " + path);
  std::string magic;
  int version = 0;
  Codebook cb;
  in >> magic >> version >> cb.grid.level >> cb.grid.origin_x >> cb.grid.origin_y >>
      cb.grid.cell_m >> cb.grid.rows >> cb.grid.cols >> cb.element_count >> cb.bits;
  if (!in || magic != "irsloc-codebook" || version != 1)
    throw std::runtime_error("bad codebook header in " + path);
  const double step = kTwoPi / (1 << cb.bits);
  cb.entries.resize(cb.grid.cell_count());
  for (std::size_t k = 0; k < cb.entries.size(); ++k) {
    std::size_t idx = 0;
    in >> idx;
    if (!in || idx != k) throw std::runtime_error("bad codebook cell index in " + path);
    PhasePattern p;
    p.quantized = true;
    p.bits = cb.bits;
    p.phases.resize(cb.element_count);
    for (int m = 0; m < cb.element_count; ++m) {
      long code = 0;
      in >> code;
      if (!in || code < 0 || code >= (1L << cb.bits))
        throw std::runtime_error("bad codeword in " + path);
      p.phases[m] = code * step;
    }
    cb.entries[k] = std::move(p);
  }
  return cb;
}

// Spatial response map for a fixed pattern/weights pair: per cell, the noiseless
// single-reflector combined magnitude |w . (h_or(cell) * (h_to(cell) + irs_sum(cell)))|.
// db values are relative to the map peak (peak = 0 dB).
struct BeamPatternMap {
  Grid grid;
  std::vector<double> raw;  // linear magnitudes
  std::vector<double> db;   // 20 log10(raw / peak)
};

inline BeamPatternMap beam_pattern(const Scenario& s, const PhasePattern& p, const BeamWeights& w,
                                   const Grid& grid) {
  if (p.phases.size() != static_cast<std::size_t>(s.irs.element_count()))
    throw std::invalid_argument("beam_pattern: pattern length does not match IRS element count");
  if (w.weights.size() != s.rx_antennas.size())
    throw std::invalid_argument("beam_pattern: weight count does not match antenna count");
  // The pattern is fixed across cells; bake its phasors into a copy of the element gains.
  std::vector<cplx> phasors(p.phases.size());
  for (std::size_t m = 0; m < p.phases.size(); ++m) phasors[m] = std::polar(1.0, p.phases[m]);

  BeamPatternMap map;
  map.grid = grid;
  map.raw.resize(grid.cell_count());
  for (std::size_t k = 0; k < grid.cell_count(); ++k) {
    const Vec3 c = grid.cell_center(k);
    const ReflectorResponse r = reflector_response(s, c);
    cplx irs{0.0, 0.0};
    for (std::size_t m = 0; m < phasors.size(); ++m) irs += r.g[m] * phasors[m];
    const cplx bracket = r.h_to + irs;
    cplx acc{0.0, 0.0};
    for (std::size_t n = 0; n < r.h_or.size(); ++n) acc += w.weights[n] * (r.h_or[n] * bracket);
    map.raw[k] = std::abs(acc);
  }
  double peak = 0.0;
  for (double v : map.raw) peak = std::max(peak, v);
  map.db.resize(map.raw.size());
  for (std::size_t k = 0; k < map.raw.size(); ++k)
    map.db[k] = peak > 0.0 ? 20.0 * std::log10(std::max(map.raw[k], 1e-300) / peak) : 0.0;
  return map;
}

inline void save_beam_pattern_csv(const BeamPatternMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write beam pattern file: " + path);
  out << "x,y,value_db\n";
  char line[128];
  for (std::size_t k = 0; k < map.db.size(); ++k) {
    const Vec3 c = map.grid.cell_center(k);
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", c.x, c.y, map.db[k]);
    out << line;
  }
}

}  // namespace irsloc
