#pragma once
// Localization pipelines over a measurement-source abstraction.
//
// scan: per grid cell, steer the receiver and the IRS at the cell, take a consecutive
// measurement pair under that pattern, subtract, combine; the heatmap is |combined|.
// locate_single: coarse-to-fine multi-level scan, returning the finest argmax center.
// locate_multi: iterative side-lobe cancellation; iteration 1 is a plain scan, later
// iterations re-solve the per-cell null-steering problem against the detected set,
// mask detected neighborhoods, and stop at the noise floor or the person cap.
//
// Determinism: all noise is keyed by (trial, frame, measurement key, snapshot index),
// never by evaluation order, so any thread count gives identical results.

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "irsloc/beamform.hpp"
#include "irsloc/channel.hpp"
#include "irsloc/grid.hpp"
#include "irsloc/irscontrol.hpp"
#include "irsloc/nullsteer.hpp"
#include "irsloc/parallel.hpp"
#include "irsloc/rng.hpp"
#include "irsloc/scene.hpp"

namespace irsloc {

struct Heatmap {
  Grid grid;
  std::vector<double> amplitude;  // non-negative, one per cell

  // Ties go to the smaller linear index.
  std::size_t argmax() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < amplitude.size(); ++k)
      if (amplitude[k] > amplitude[best]) best = k;
    return best;
  }
};

struct MeasurementPair {
  Snapshot prev;
  Snapshot curr;
};

// A source of consecutive measurement pairs taken under one IRS pattern. meas_key
// identifies the measurement for noise-stream derivation.
class MeasurementSource {
 public:
  virtual ~MeasurementSource() = default;
  virtual MeasurementPair measure(const PhasePattern& p, const BeamWeights& w,
                                  std::uint64_t meas_key) const = 0;
};

// How the two frames of a pair differ.
//   appear: previous frame holds only static clutter; persons enter in the current frame.
//           (The residual is exactly the person channel plus a noise difference.)
//   step:   persons are present in both frames, displaced by the inter-frame step;
//           the residual honestly contains both positions.
enum class FramePairMode { appear, step };

class SimulatedSource : public MeasurementSource {
 public:
  explicit SimulatedSource(const Scenario& s, FramePairMode mode = FramePairMode::appear,
                           bool noise = true, bool include_irs = true)
      : sc_(&s), mode_(mode), noise_(noise), include_irs_(include_irs) {
    validate(s);
    direct_ = detail::direct_channel(s);
    const std::vector<Vec3> elems = irs_element_positions(s.irs);
    const std::size_t nr = s.rx_antennas.size();
    tx_irs_rx_gain_.assign(nr, std::vector<cplx>(elems.size()));
    const double lam = s.wavelength();
    for (std::size_t n = 0; n < nr; ++n)
      for (std::size_t m = 0; m < elems.size(); ++m) {
        const double d_ti = distance(s.tx, elems[m]);
        const double d_ir = distance(elems[m], s.rx_antennas[n]);
        const double amp = path_amplitude(d_ti, s.path_loss.alpha_ti, s.path_loss.rho0_db) *
                           path_amplitude(d_ir, s.path_loss.alpha_io, s.path_loss.rho0_db);
        tx_irs_rx_gain_[n][m] = amp * std::polar(1.0, -kTwoPi * (d_ti + d_ir) / lam);
      }
    for (const Vec3& r : s.static_reflectors) statics_.push_back(reflector_response(s, r));

    std::vector<Vec3> curr;
    for (const Trajectory& t : s.persons) curr.push_back(t.waypoints.front().pos);
    set_positions(curr);
  }

  const Scenario& scenario() const { return *sc_; }
  FramePairMode mode() const { return mode_; }
  void set_trial(std::uint64_t t) { trial_ = t; }
  void set_frame(std::uint64_t f) { frame_ = f; }

  // Current person positions; in step mode the previous frame defaults to a shift of
  // inter_frame_step along -x (clamped into the room) unless given explicitly.
  void set_positions(const std::vector<Vec3>& curr) {
    std::vector<Vec3> prev;
    for (std::size_t i = 0; i < curr.size(); ++i) {
      const double step =
          i < sc_->persons.size() ? sc_->persons[i].inter_frame_step_m : 0.1;
      Vec3 p = curr[i];
      p.x = p.x - step >= 0.0 ? p.x - step : p.x + step;
      prev.push_back(p);
    }
    set_positions(curr, prev);
  }

  void set_positions(const std::vector<Vec3>& curr, const std::vector<Vec3>& prev) {
    if (mode_ == FramePairMode::step && prev.size() != curr.size())
      throw std::invalid_argument("SimulatedSource: prev/curr position count mismatch");
    curr_resp_.clear();
    prev_resp_.clear();
    for (const Vec3& p : curr) curr_resp_.push_back(reflector_response(*sc_, p));
    if (mode_ == FramePairMode::step)
      for (const Vec3& p : prev) prev_resp_.push_back(reflector_response(*sc_, p));
  }

  MeasurementPair measure(const PhasePattern& p, const BeamWeights&,
                          std::uint64_t meas_key) const override {
    const std::size_t m = static_cast<std::size_t>(sc_->irs.element_count());
    if (include_irs_ && p.phases.size() != m)
      throw std::invalid_argument("SimulatedSource: pattern length mismatch");
    std::vector<cplx> u;
    if (include_irs_) {
      u.resize(m);
      for (std::size_t i = 0; i < m; ++i) u[i] = std::polar(1.0, p.phases[i]);
    }
    const std::uint64_t id = p.id();
    MeasurementPair pair;
    pair.prev = assemble(u, prev_resp_, mode_ == FramePairMode::appear ? 0 : prev_resp_.size(),
                         id, 0, meas_key);
    pair.curr = assemble(u, curr_resp_, curr_resp_.size(), id, 1, meas_key);
    return pair;
  }

 private:
  // One snapshot from cached per-reflector responses. Term order matches
  // synthesize_snapshot: direct + tx_irs_rx + statics + persons, then noise.
  Snapshot assemble(const std::vector<cplx>& u, const std::vector<ReflectorResponse>& persons,
                    std::size_t person_count, std::uint64_t pattern_id, std::uint64_t snap_index,
                    std::uint64_t meas_key) const {
    const std::size_t nr = sc_->rx_antennas.size();
    const double sqrt_p = std::sqrt(sc_->tx_power_watts());

    auto bracket_of = [&](const ReflectorResponse& r) {
      cplx acc{0.0, 0.0};
      if (include_irs_)
        for (std::size_t i = 0; i < u.size(); ++i) acc += r.g[i] * u[i];
      return acc;
    };
    std::vector<cplx> static_brackets(statics_.size());
    for (std::size_t i = 0; i < statics_.size(); ++i) static_brackets[i] = bracket_of(statics_[i]);
    std::vector<cplx> person_brackets(person_count);
    for (std::size_t i = 0; i < person_count; ++i) person_brackets[i] = bracket_of(persons[i]);

    Snapshot snap;
    snap.pattern_id = pattern_id;
    snap.t = snap_index;
    snap.values.assign(nr, cplx{0.0, 0.0});
    for (std::size_t n = 0; n < nr; ++n) {
      cplx tir{0.0, 0.0};
      if (include_irs_)
        for (std::size_t i = 0; i < u.size(); ++i) tir += tx_irs_rx_gain_[n][i] * u[i];
      cplx acc = direct_[n] + tir;
      for (std::size_t i = 0; i < statics_.size(); ++i)
        acc += statics_[i].h_or[n] * statics_[i].h_to + statics_[i].h_or[n] * static_brackets[i];
      for (std::size_t i = 0; i < person_count; ++i)
        acc += persons[i].h_or[n] * persons[i].h_to + persons[i].h_or[n] * person_brackets[i];
      snap.values[n] = sqrt_p * acc;
    }
    if (noise_) {
      const double sigma = std::sqrt(sc_->noise_power_watts() / 2.0);
      KeyedRng rng(mix_key(sc_->rng_seed, stream::kNoise, mix_key(trial_, frame_, meas_key, snap_index)));
      for (std::size_t n = 0; n < nr; ++n) {
        double re, im;
        rng.normal_pair(re, im);
        snap.values[n] += cplx{sigma * re, sigma * im};
      }
    }
    return snap;
  }

  const Scenario* sc_;
  FramePairMode mode_;
  bool noise_;
  bool include_irs_;
  std::uint64_t trial_ = 0;
  std::uint64_t frame_ = 0;
  std::vector<cplx> direct_;
  std::vector<std::vector<cplx>> tx_irs_rx_gain_;  // [antenna][element]
  std::vector<ReflectorResponse> statics_;
  std::vector<ReflectorResponse> curr_resp_;
  std::vector<ReflectorResponse> prev_resp_;
};

// ---- pattern providers ----------------------------------------------------------------

using PatternProvider = std::function<PhasePattern(const Grid&, std::size_t)>;

// Quantized focusing pattern at each cell center (the codebook entry, computed on demand).
inline PatternProvider optimal_provider(const Scenario& s) {
  return [sc = s](const Grid& g, std::size_t k) {
    const Vec3 c = g.cell_center(k);
    return quantize(optimal_phases(sc, c.x, c.y), sc.irs.bits);
  };
}

inline PatternProvider codebook_provider(std::shared_ptr<const Codebook> cb) {
  return [cb](const Grid& g, std::size_t k) {
    if (!(g == cb->grid)) throw std::invalid_argument("codebook_provider: grid mismatch");
    return cb->entries.at(k);
  };
}

inline PatternProvider fixed_provider(PhasePattern p) {
  return [p](const Grid&, std::size_t) { return p; };
}

// Uniformly random quantized pattern, keyed by (seed, tag): one draw shared by all cells.
inline PhasePattern random_pattern(const Scenario& s, std::uint64_t tag) {
  KeyedRng rng(mix_key(s.rng_seed, stream::kPattern, tag));
  const int states = 1 << s.irs.bits;
  const double step = kTwoPi / states;
  PhasePattern p;
  p.quantized = true;
  p.bits = s.irs.bits;
  p.phases.resize(s.irs.element_count());
  for (double& phi : p.phases) phi = static_cast<double>(rng.next_u64() % states) * step;
  return p;
}

// Thread-safe store for null-steered patterns, keyed by grid geometry, cell and the
// detected set rounded to 0.05 m (the lookup-table granularity).
class NullPatternCache {
 public:
  bool lookup(const std::string& key, PhasePattern& out) const {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = map_.find(key);
    if (it == map_.end()) return false;
    out = it->second;
    return true;
  }
  void store(const std::string& key, const PhasePattern& p) {
    std::lock_guard<std::mutex> lk(mu_);
    map_.emplace(key, p);
  }
  static std::string make_key(const Grid& g, std::size_t cell, const std::vector<Vec3>& detected) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d|%.6f|%.6f|%.6f|%d|%zu", g.level, g.origin_x, g.origin_y,
                  g.cell_m, g.cols, cell);
    std::string key(buf);
    for (const Vec3& d : detected) {
      std::snprintf(buf, sizeof(buf), "|%.0f,%.0f", d.x / 0.05, d.y / 0.05);
      key += buf;
    }
    return key;
  }

 private:
  mutable std::mutex mu_;
  mutable std::map<std::string, PhasePattern> map_;
};

// Per-cell side-lobe-cancelling pattern: perturb the cell's focusing pattern to null the
// detected persons' leakage into this cell. The perturbation is kept on the fine phase
// grid (kPerturbationBits): the cancelling adjustments are mostly smaller than half a
// codebook step, so rounding them back to the codebook lattice would undo the nulling.
inline PatternProvider null_provider(const Scenario& s, std::vector<Vec3> detected,
                                     double phi_max, double sdp_tol,
                                     std::shared_ptr<NullPatternCache> cache) {
  return [sc = s, detected, phi_max, sdp_tol, cache](const Grid& g, std::size_t k) {
    const std::string key = NullPatternCache::make_key(g, k, detected);
    PhasePattern cached;
    if (cache && cache->lookup(key, cached)) return cached;
    const Vec3 c = g.cell_center(k);
    const PhasePattern q0 = quantize(optimal_phases(sc, c.x, c.y), sc.irs.bits);
    const BeamWeights w = steering_weights(sc, c.x, c.y);
    const NullProblem prob = build_problem(sc, q0, w, detected, phi_max);
    const Perturbation pert = solve_null(prob, sdp_tol);
    const PhasePattern out = apply_perturbation(q0, pert, kPerturbationBits);
    if (cache) cache->store(key, out);
    return out;
  };
}

// ---- scanning -------------------------------------------------------------------------

inline Heatmap scan(const MeasurementSource& src, const Scenario& s, const Grid& grid,
                    const PatternProvider& provider, std::uint64_t base_key = 0,
                    int threads = 0) {
  Heatmap h;
  h.grid = grid;
  h.amplitude.assign(grid.cell_count(), 0.0);
  parallel_for(grid.cell_count(), threads, [&](std::size_t k) {
    const Vec3 c = grid.cell_center(k);
    const PhasePattern p = provider(grid, k);
    const BeamWeights w = steering_weights(s, c.x, c.y);
    const MeasurementPair pair = src.measure(p, w, mix_key(base_key, k));
    h.amplitude[k] = std::abs(combine(w, subtract(pair.curr, pair.prev)));
  });
  return h;
}

// Zero all cells whose centers fall inside the axis-aligned square of side `side`
// centered on any detection.
inline Heatmap apply_mask(const Heatmap& h, const std::vector<Vec3>& detections, double side) {
  if (!(side > 0.0)) throw std::invalid_argument("apply_mask: side must be positive");
  Heatmap out = h;
  const double half = side / 2.0;
  for (std::size_t k = 0; k < out.amplitude.size(); ++k) {
    const Vec3 c = out.grid.cell_center(k);
    for (const Vec3& d : detections) {
      if (std::abs(c.x - d.x) <= half && std::abs(c.y - d.y) <= half) {
        out.amplitude[k] = 0.0;
        break;
      }
    }
  }
  return out;
}

// ---- multi-level single-person localization --------------------------------------------

struct ScanLevel {
  double cell_m;
  double half_span;  // <= 0 means the full room
};

// 0.5 m coarse over the room, 0.05 m around the winning cell (with margin for boundary
// ambiguity), 5 mm final pass.
inline std::vector<ScanLevel> default_levels() {
  return {{0.5, -1.0}, {0.05, 0.35}, {0.005, 0.05}};
}

struct LocateResult {
  double x = 0.0;
  double y = 0.0;
  double amplitude = 0.0;
  std::vector<Heatmap> heatmaps;  // one per level
};

inline LocateResult locate_single(const MeasurementSource& src, const Scenario& s,
                                  const std::vector<ScanLevel>& levels,
                                  const PatternProvider& provider, std::uint64_t base_key = 0,
                                  int threads = 0, const std::vector<Vec3>& mask_centers = {},
                                  double mask_side = 0.0) {
  if (levels.empty()) throw std::invalid_argument("locate_single: need at least one level");
  LocateResult res;
  double cx = 0.5 * s.room.x, cy = 0.5 * s.room.y;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const ScanLevel& lv = levels[li];
    const Grid grid = lv.half_span <= 0.0
                          ? room_grid(s, lv.cell_m, static_cast<int>(li) + 1)
                          : window_grid(s, cx, cy, lv.half_span, lv.cell_m, static_cast<int>(li) + 1);
    Heatmap h = scan(src, s, grid, provider, mix_key(base_key, 1000 + li), threads);
    if (!mask_centers.empty() && mask_side > 0.0) h = apply_mask(h, mask_centers, mask_side);
    const std::size_t best = h.argmax();
    const Vec3 c = grid.cell_center(best);
    cx = c.x;
    cy = c.y;
    res.amplitude = h.amplitude[best];
    res.heatmaps.push_back(std::move(h));
  }
  res.x = cx;
  res.y = cy;
  return res;
}

// Convenience form with the default levels and the codebook-on-demand provider.
inline LocateResult locate_single(const MeasurementSource& src, const Scenario& s,
                                  std::uint64_t base_key = 0, int threads = 0) {
  return locate_single(src, s, default_levels(), optimal_provider(s), base_key, threads);
}

// ---- multi-person side-lobe cancellation ------------------------------------------------

struct Detection {
  double x = 0.0;
  double y = 0.0;
  double amplitude = 0.0;
  int iteration = 0;
};

enum class StopReason { noise_floor, max_persons };

inline const char* stop_reason_name(StopReason r) {
  return r == StopReason::noise_floor ? "noise_floor" : "max_persons";
}

struct DetectionSet {
  std::vector<Detection> detections;  // ordered by iteration
  StopReason stop_reason = StopReason::noise_floor;
};

struct MultiParams {
  double phi_max = kPi / 6.0;
  double mask_side = 0.5;
  double noise_floor = 0.0;   // from noise_floor_estimate
  int max_persons = 10;
  std::vector<ScanLevel> levels = default_levels();
  bool enable_null = true;    // false forces delta_phi = 0 (plain patterns every iteration)
  double sdp_tol = 1e-5;
  std::uint64_t base_key = 0;
  int threads = 0;
};

struct MultiResult {
  DetectionSet set;
  std::vector<Heatmap> coarse_heatmaps;  // masked coarse map per iteration
};

inline MultiResult locate_multi(const MeasurementSource& src, const Scenario& s,
                                const MultiParams& params) {
  if (params.levels.empty()) throw std::invalid_argument("locate_multi: need at least one level");
  MultiResult out;
  std::vector<Vec3> found;
  auto cache = std::make_shared<NullPatternCache>();

  for (int iter = 1;; ++iter) {
    const PatternProvider provider =
        (found.empty() || !params.enable_null)
            ? optimal_provider(s)
            : null_provider(s, found, params.phi_max, params.sdp_tol, cache);

    const std::uint64_t iter_key = mix_key(params.base_key, static_cast<std::uint64_t>(iter));
    const Grid coarse = room_grid(s, params.levels[0].cell_m, 1);
    Heatmap h = scan(src, s, coarse, provider, mix_key(iter_key, 1000), params.threads);
    if (!found.empty()) h = apply_mask(h, found, params.mask_side);
    const std::size_t best = h.argmax();
    const double peak = h.amplitude[best];
    out.coarse_heatmaps.push_back(h);
    if (peak <= 0.0 || peak < params.noise_floor) {
      out.set.stop_reason = StopReason::noise_floor;
      break;
    }

    // Refine around the coarse winner with the same provider and masks.
    double cx = coarse.cell_center(best).x, cy = coarse.cell_center(best).y;
    double amp = peak;
    for (std::size_t li = 1; li < params.levels.size(); ++li) {
      const ScanLevel& lv = params.levels[li];
      const Grid grid = window_grid(s, cx, cy, lv.half_span, lv.cell_m, static_cast<int>(li) + 1);
      Heatmap fine = scan(src, s, grid, provider, mix_key(iter_key, 1000 + li), params.threads);
      if (!found.empty()) fine = apply_mask(fine, found, params.mask_side);
      const std::size_t fb = fine.argmax();
      cx = fine.grid.cell_center(fb).x;
      cy = fine.grid.cell_center(fb).y;
      amp = fine.amplitude[fb];
    }

    out.set.detections.push_back({cx, cy, amp, iter});
    found.push_back({cx, cy, 0.0});
    if (static_cast<int>(found.size()) >= params.max_persons) {
      out.set.stop_reason = StopReason::max_persons;
      break;
    }
  }
  return out;
}

// Detection threshold: mean + 3 std of the per-scan maximum combined amplitude over an
// empty scene (persons removed), one full coarse scan with a fresh random pattern per
// cell per trial. Requires trials >= 30.
inline double noise_floor_estimate(const Scenario& s, int trials, bool noise = true,
                                   int threads = 0, double coarse_cell_m = 0.5) {
  if (trials < 30) throw std::invalid_argument("noise_floor_estimate: trials must be >= 30");
  Scenario empty = s;
  empty.persons.clear();
  const Grid grid = room_grid(empty, coarse_cell_m, 1);

  std::vector<double> maxima(trials, 0.0);
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
    SimulatedSource trial_src(empty, FramePairMode::appear, noise);
    trial_src.set_trial(mix_key(stream::kFloor, t));
    double best = 0.0;
    for (std::size_t k = 0; k < grid.cell_count(); ++k) {
      const Vec3 c = grid.cell_center(k);
      const PhasePattern p = random_pattern(empty, mix_key(stream::kFloor, t, k));
      const BeamWeights w = steering_weights(empty, c.x, c.y);
      const MeasurementPair pair = trial_src.measure(p, w, mix_key(stream::kFloor, t, k));
      best = std::max(best, std::abs(combine(w, subtract(pair.curr, pair.prev))));
    }
    maxima[t] = best;
  });

  double mean = 0.0;
  for (double v : maxima) mean += v;
  mean /= trials;
  double var = 0.0;
  for (double v : maxima) var += (v - mean) * (v - mean);
  var = trials > 1 ? var / (trials - 1) : 0.0;
  return mean + 3.0 * std::sqrt(var);
}

// ---- exports ----------------------------------------------------------------------------

inline void save_heatmap_csv(const Heatmap& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write heatmap file: " + path);
  out << "x_center,y_center,amplitude\n";
  char line[128];
  for (std::size_t k = 0; k < h.amplitude.size(); ++k) {
    const Vec3 c = h.grid.cell_center(k);
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", c.x, c.y, h.amplitude[k]);
    out << line;
  }
}

inline nlohmann::json detections_to_json(const DetectionSet& set) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Detection& d : set.detections)
    arr.push_back({{"x", d.x}, {"y", d.y}, {"amplitude", d.amplitude}, {"iteration", d.iteration}});
  return arr;
}

}  // namespace irsloc
