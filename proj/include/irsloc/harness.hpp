#pragma once
// Monte Carlo experiment driver: error-vs-sweep benchmarks over several receiver
// configurations, trajectory tracking, and focus/interference beam-pattern comparison.
//
// Reproducibility contract: every random draw is keyed by (seed, stream, sweep index,
// trial index), so reports are byte-identical for any thread count. Person positions are
// keyed without the baseline so different baselines see identical position draws (paired
// comparison); noise streams do include the baseline.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "irsloc/locate.hpp"
#include "irsloc/nullsteer.hpp"

namespace irsloc {

// Mean Euclidean distance between paired estimates and truths (z ignored).
inline double rmse(const std::vector<Vec3>& estimates, const std::vector<Vec3>& truths) {
  if (estimates.empty()) throw std::invalid_argument("rmse: empty input");
  if (estimates.size() != truths.size()) throw std::invalid_argument("rmse: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i)
    sum += std::hypot(estimates[i].x - truths[i].x, estimates[i].y - truths[i].y);
  return sum / static_cast<double>(estimates.size());
}

// ---- sweep experiments ------------------------------------------------------------------

enum class SweepAxis { power_dbm, elements, states };
enum class Baseline { proposed, without_irs, random_irs, one_rx_antenna, no_cancellation };

inline const char* sweep_axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::power_dbm: return "power";
    case SweepAxis::elements: return "elements";
    default: return "states";
  }
}

inline const char* baseline_name(Baseline b) {
  switch (b) {
    case Baseline::proposed: return "proposed";
    case Baseline::without_irs: return "without_irs";
    case Baseline::random_irs: return "random_irs";
    case Baseline::one_rx_antenna: return "one_rx_antenna";
    default: return "no_cancellation";
  }
}

struct ExperimentSpec {
  Scenario scenario;
  SweepAxis axis = SweepAxis::power_dbm;
  std::vector<double> values = {-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0};
  Baseline baseline = Baseline::proposed;
  int trials = 100;
  std::uint64_t rng_seed = 0;
  FramePairMode mode = FramePairMode::appear;
  std::vector<ScanLevel> levels = default_levels();
  int threads = 0;
};

struct SweepPoint {
  double sweep_value = 0.0;
  double mean_error_m = 0.0;
  std::vector<double> errors;  // one per trial, trial-index order
};

struct RmseReport {
  SweepAxis axis = SweepAxis::power_dbm;
  Baseline baseline = Baseline::proposed;
  std::vector<SweepPoint> points;
};

namespace detail {

inline Scenario apply_sweep(const Scenario& base, SweepAxis axis, double value) {
  Scenario s = base;
  switch (axis) {
    case SweepAxis::power_dbm:
      s.tx_power_dbm = value;
      break;
    case SweepAxis::elements: {
      const int n = static_cast<int>(std::lround(value));
      if (std::abs(value - n) > 1e-9 || n < 1)
        throw std::invalid_argument("sweep: element count must be a positive integer");
      s.irs.rows = n;
      s.irs.cols = n;
      break;
    }
    case SweepAxis::states: {
      const int k = static_cast<int>(std::lround(value));
      if (std::abs(value - k) > 1e-9 || k < 2 || (k & (k - 1)) != 0)
        throw std::invalid_argument("sweep: state count must be a power of two >= 2");
      int bits = 0;
      for (int v = k; v > 1; v >>= 1) ++bits;
      s.irs.bits = bits;
      break;
    }
  }
  return s;
}

// Uniform interior draw, at least 0.5 m from every wall; also yields a heading for the
// displaced previous frame when the source runs in step mode.
inline void draw_position(const Scenario& s, std::uint64_t seed, std::uint64_t sweep_idx,
                          std::uint64_t trial, Vec3& pos, Vec3& prev) {
  KeyedRng rng(mix_key(seed, stream::kPosition, sweep_idx, trial));
  pos = {0.5 + rng.uniform01() * (s.room.x - 1.0), 0.5 + rng.uniform01() * (s.room.y - 1.0), 0.0};
  const double heading = rng.uniform01() * kTwoPi;
  const double step = 0.1;
  prev = {pos.x - step * std::cos(heading), pos.y - step * std::sin(heading), 0.0};
}

}  // namespace detail

inline RmseReport run_experiment(const ExperimentSpec& spec) {
  if (spec.trials < 1) throw std::invalid_argument("run_experiment: trials must be >= 1");
  if (spec.values.empty()) throw std::invalid_argument("run_experiment: empty sweep");
  validate(spec.scenario);

  RmseReport report;
  report.axis = spec.axis;
  report.baseline = spec.baseline;
  const std::uint64_t baseline_tag = static_cast<std::uint64_t>(spec.baseline) + 1;

  for (std::size_t si = 0; si < spec.values.size(); ++si) {
    Scenario sc = detail::apply_sweep(spec.scenario, spec.axis, spec.values[si]);
    if (spec.baseline == Baseline::one_rx_antenna) sc.rx_antennas.resize(1);
    validate(sc);

    SweepPoint point;
    point.sweep_value = spec.values[si];
    point.errors.assign(spec.trials, 0.0);
    parallel_for(static_cast<std::size_t>(spec.trials), spec.threads, [&](std::size_t t) {
      Vec3 pos, prev;
      detail::draw_position(sc, spec.rng_seed, si, t, pos, prev);
      Scenario run = sc;
      run.persons = {Trajectory{{Waypoint{0.0, pos}}, 0.1}};
      run.rng_seed = spec.rng_seed;

      const bool with_irs = spec.baseline != Baseline::without_irs;
      SimulatedSource src(run, spec.mode, true, with_irs);
      if (spec.mode == FramePairMode::step) src.set_positions({pos}, {prev});
      src.set_trial(mix_key(si, baseline_tag, t));

      double ex, ey;
      const std::uint64_t key = mix_key(si, baseline_tag, t);
      if (spec.baseline == Baseline::no_cancellation) {
        MultiParams mp;
        mp.enable_null = false;
        mp.max_persons = 1;
        mp.levels = spec.levels;
        mp.base_key = key;
        mp.threads = 1;
        const MultiResult res = locate_multi(src, run, mp);
        if (res.set.detections.empty()) {
          ex = 0.5 * run.room.x;
          ey = 0.5 * run.room.y;
        } else {
          ex = res.set.detections.front().x;
          ey = res.set.detections.front().y;
        }
      } else {
        PatternProvider provider;
        switch (spec.baseline) {
          case Baseline::without_irs:
            provider = fixed_provider(zero_pattern(run.irs.element_count()));
            break;
          case Baseline::random_irs:
            provider = fixed_provider(random_pattern(run, mix_key(si, t)));
            break;
          default:
            provider = optimal_provider(run);
        }
        const LocateResult res = locate_single(src, run, spec.levels, provider, key, 1);
        ex = res.x;
        ey = res.y;
      }
      point.errors[t] = std::hypot(ex - pos.x, ey - pos.y);
    });

    double sum = 0.0;
    for (double e : point.errors) sum += e;
    point.mean_error_m = sum / spec.trials;
    report.points.push_back(std::move(point));
  }
  return report;
}

inline void save_rmse_csv(const RmseReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report file: " + path);
  out << "sweep_value,mean_error_m,trial_count\n";
  char line[128];
  for (const SweepPoint& p : r.points) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%zu\n", p.sweep_value, p.mean_error_m,
                  p.errors.size());
    out << line;
  }
}

inline void save_trials_csv(const RmseReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report file: " + path);
  out << "sweep_value,trial,error_m\n";
  char line[128];
  for (const SweepPoint& p : r.points)
    for (std::size_t t = 0; t < p.errors.size(); ++t) {
      std::snprintf(line, sizeof(line), "%.17g,%zu,%.17g\n", p.sweep_value, t, p.errors[t]);
      out << line;
    }
}

// ---- trajectory tracking ----------------------------------------------------------------

// Resample a waypoint polyline at equal arc-length steps starting from the first waypoint.
// A zero-length (stationary) trajectory yields one frame per waypoint.
inline std::vector<Vec3> resample_trajectory(const Trajectory& traj, double step_m) {
  if (traj.waypoints.empty()) throw std::invalid_argument("resample: empty trajectory");
  if (!(step_m > 0.0)) throw std::invalid_argument("resample: step must be positive");
  std::vector<Vec3> pts;
  for (const Waypoint& w : traj.waypoints) pts.push_back(w.pos);
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) total += distance(pts[i - 1], pts[i]);
  if (total <= 1e-12) return pts;

  std::vector<Vec3> frames;
  for (double s = 0.0; s <= total + 1e-12; s += step_m) {
    double remaining = std::min(s, total);
    std::size_t seg = 1;
    while (seg < pts.size()) {
      const double len = distance(pts[seg - 1], pts[seg]);
      if (remaining <= len || seg + 1 == pts.size()) break;
      remaining -= len;
      ++seg;
    }
    const Vec3& a = pts[seg - 1];
    const Vec3& b = pts[seg];
    const double len = distance(a, b);
    const double f = len > 0.0 ? std::min(remaining / len, 1.0) : 0.0;
    frames.push_back({a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), a.z + f * (b.z - a.z)});
  }
  return frames;
}

enum class Pipeline { single, multi };

struct TrackOptions {
  Pipeline pipeline = Pipeline::single;
  FramePairMode mode = FramePairMode::appear;
  std::vector<ScanLevel> levels = default_levels();
  double noise_floor = 0.0;  // multi pipeline stop threshold
  double phi_max = kPi / 6.0;
  double mask_side = 0.5;
  int max_persons = 10;
  double sdp_tol = 1e-5;
  std::uint64_t base_key = 0;
  int threads = 0;
};

struct TrackFrame {
  int frame = 0;
  int person = 0;  // 0 is the tracked trajectory
  double truth_x = 0.0, truth_y = 0.0;
  double est_x = 0.0, est_y = 0.0;
  bool detected = false;
};

struct TrackResult {
  std::vector<TrackFrame> frames;
};

namespace detail {

// Greedy nearest matching: repeatedly pair the globally closest (person, detection).
// Returns detection index per person, -1 when unmatched.
inline std::vector<int> match_detections(const std::vector<Vec3>& truths,
                                         const std::vector<Detection>& dets) {
  std::vector<int> assign(truths.size(), -1);
  std::vector<bool> used(dets.size(), false);
  const std::size_t rounds = std::min(truths.size(), dets.size());
  for (std::size_t r = 0; r < rounds; ++r) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bp = 0, bd = 0;
    bool any = false;
    for (std::size_t p = 0; p < truths.size(); ++p) {
      if (assign[p] >= 0) continue;
      for (std::size_t d = 0; d < dets.size(); ++d) {
        if (used[d]) continue;
        const double dist = std::hypot(truths[p].x - dets[d].x, truths[p].y - dets[d].y);
        if (dist < best) {
          best = dist;
          bp = p;
          bd = d;
          any = true;
        }
      }
    }
    if (!any) break;
    assign[bp] = static_cast<int>(bd);
    used[bd] = true;
  }
  return assign;
}

}  // namespace detail

// Per-frame independent localization along a trajectory; no temporal filtering. The given
// trajectory drives the frame timeline and replaces the scenario's first person; any other
// scenario persons move along their own trajectories (clamped at their final frame).
inline TrackResult track(const Scenario& s, const Trajectory& traj, const TrackOptions& opt = {}) {
  if (traj.waypoints.size() < 2) throw std::invalid_argument("track: need at least 2 waypoints");
  Scenario run = s;
  if (run.persons.empty())
    run.persons.push_back(traj);
  else
    run.persons[0] = traj;
  validate(run);

  std::vector<std::vector<Vec3>> paths;  // per person frame positions
  paths.push_back(resample_trajectory(traj, traj.inter_frame_step_m));
  for (std::size_t i = 1; i < run.persons.size(); ++i)
    paths.push_back(resample_trajectory(run.persons[i], run.persons[i].inter_frame_step_m));
  const std::size_t n_frames = paths[0].size();
  const std::size_t n_persons = paths.size();

  auto pos_at = [&](std::size_t person, std::size_t frame) {
    const std::vector<Vec3>& p = paths[person];
    return p[std::min(frame, p.size() - 1)];
  };

  SimulatedSource src(run, opt.mode, true);
  TrackResult result;
  for (std::size_t k = 0; k < n_frames; ++k) {
    std::vector<Vec3> curr(n_persons);
    for (std::size_t p = 0; p < n_persons; ++p) curr[p] = pos_at(p, k);
    if (opt.mode == FramePairMode::step) {
      std::vector<Vec3> prev(n_persons);
      for (std::size_t p = 0; p < n_persons; ++p) {
        if (k > 0) {
          prev[p] = pos_at(p, k - 1);
        } else {
          // Mirror the first step backwards, clamped into the room.
          const Vec3 next = pos_at(p, 1);
          Vec3 b{2.0 * curr[p].x - next.x, 2.0 * curr[p].y - next.y, curr[p].z};
          b.x = std::min(std::max(b.x, 0.01), run.room.x - 0.01);
          b.y = std::min(std::max(b.y, 0.01), run.room.y - 0.01);
          prev[p] = b;
        }
      }
      src.set_positions(curr, prev);
    } else {
      src.set_positions(curr);
    }
    src.set_frame(k);

    const std::uint64_t key = mix_key(opt.base_key, static_cast<std::uint64_t>(k));
    if (opt.pipeline == Pipeline::single) {
      const LocateResult r =
          locate_single(src, run, opt.levels, optimal_provider(run), key, opt.threads);
      result.frames.push_back({static_cast<int>(k), 0, curr[0].x, curr[0].y, r.x, r.y, true});
    } else {
      MultiParams mp;
      mp.phi_max = opt.phi_max;
      mp.mask_side = opt.mask_side;
      mp.noise_floor = opt.noise_floor;
      mp.max_persons = opt.max_persons;
      mp.levels = opt.levels;
      mp.sdp_tol = opt.sdp_tol;
      mp.base_key = key;
      mp.threads = opt.threads;
      const MultiResult res = locate_multi(src, run, mp);
      const std::vector<int> assign = detail::match_detections(curr, res.set.detections);
      for (std::size_t p = 0; p < n_persons; ++p) {
        TrackFrame row;
        row.frame = static_cast<int>(k);
        row.person = static_cast<int>(p);
        row.truth_x = curr[p].x;
        row.truth_y = curr[p].y;
        if (assign[p] >= 0) {
          row.est_x = res.set.detections[assign[p]].x;
          row.est_y = res.set.detections[assign[p]].y;
          row.detected = true;
        } else {
          row.est_x = std::numeric_limits<double>::quiet_NaN();
          row.est_y = std::numeric_limits<double>::quiet_NaN();
          row.detected = false;
        }
        result.frames.push_back(row);
      }
    }
  }
  return result;
}

inline void save_track_csv(const TrackResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write track file: " + path);
  out << "frame,truth_x,truth_y,est_x,est_y\n";
  char line[160];
  for (const TrackFrame& f : r.frames) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g\n", f.frame, f.truth_x,
                  f.truth_y, f.est_x, f.est_y);
    out << line;
  }
}

// ---- beam-pattern comparison --------------------------------------------------------------

struct PatternComparison {
  BeamPatternMap no_cancellation;
  BeamPatternMap proposed;
  double suppression_db = 0.0;   // interference response drop (positive = suppressed)
  double focus_delta_db = 0.0;   // focus response loss (positive = weaker focus)
  double interference_before = 0.0;
  double interference_after = 0.0;
  double focus_before = 0.0;
  double focus_after = 0.0;
};

namespace detail {

// Combined response magnitude for a probe reflector at an exact point.
inline double point_response(const Scenario& s, const PhasePattern& p, const BeamWeights& w,
                             const Vec3& point) {
  const ReflectorResponse r = reflector_response(s, point);
  const cplx bracket = r.h_to + r.irs_sum(p);
  cplx acc{0.0, 0.0};
  for (std::size_t n = 0; n < w.weights.size(); ++n) acc += w.weights[n] * (r.h_or[n] * bracket);
  return std::abs(acc);
}

}  // namespace detail

// Focus a pattern at `focus`, then null-steer it against a detected person at
// `interference`; maps are rendered on a uniform grid, the dB metrics are evaluated at the
// exact points (raw magnitudes, not per-map normalized dB).
inline PatternComparison compare_patterns(const Scenario& s, const Vec3& focus,
                                          const Vec3& interference, double phi_max = kPi / 6.0,
                                          double cell_m = 0.02, double sdp_tol = 1e-6) {
  validate(s);
  if (std::hypot(focus.x - interference.x, focus.y - interference.y) < 1e-9)
    throw std::invalid_argument("compare_patterns: focus and interference coincide");

  const PhasePattern q0 = quantize(optimal_phases(s, focus.x, focus.y), s.irs.bits);
  const BeamWeights w = steering_weights(s, focus.x, focus.y);
  const NullProblem prob = build_problem(s, q0, w, {interference}, phi_max);
  const Perturbation pert = solve_null(prob, sdp_tol);
  const PhasePattern q1 = apply_perturbation(q0, pert, kPerturbationBits);

  PatternComparison out;
  const Grid grid = room_grid(s, cell_m, 1);
  out.no_cancellation = beam_pattern(s, q0, w, grid);
  out.proposed = beam_pattern(s, q1, w, grid);
  out.interference_before = detail::point_response(s, q0, w, interference);
  out.interference_after = detail::point_response(s, q1, w, interference);
  out.focus_before = detail::point_response(s, q0, w, focus);
  out.focus_after = detail::point_response(s, q1, w, focus);
  out.suppression_db = 20.0 * std::log10(out.interference_before / out.interference_after);
  out.focus_delta_db = 20.0 * std::log10(out.focus_before / out.focus_after);
  return out;
}

}  // namespace irsloc
