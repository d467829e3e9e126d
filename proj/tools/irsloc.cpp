// Command-line front end: scenario ingestion, subcommand dispatch, artifact emission.
// All randomness flows from the scenario seed (or --seed); outputs are byte-identical
// for a fixed seed regardless of --threads.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "irsloc/harness.hpp"
#include "irsloc/locate.hpp"
#include "irsloc/scenario_io.hpp"

namespace {

struct Common {
  std::string scenario_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;  // 0: IRSLOC_THREADS env, then hardware
  int trials = 100;
  std::string format = "csv";
};

irsloc::Scenario resolve_scenario(const Common& c) {
  irsloc::Scenario s =
      c.scenario_path.empty() ? irsloc::default_scenario() : irsloc::load_scenario(c.scenario_path);
  if (c.seed_set) s.rng_seed = c.seed;
  return s;
}

std::string out_path(const Common& c, const std::string& name) {
  std::filesystem::create_directories(c.out_dir);
  return (std::filesystem::path(c.out_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int cmd_simulate(const Common& c) {
  const irsloc::Scenario s = resolve_scenario(c);
  const irsloc::Vec3 focus = s.persons.empty()
                                 ? irsloc::Vec3{0.5 * s.room.x, 0.5 * s.room.y, 0.0}
                                 : s.persons.front().waypoints.front().pos;
  const irsloc::PhasePattern p =
      irsloc::quantize(irsloc::optimal_phases(s, focus.x, focus.y), s.irs.bits);
  const irsloc::BeamWeights w = irsloc::steering_weights(s, focus.x, focus.y);
  irsloc::SimulatedSource src(s);

  std::string csv = "t,antenna_index,re,im\n";
  for (int f = 0; f < c.trials; ++f) {
    src.set_frame(static_cast<std::uint64_t>(f));
    const irsloc::MeasurementPair pair = src.measure(p, w, static_cast<std::uint64_t>(f));
    const irsloc::Snapshot* snaps[2] = {&pair.prev, &pair.curr};
    for (int half = 0; half < 2; ++half)
      for (std::size_t n = 0; n < snaps[half]->values.size(); ++n)
        csv += std::to_string(2 * f + half) + "," + std::to_string(n) + "," +
               fmt(snaps[half]->values[n].real()) + "," + fmt(snaps[half]->values[n].imag()) + "\n";
  }
  const std::string path = out_path(c, "snapshots.csv");
  write_text(path, csv);
  std::cout << "wrote " << path << " (" << c.trials << " frame pairs)\n";
  return 0;
}

int cmd_locate(const Common& c) {
  const irsloc::Scenario s = resolve_scenario(c);
  irsloc::SimulatedSource src(s);
  const irsloc::LocateResult r = irsloc::locate_single(src, s, 0, c.threads);
  for (std::size_t i = 0; i < r.heatmaps.size(); ++i)
    irsloc::save_heatmap_csv(r.heatmaps[i], out_path(c, "heatmap_level" + std::to_string(i + 1) + ".csv"));
  if (c.format == "json") {
    nlohmann::json j{{"x", r.x}, {"y", r.y}, {"amplitude", r.amplitude}};
    write_text(out_path(c, "estimate.json"), j.dump(2) + "\n");
  } else {
    write_text(out_path(c, "estimate.csv"),
               "x,y,amplitude\n" + fmt(r.x) + "," + fmt(r.y) + "," + fmt(r.amplitude) + "\n");
  }
  std::cout << "estimate " << fmt(r.x) << " " << fmt(r.y) << " amplitude " << fmt(r.amplitude)
            << "\n";
  return 0;
}

int cmd_locate_multi(const Common& c, double phi_max, double mask, int max_persons) {
  const irsloc::Scenario s = resolve_scenario(c);
  const int floor_trials = std::max(30, c.trials);
  const double floor = irsloc::noise_floor_estimate(s, floor_trials, true, c.threads);

  irsloc::SimulatedSource src(s);
  irsloc::MultiParams mp;
  mp.phi_max = phi_max;
  mp.mask_side = mask;
  mp.noise_floor = floor;
  mp.max_persons = max_persons;
  mp.threads = c.threads;
  const irsloc::MultiResult res = irsloc::locate_multi(src, s, mp);

  for (std::size_t i = 0; i < res.coarse_heatmaps.size(); ++i)
    irsloc::save_heatmap_csv(res.coarse_heatmaps[i],
                             out_path(c, "coarse_iter" + std::to_string(i + 1) + ".csv"));
  if (c.format == "json") {
    write_text(out_path(c, "detections.json"), irsloc::detections_to_json(res.set).dump(2) + "\n");
  } else {
    std::string csv = "x,y,amplitude,iteration\n";
    for (const irsloc::Detection& d : res.set.detections)
      csv += fmt(d.x) + "," + fmt(d.y) + "," + fmt(d.amplitude) + "," +
             std::to_string(d.iteration) + "\n";
    write_text(out_path(c, "detections.csv"), csv);
  }
  std::cout << "detections " << res.set.detections.size() << " stop "
            << irsloc::stop_reason_name(res.set.stop_reason) << " noise_floor " << fmt(floor)
            << "\n";
  return 0;
}

int cmd_track(const Common& c, const std::string& pipeline, const std::string& mode) {
  const irsloc::Scenario s = resolve_scenario(c);
  if (s.persons.empty() || s.persons.front().waypoints.size() < 2)
    throw std::runtime_error("track: scenario needs a first person with >= 2 waypoints");
  irsloc::TrackOptions opt;
  opt.pipeline = pipeline == "multi" ? irsloc::Pipeline::multi : irsloc::Pipeline::single;
  opt.mode = mode == "step" ? irsloc::FramePairMode::step : irsloc::FramePairMode::appear;
  opt.threads = c.threads;
  if (opt.pipeline == irsloc::Pipeline::multi)
    opt.noise_floor = irsloc::noise_floor_estimate(s, std::max(30, c.trials), true, c.threads);
  const irsloc::TrackResult r = irsloc::track(s, s.persons.front(), opt);
  const std::string path = out_path(c, "track.csv");
  irsloc::save_track_csv(r, path);
  std::cout << "wrote " << path << " (" << r.frames.size() << " rows)\n";
  return 0;
}

int cmd_beampattern(const Common& c, std::vector<double> focus, std::vector<double> interference,
                    double phi_max, double cell) {
  const irsloc::Scenario s = resolve_scenario(c);
  const irsloc::PatternComparison cmp = irsloc::compare_patterns(
      s, {focus[0], focus[1], 0.0}, {interference[0], interference[1], 0.0}, phi_max, cell);
  irsloc::save_beam_pattern_csv(cmp.no_cancellation, out_path(c, "beampattern_no_cancel.csv"));
  irsloc::save_beam_pattern_csv(cmp.proposed, out_path(c, "beampattern_proposed.csv"));
  nlohmann::json j{{"suppression_db", cmp.suppression_db},
                   {"focus_delta_db", cmp.focus_delta_db},
                   {"interference_before", cmp.interference_before},
                   {"interference_after", cmp.interference_after},
                   {"focus_before", cmp.focus_before},
                   {"focus_after", cmp.focus_after}};
  write_text(out_path(c, "comparison.json"), j.dump(2) + "\n");
  std::cout << "suppression_db " << fmt(cmp.suppression_db) << " focus_delta_db "
            << fmt(cmp.focus_delta_db) << "\n";
  return 0;
}

int cmd_bench(const Common& c, const std::string& sweep, const std::string& baseline,
              std::vector<double> values) {
  irsloc::ExperimentSpec spec;
  spec.scenario = resolve_scenario(c);
  spec.rng_seed = spec.scenario.rng_seed;
  spec.trials = c.trials;
  spec.threads = c.threads;
  if (sweep == "power") {
    spec.axis = irsloc::SweepAxis::power_dbm;
    if (values.empty()) values = {-10, -5, 0, 5, 10, 15, 20};
  } else if (sweep == "elements") {
    spec.axis = irsloc::SweepAxis::elements;
    if (values.empty()) values = {7, 9, 11};
  } else {
    spec.axis = irsloc::SweepAxis::states;
    if (values.empty()) values = {2, 4, 8};
  }
  spec.values = values;

  std::vector<irsloc::Baseline> list;
  if (baseline == "all") {
    list = {irsloc::Baseline::proposed, irsloc::Baseline::without_irs, irsloc::Baseline::random_irs,
            irsloc::Baseline::one_rx_antenna, irsloc::Baseline::no_cancellation};
  } else {
    const std::vector<std::pair<std::string, irsloc::Baseline>> names = {
        {"proposed", irsloc::Baseline::proposed},
        {"without_irs", irsloc::Baseline::without_irs},
        {"random_irs", irsloc::Baseline::random_irs},
        {"one_rx_antenna", irsloc::Baseline::one_rx_antenna},
        {"no_cancellation", irsloc::Baseline::no_cancellation}};
    for (const auto& [name, b] : names)
      if (name == baseline) list.push_back(b);
    if (list.empty()) throw std::runtime_error("unknown baseline: " + baseline);
  }

  for (irsloc::Baseline b : list) {
    spec.baseline = b;
    const irsloc::RmseReport report = irsloc::run_experiment(spec);
    const std::string name = irsloc::baseline_name(b);
    irsloc::save_rmse_csv(report, out_path(c, "rmse_" + name + ".csv"));
    irsloc::save_trials_csv(report, out_path(c, "trials_" + name + ".csv"));
    std::cout << name;
    for (const irsloc::SweepPoint& p : report.points) std::cout << " " << fmt(p.mean_error_m);
    std::cout << "\n";
  }
  return 0;
}

int cmd_codebook(const Common& c, double cell) {
  const irsloc::Scenario s = resolve_scenario(c);
  const irsloc::Grid grid = irsloc::room_grid(s, cell, 1);
  const irsloc::Codebook cb = irsloc::build_codebook(s, grid);
  const std::string path = out_path(c, "codebook.txt");
  irsloc::save_codebook(cb, path);
  std::cout << "wrote " << path << " (" << cb.entries.size() << " entries)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"irsloc: IRS-assisted passive indoor localization toolkit"};
  app.require_subcommand(1);

  Common c;
  app.add_option("--scenario", c.scenario_path, "Scenario JSON file (omit for built-in default)");
  app.add_option("--out", c.out_dir, "Output directory (created if missing)");
  auto* seed_opt = app.add_option("--seed", c.seed, "Override the scenario RNG seed");
  app.add_option("--threads", c.threads, "Worker threads (0 = IRSLOC_THREADS env or hardware)");
  app.add_option("--trials", c.trials, "Trial/frame count where applicable");
  app.add_option("--format", c.format, "Estimate/detection file format")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* sim = app.add_subcommand("simulate", "Dump raw snapshot frame pairs to CSV");
  sim->fallthrough();
  auto* loc = app.add_subcommand("locate", "Single-person localization (heatmaps + estimate)");
  loc->fallthrough();

  double phi_max = irsloc::kPi / 6.0, mask = 0.5;
  int max_persons = 10;
  auto* locm = app.add_subcommand("locate-multi", "Iterative multi-person localization");
  locm->fallthrough();
  locm->add_option("--phi-max", phi_max, "Perturbation bound in radians");
  locm->add_option("--mask", mask, "Detection mask side in meters");
  locm->add_option("--max-persons", max_persons, "Detection cap");

  std::string pipeline = "single", mode = "appear";
  auto* trk = app.add_subcommand("track", "Per-frame localization along the first trajectory");
  trk->fallthrough();
  trk->add_option("--pipeline", pipeline, "single|multi")->check(CLI::IsMember({"single", "multi"}));
  trk->add_option("--mode", mode, "appear|step frame pairing")
      ->check(CLI::IsMember({"appear", "step"}));

  std::vector<double> focus = {3.0, 3.0}, interference = {2.22, 3.0};
  double bp_cell = 0.02;
  auto* bp = app.add_subcommand("beampattern", "Focus/interference beam-pattern comparison");
  bp->fallthrough();
  bp->add_option("--focus", focus, "Focus point x y")->expected(2);
  bp->add_option("--interference", interference, "Interference point x y")->expected(2);
  bp->add_option("--phi-max", phi_max, "Perturbation bound in radians");
  bp->add_option("--cell", bp_cell, "Map cell size in meters");

  std::string sweep = "power", baseline = "proposed";
  std::vector<double> values;
  auto* bench = app.add_subcommand("bench", "Monte Carlo error sweeps");
  bench->fallthrough();
  bench->add_option("--sweep", sweep, "power|elements|states")
      ->check(CLI::IsMember({"power", "elements", "states"}));
  bench->add_option("--baseline", baseline,
                    "proposed|without_irs|random_irs|one_rx_antenna|no_cancellation|all");
  bench->add_option("--values", values, "Sweep values (override defaults)");

  double cb_cell = 0.5;
  auto* cb = app.add_subcommand("codebook", "Build and save the per-cell pattern table");
  cb->fallthrough();
  cb->add_option("--cell", cb_cell, "Grid cell size in meters");

  if (argc <= 1) {
    std::cout << app.help();
    return 2;
  }
  CLI11_PARSE(app, argc, argv);
  c.seed_set = seed_opt->count() > 0;

  try {
    if (sim->parsed()) return cmd_simulate(c);
    if (loc->parsed()) return cmd_locate(c);
    if (locm->parsed()) return cmd_locate_multi(c, phi_max, mask, max_persons);
    if (trk->parsed()) return cmd_track(c, pipeline, mode);
    if (bp->parsed()) return cmd_beampattern(c, focus, interference, phi_max, bp_cell);
    if (bench->parsed()) return cmd_bench(c, sweep, baseline, values);
    if (cb->parsed()) return cmd_codebook(c, cb_cell);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
