#pragma once
// Scenario (de)serialization. JSON layout:
//   room [dx,dy,dz], tx [x,y,z], rx_antennas [[...],...],
//   irs {center, rows, cols, spacing_m, bits, row_axis?, col_axis?},
//   static_reflectors [[...],...],
//   persons [{waypoints: [{t, pos}], inter_frame_step_m} | {position: [...]}],
//   frequency_hz, tx_power_dbm, noise_power_dbm,
//   path_loss {rho0_db, alpha_to, alpha_ti, alpha_io, alpha_or}, rng_seed.
// Omitted optional fields take the documented defaults (see README); the shorthand
// persons entry {"position": [x,y,z]} loads as a single waypoint at t = 0.
// Files are validated on load; save_scenario emits the canonical long form, so
// load -> save -> load is the identity on the validated field set.

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "irsloc/scene.hpp"

namespace irsloc {

namespace detail {

inline Vec3 vec3_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) fail_field(field, "expected [x, y, z]");
  return Vec3{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json vec3_to_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::vec3_from_json;
  Scenario s;

  if (!j.contains("room")) detail::fail_field("room", "missing");
  s.room = vec3_from_json(j.at("room"), "room");
  if (!j.contains("tx")) detail::fail_field("tx", "missing");
  s.tx = vec3_from_json(j.at("tx"), "tx");

  if (!j.contains("rx_antennas")) detail::fail_field("rx_antennas", "missing");
  s.rx_antennas.clear();
  for (const auto& a : j.at("rx_antennas"))
    s.rx_antennas.push_back(vec3_from_json(a, "rx_antennas"));

  if (!j.contains("irs")) detail::fail_field("irs", "missing");
  const auto& ji = j.at("irs");
  if (!ji.contains("center")) detail::fail_field("irs.center", "missing");
  s.irs.center = vec3_from_json(ji.at("center"), "irs.center");
  s.irs.rows = ji.value("rows", 1);
  s.irs.cols = ji.value("cols", 1);
  s.irs.spacing_m = ji.value("spacing_m", 0.062);
  s.irs.bits = ji.value("bits", 2);
  if (ji.contains("row_axis")) s.irs.row_axis = vec3_from_json(ji.at("row_axis"), "irs.row_axis");
  if (ji.contains("col_axis")) s.irs.col_axis = vec3_from_json(ji.at("col_axis"), "irs.col_axis");

  s.static_reflectors.clear();
  for (const auto& r : j.value("static_reflectors", nlohmann::json::array()))
    s.static_reflectors.push_back(vec3_from_json(r, "static_reflectors"));

  s.persons.clear();
  for (const auto& p : j.value("persons", nlohmann::json::array())) {
    Trajectory tr;
    tr.inter_frame_step_m = p.value("inter_frame_step_m", 0.1);
    if (p.contains("position")) {
      tr.waypoints.push_back({0.0, vec3_from_json(p.at("position"), "persons.position")});
    } else {
      if (!p.contains("waypoints")) detail::fail_field("persons.waypoints", "missing");
      for (const auto& w : p.at("waypoints")) {
        if (!w.contains("t") || !w.contains("pos")) detail::fail_field("persons.waypoints", "expected {t, pos}");
        tr.waypoints.push_back({w.at("t").get<double>(), vec3_from_json(w.at("pos"), "persons.waypoints.pos")});
      }
    }
    s.persons.push_back(std::move(tr));
  }

  s.frequency_hz = j.value("frequency_hz", 2.4e9);
  s.tx_power_dbm = j.value("tx_power_dbm", 15.0);
  s.noise_power_dbm = j.value("noise_power_dbm", -80.0);

  if (j.contains("path_loss")) {
    const auto& jp = j.at("path_loss");
    s.path_loss.rho0_db = jp.value("rho0_db", -20.0);
    s.path_loss.alpha_to = jp.value("alpha_to", 3.6);
    s.path_loss.alpha_ti = jp.value("alpha_ti", 2.2);
    s.path_loss.alpha_io = jp.value("alpha_io", 2.2);
    s.path_loss.alpha_or = jp.value("alpha_or", 3.6);
  }
  s.rng_seed = j.value("rng_seed", std::uint64_t{0});

  validate(s);
  return s;
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
  using detail::vec3_to_json;
  nlohmann::json j;
  j["room"] = vec3_to_json(s.room);
  j["tx"] = vec3_to_json(s.tx);
  j["rx_antennas"] = nlohmann::json::array();
  for (const Vec3& a : s.rx_antennas) j["rx_antennas"].push_back(vec3_to_json(a));
  j["irs"] = {{"center", vec3_to_json(s.irs.center)}, {"rows", s.irs.rows},
              {"cols", s.irs.cols},                   {"spacing_m", s.irs.spacing_m},
              {"bits", s.irs.bits},                   {"row_axis", vec3_to_json(s.irs.row_axis)},
              {"col_axis", vec3_to_json(s.irs.col_axis)}};
  j["static_reflectors"] = nlohmann::json::array();
  for (const Vec3& r : s.static_reflectors) j["static_reflectors"].push_back(vec3_to_json(r));
  j["persons"] = nlohmann::json::array();
  for (const Trajectory& tr : s.persons) {
    nlohmann::json jt;
    jt["inter_frame_step_m"] = tr.inter_frame_step_m;
    jt["waypoints"] = nlohmann::json::array();
    for (const Waypoint& w : tr.waypoints)
      jt["waypoints"].push_back({{"t", w.t}, {"pos", vec3_to_json(w.pos)}});
    j["persons"].push_back(std::move(jt));
  }
  j["frequency_hz"] = s.frequency_hz;
  j["tx_power_dbm"] = s.tx_power_dbm;
  j["noise_power_dbm"] = s.noise_power_dbm;
  j["path_loss"] = {{"rho0_db", s.path_loss.rho0_db}, {"alpha_to", s.path_loss.alpha_to},
                    {"alpha_ti", s.path_loss.alpha_ti}, {"alpha_io", s.path_loss.alpha_io},
                    {"alpha_or", s.path_loss.alpha_or}};
  j["rng_seed"] = s.rng_seed;
  return j;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("scenario parse failure in " + path + ": " + e.what());
  }
  return scenario_from_json(j);
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file: " + path);
  out << scenario_to_json(s).dump(2) << '\n';
}

}  // namespace irsloc
