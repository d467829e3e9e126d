#pragma once
// Geometry and configuration types consumed by every other component.
// Units: meters, seconds, Hz, dBm. All types are immutable value types;
// validate() is the single gate that enforces scene invariants.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace irsloc {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
  friend bool operator==(const Vec3& a, const Vec3& b) { return a.x == b.x && a.y == b.y && a.z == b.z; }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

// Euclidean distance; symmetric, non-negative, satisfies the triangle inequality.
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

// Uniform rectangular array of passive phase-shifting elements.
// Element (r, c) maps to linear index m = r*cols + c; offsets are centered on `center`.
struct IrsGeometry {
  Vec3 center;
  int rows = 1;
  int cols = 1;
  double spacing_m = 0.062;
  int bits = 2;                 // B: each element has 2^B discrete phase states
  Vec3 row_axis{1.0, 0.0, 0.0}; // lattice direction for the row index
  Vec3 col_axis{0.0, 1.0, 0.0};

  int element_count() const { return rows * cols; }
};

// Lattice positions, row-major, length rows*cols.
inline std::vector<Vec3> irs_element_positions(const IrsGeometry& g) {
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(g.rows) * static_cast<std::size_t>(g.cols));
  const double r0 = 0.5 * (g.rows - 1);
  const double c0 = 0.5 * (g.cols - 1);
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const Vec3 off = ((r - r0) * g.spacing_m) * g.row_axis + ((c - c0) * g.spacing_m) * g.col_axis;
      out.push_back(g.center + off);
    }
  }
  return out;
}

// Amplitude path-loss model parameters: rho(d) = 10^(rho0_db/20) * d^(-alpha/2).
struct PathLossParams {
  double rho0_db = -20.0;  // power loss at the 1 m reference distance
  double alpha_to = 3.6;   // Tx -> person/reflector
  double alpha_ti = 2.2;   // Tx -> IRS element
  double alpha_io = 2.2;   // IRS element -> person/reflector
  double alpha_or = 3.6;   // person/reflector -> Rx antenna
};

struct Waypoint {
  double t = 0.0;  // seconds, strictly increasing along a trajectory
  Vec3 pos;        // z must be 0: persons move in the X-Y plane
};

struct Trajectory {
  std::vector<Waypoint> waypoints;
  double inter_frame_step_m = 0.1;  // displacement between the two frames of a measurement pair
};

struct Scenario {
  Vec3 room{6.0, 6.0, 3.5};  // axis-aligned box [0,dx]x[0,dy]x[0,dz]
  Vec3 tx{3.0, 3.0, 3.0};
  std::vector<Vec3> rx_antennas;
  IrsGeometry irs;
  std::vector<Vec3> static_reflectors;
  std::vector<Trajectory> persons;
  double frequency_hz = 2.4e9;
  double tx_power_dbm = 15.0;
  double noise_power_dbm = -80.0;
  PathLossParams path_loss;
  std::uint64_t rng_seed = 0;

  double wavelength() const { return kSpeedOfLight / frequency_hz; }
  double tx_power_watts() const { return std::pow(10.0, (tx_power_dbm - 30.0) / 10.0); }
  double noise_power_watts() const { return std::pow(10.0, (noise_power_dbm - 30.0) / 10.0); }
};

namespace detail {

inline bool inside_room(const Vec3& p, const Vec3& room, double eps = 1e-9) {
  return p.x >= -eps && p.x <= room.x + eps && p.y >= -eps && p.y <= room.y + eps &&
         p.z >= -eps && p.z <= room.z + eps;
}

[[noreturn]] inline void fail_field(const std::string& field, const std::string& why) {
  throw std::invalid_argument("scenario field '" + field + "': " + why);
}

inline void check_inside(const Vec3& p, const Vec3& room, const std::string& field) {
  if (!inside_room(p, room)) fail_field(field, "position outside room");
}

}  // namespace detail

// Throws std::invalid_argument naming the offending field.
inline void validate(const Scenario& s) {
  using detail::check_inside;
  using detail::fail_field;

  if (!(s.room.x > 0.0) || !(s.room.y > 0.0) || !(s.room.z > 0.0))
    fail_field("room", "dimensions must be positive");
  if (!(s.frequency_hz > 0.0)) fail_field("frequency_hz", "must be positive");
  if (s.rx_antennas.empty()) fail_field("rx_antennas", "at least one antenna required");

  check_inside(s.tx, s.room, "tx");
  for (std::size_t n = 0; n < s.rx_antennas.size(); ++n)
    check_inside(s.rx_antennas[n], s.room, "rx_antennas[" + std::to_string(n) + "]");

  if (s.irs.rows < 1 || s.irs.cols < 1) fail_field("irs", "rows and cols must be >= 1");
  if (!(s.irs.spacing_m > 0.0)) fail_field("irs.spacing_m", "must be positive");
  if (s.irs.bits < 1) fail_field("irs.bits", "must be >= 1");
  if (std::abs(norm(s.irs.row_axis) - 1.0) > 1e-9 || std::abs(norm(s.irs.col_axis) - 1.0) > 1e-9)
    fail_field("irs", "row_axis and col_axis must be unit vectors");
  if (std::abs(dot(s.irs.row_axis, s.irs.col_axis)) > 1e-9)
    fail_field("irs", "row_axis and col_axis must be orthogonal");
  for (const Vec3& e : irs_element_positions(s.irs))
    check_inside(e, s.room, "irs");

  for (std::size_t i = 0; i < s.static_reflectors.size(); ++i)
    check_inside(s.static_reflectors[i], s.room, "static_reflectors[" + std::to_string(i) + "]");

  for (std::size_t i = 0; i < s.persons.size(); ++i) {
    const Trajectory& tr = s.persons[i];
    const std::string field = "persons[" + std::to_string(i) + "]";
    if (tr.waypoints.empty()) fail_field(field, "needs at least one waypoint");
    if (!(tr.inter_frame_step_m > 0.0)) fail_field(field + ".inter_frame_step_m", "must be positive");
    for (std::size_t k = 0; k < tr.waypoints.size(); ++k) {
      const Waypoint& w = tr.waypoints[k];
      check_inside(w.pos, s.room, field + ".waypoints[" + std::to_string(k) + "]");
      if (std::abs(w.pos.z) > 1e-9)
        fail_field(field + ".waypoints[" + std::to_string(k) + "]", "persons move at z = 0");
      if (k > 0 && !(w.t > tr.waypoints[k - 1].t))
        fail_field(field + ".waypoints", "times must be strictly increasing");
    }
  }

  const PathLossParams& pl = s.path_loss;
  if (pl.alpha_to < 0.0 || pl.alpha_ti < 0.0 || pl.alpha_io < 0.0 || pl.alpha_or < 0.0)
    fail_field("path_loss", "exponents must be >= 0");
}

// Canonical single-person test scene: 6x6x3.5 m room, Tx under the ceiling-center IRS,
// three-antenna Rx array along -x from the (6,0,0) corner, two static reflectors,
// one person at (3.5, 3.5, 0).
inline Scenario default_scenario() {
  Scenario s;
  s.rx_antennas = {{6.0, 0.0, 0.0}, {6.0 - 0.062, 0.0, 0.0}, {6.0 - 2 * 0.062, 0.0, 0.0}};
  s.irs.center = {3.0, 3.0, 3.5};
  s.irs.rows = 9;
  s.irs.cols = 9;
  s.irs.spacing_m = 0.062;
  s.irs.bits = 2;
  s.static_reflectors = {{2.0, 2.0, 0.0}, {3.0, 5.5, 0.0}};
  s.persons.push_back(Trajectory{{{0.0, {3.5, 3.5, 0.0}}}, 0.1});
  s.rng_seed = 1;
  return s;
}

}  // namespace irsloc
