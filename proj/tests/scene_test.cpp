#include "irsloc/scene.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "irsloc/scenario_io.hpp"

namespace irsloc {
namespace {

TEST(Distance, IdenticalPointsAreZero) {
  EXPECT_EQ(distance({0, 0, 0}, {0, 0, 0}), 0.0);
  EXPECT_EQ(distance({1.5, -2.0, 3.25}, {1.5, -2.0, 3.25}), 0.0);
}

TEST(Distance, HandEvaluatedValues) {
  EXPECT_DOUBLE_EQ(distance({3, 3, 3}, {3, 3, 3.5}), 0.5);
  EXPECT_DOUBLE_EQ(distance({0, 0, 0}, {3, 4, 0}), 5.0);
  EXPECT_DOUBLE_EQ(distance({1, 2, 3}, {2, 4, 6}), std::sqrt(14.0));
  EXPECT_DOUBLE_EQ(distance({6, 0, 0}, {3.5, 3.5, 0}), std::sqrt(2.5 * 2.5 + 3.5 * 3.5));
}

TEST(Distance, SymmetricAndTriangleInequality) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)}, c{u(rng), u(rng), u(rng)};
    EXPECT_DOUBLE_EQ(distance(a, b), distance(b, a));
    EXPECT_LE(distance(a, c), distance(a, b) + distance(b, c) + 1e-12);
    EXPECT_GE(distance(a, b), 0.0);
  }
}

TEST(IrsElements, SingleElementIsCenter) {
  IrsGeometry g;
  g.center = {1.0, 2.0, 3.0};
  g.rows = g.cols = 1;
  const auto pts = irs_element_positions(g);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0], g.center);
}

TEST(IrsElements, NineByNineCorners) {
  IrsGeometry g;
  g.center = {3.0, 3.0, 3.5};
  g.rows = g.cols = 9;
  g.spacing_m = 0.062;
  const auto pts = irs_element_positions(g);
  ASSERT_EQ(pts.size(), 81u);
  const double off = 4 * 0.062;  // (9-1)/2 lattice steps
  // row-major: first element is (-off, -off), last is (+off, +off)
  EXPECT_NEAR(pts.front().x, 3.0 - off, 1e-12);
  EXPECT_NEAR(pts.front().y, 3.0 - off, 1e-12);
  EXPECT_NEAR(pts.back().x, 3.0 + off, 1e-12);
  EXPECT_NEAR(pts.back().y, 3.0 + off, 1e-12);
  for (const Vec3& p : pts) EXPECT_DOUBLE_EQ(p.z, 3.5);
}

TEST(IrsElements, TwoByTwoUnitSpacing) {
  IrsGeometry g;
  g.center = {0, 0, 0};
  g.rows = g.cols = 2;
  g.spacing_m = 1.0;
  const auto pts = irs_element_positions(g);
  ASSERT_EQ(pts.size(), 4u);
  for (const Vec3& p : pts) {
    EXPECT_DOUBLE_EQ(std::abs(p.x), 0.5);
    EXPECT_DOUBLE_EQ(std::abs(p.y), 0.5);
    EXPECT_DOUBLE_EQ(p.z, 0.0);
  }
}

TEST(IrsElements, NearestNeighbourSpacingMatches) {
  IrsGeometry g;
  g.center = {3, 3, 3.5};
  g.rows = 5;
  g.cols = 7;
  g.spacing_m = 0.062;
  const auto pts = irs_element_positions(g);
  ASSERT_EQ(pts.size(), 35u);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double nearest = 1e9;
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != i) nearest = std::min(nearest, distance(pts[i], pts[j]));
    EXPECT_NEAR(nearest, g.spacing_m, 1e-12);
  }
}

TEST(Scenario, DerivedQuantities) {
  const Scenario s = default_scenario();
  EXPECT_DOUBLE_EQ(s.wavelength(), 299792458.0 / 2.4e9);  // 0.1249135...
  EXPECT_NEAR(s.wavelength(), 0.12491352416666667, 1e-15);
  EXPECT_DOUBLE_EQ(s.tx_power_watts(), std::pow(10.0, -1.5));  // 15 dBm
  EXPECT_DOUBLE_EQ(s.noise_power_watts(), 1e-11);              // -80 dBm
}

TEST(Scenario, DefaultSceneIsValidAndMatchesLayout) {
  const Scenario s = default_scenario();
  EXPECT_NO_THROW(validate(s));
  EXPECT_EQ(s.irs.element_count(), 81);
  EXPECT_EQ(s.rx_antennas.size(), 3u);
  EXPECT_NEAR(distance(s.rx_antennas[0], s.rx_antennas[1]), 0.062, 1e-12);
  EXPECT_NEAR(distance(s.rx_antennas[1], s.rx_antennas[2]), 0.062, 1e-12);
  ASSERT_EQ(s.persons.size(), 1u);
  EXPECT_EQ(s.persons[0].waypoints[0].pos, (Vec3{3.5, 3.5, 0.0}));
}

TEST(Validate, RejectsBadScenes) {
  Scenario s = default_scenario();
  s.tx = {7.0, 3.0, 3.0};
  EXPECT_THROW(validate(s), std::invalid_argument);

  s = default_scenario();
  s.rx_antennas.clear();
  EXPECT_THROW(validate(s), std::invalid_argument);

  s = default_scenario();
  s.persons[0].waypoints[0].pos = {3.5, 3.5, 1.0};  // persons live at z = 0
  EXPECT_THROW(validate(s), std::invalid_argument);

  s = default_scenario();
  s.persons[0].waypoints = {{0.0, {1, 1, 0}}, {0.0, {2, 2, 0}}};  // times not increasing
  EXPECT_THROW(validate(s), std::invalid_argument);

  s = default_scenario();
  s.irs.bits = 0;
  EXPECT_THROW(validate(s), std::invalid_argument);

  s = default_scenario();
  s.irs.row_axis = {1, 1, 0};  // not unit length
  EXPECT_THROW(validate(s), std::invalid_argument);

  s = default_scenario();
  s.frequency_hz = 0.0;
  EXPECT_THROW(validate(s), std::invalid_argument);
}

TEST(Validate, ErrorNamesTheField) {
  Scenario s = default_scenario();
  s.static_reflectors.push_back({9.0, 0.0, 0.0});
  try {
    validate(s);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("static_reflectors[2]"), std::string::npos) << e.what();
  }
}

class ScenarioIoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "irsloc_scene_test";
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(ScenarioIoTest, SaveLoadRoundTripIsIdentity) {
  Scenario s = default_scenario();
  s.tx_power_dbm = 7.25;
  s.rng_seed = 123456789017ull;
  s.persons.push_back(Trajectory{{{0.0, {1, 1, 0}}, {2.0, {2, 1, 0}}}, 0.05});
  const auto path = (dir_ / "round.json").string();
  save_scenario(s, path);
  const Scenario r = load_scenario(path);

  EXPECT_EQ(r.room, s.room);
  EXPECT_EQ(r.tx, s.tx);
  ASSERT_EQ(r.rx_antennas.size(), s.rx_antennas.size());
  for (std::size_t i = 0; i < s.rx_antennas.size(); ++i)
    EXPECT_EQ(r.rx_antennas[i], s.rx_antennas[i]);
  EXPECT_EQ(r.irs.center, s.irs.center);
  EXPECT_EQ(r.irs.rows, s.irs.rows);
  EXPECT_EQ(r.irs.cols, s.irs.cols);
  EXPECT_DOUBLE_EQ(r.irs.spacing_m, s.irs.spacing_m);
  EXPECT_EQ(r.irs.bits, s.irs.bits);
  ASSERT_EQ(r.persons.size(), s.persons.size());
  for (std::size_t i = 0; i < s.persons.size(); ++i) {
    ASSERT_EQ(r.persons[i].waypoints.size(), s.persons[i].waypoints.size());
    EXPECT_DOUBLE_EQ(r.persons[i].inter_frame_step_m, s.persons[i].inter_frame_step_m);
    for (std::size_t k = 0; k < s.persons[i].waypoints.size(); ++k) {
      EXPECT_DOUBLE_EQ(r.persons[i].waypoints[k].t, s.persons[i].waypoints[k].t);
      EXPECT_EQ(r.persons[i].waypoints[k].pos, s.persons[i].waypoints[k].pos);
    }
  }
  EXPECT_DOUBLE_EQ(r.frequency_hz, s.frequency_hz);
  EXPECT_DOUBLE_EQ(r.tx_power_dbm, s.tx_power_dbm);
  EXPECT_DOUBLE_EQ(r.noise_power_dbm, s.noise_power_dbm);
  EXPECT_DOUBLE_EQ(r.path_loss.rho0_db, s.path_loss.rho0_db);
  EXPECT_EQ(r.rng_seed, s.rng_seed);

  // a second round trip produces byte-identical files
  const auto path2 = (dir_ / "round2.json").string();
  save_scenario(r, path2);
  std::ifstream f1(path), f2(path2);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  EXPECT_EQ(b1, b2);
}

TEST_F(ScenarioIoTest, DefaultsAndShorthand) {
  const auto path = (dir_ / "short.json").string();
  {
    std::ofstream out(path);
    out << R"({
      "room": [6, 6, 3.5],
      "tx": [3, 3, 3],
      "rx_antennas": [[6, 0, 0]],
      "irs": {"center": [3, 3, 3.5], "rows": 9, "cols": 9},
      "persons": [{"position": [3.5, 3.5, 0]}]
    })";
  }
  const Scenario s = load_scenario(path);
  EXPECT_DOUBLE_EQ(s.frequency_hz, 2.4e9);
  EXPECT_DOUBLE_EQ(s.noise_power_dbm, -80.0);
  EXPECT_EQ(s.rng_seed, 0u);  // omitted seed defaults to zero
  EXPECT_EQ(s.irs.bits, 2);
  EXPECT_DOUBLE_EQ(s.irs.spacing_m, 0.062);
  ASSERT_EQ(s.persons.size(), 1u);
  ASSERT_EQ(s.persons[0].waypoints.size(), 1u);
  EXPECT_EQ(s.persons[0].waypoints[0].pos, (Vec3{3.5, 3.5, 0.0}));
  EXPECT_DOUBLE_EQ(s.persons[0].inter_frame_step_m, 0.1);
}

TEST_F(ScenarioIoTest, RejectsInvalidFiles) {
  const auto missing = (dir_ / "missing.json").string();
  {
    std::ofstream out(missing);
    out << R"({"tx": [3, 3, 3]})";  // no room, no rx_antennas
  }
  EXPECT_THROW(load_scenario(missing), std::invalid_argument);

  const auto outside = (dir_ / "outside.json").string();
  {
    std::ofstream out(outside);
    out << R"({
      "room": [6, 6, 3.5], "tx": [3, 3, 3], "rx_antennas": [[6, 0, 0]],
      "irs": {"center": [3, 3, 3.5]},
      "persons": [{"position": [7.5, 3.5, 0]}]
    })";
  }
  EXPECT_THROW(load_scenario(outside), std::invalid_argument);

  const auto garbled = (dir_ / "garbled.json").string();
  {
    std::ofstream out(garbled);
    out << "{not json";
  }
  EXPECT_THROW(load_scenario(garbled), std::runtime_error);

  EXPECT_THROW(load_scenario((dir_ / "absent.json").string()), std::runtime_error);
}

}  // namespace
}  // namespace irsloc
