#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "socta/dataset.hpp"
#include "socta/error.hpp"

using namespace socta;

namespace {

EcmParams quiet_params() {
  auto p = EcmParams::panasonic_like();
  p.noise_std_A = 0.0;
  p.noise_std_V = 0.0;
  return p;
}

CurrentProfile constant_profile(double discharge_A, int seconds) {
  CurrentProfile p;
  for (int k = 0; k <= seconds; ++k) {
    p.time_s.push_back(k);
    p.current_A.push_back(-discharge_A);
  }
  return p;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("empty file has no data rows") {
  std::istringstream in("");
  CHECK_THROWS_WITH_AS(parse_csv(in), doctest::Contains("no data rows"), ValidationError);
  std::istringstream header_only("cycle_id,time_s,current_A,voltage_V,soc_pct,temperature_C\n");
  CHECK_THROWS_WITH_AS(parse_csv(header_only), doctest::Contains("no data rows"), ValidationError);
}

TEST_CASE("canonical file round-trips byte for byte") {
  const std::string text =
      "cycle_id,time_s,current_A,voltage_V,soc_pct,temperature_C\n"
      "a,0,-1.5,4.1,100,10\n"
      "a,1,-2.25,4.05,99.9,10\n"
      "a,2,0.125,4.07,99.85,10\n"
      "b,0,-3,4.11,100,10\n"
      "b,1,-3.5,4.02,99.7,10\n";
  const auto dir = std::filesystem::temp_directory_path() / "socta_csv_roundtrip";
  std::filesystem::create_directories(dir);
  const auto path = dir / "cycles.csv";
  {
    std::ofstream out(path);
    out << text;
  }
  const auto loaded = load_csv(path);
  CHECK(loaded.cycles.size() == 2);
  CHECK(loaded.warnings.empty());
  std::ostringstream out;
  write_csv(out, loaded.cycles);
  CHECK(out.str() == text);
}

TEST_CASE("one-hertz sampling loads without warnings, irregular sampling warns") {
  std::istringstream regular(
      "cycle_id,time_s,current_A,voltage_V,soc_pct,temperature_C\n"
      "a,0,-1,4,100,0\na,1,-1,4,99,0\na,2,-1,4,98,0\n");
  CHECK(parse_csv(regular).warnings.empty());
  std::istringstream irregular(
      "cycle_id,time_s,current_A,voltage_V,soc_pct,temperature_C\n"
      "a,0,-1,4,100,0\na,1,-1,4,99,0\na,2.5,-1,4,98,0\n");
  CHECK(parse_csv(irregular).warnings.size() == 1);
}

TEST_CASE("malformed input is rejected with the offending row") {
  std::istringstream missing("cycle_id,time_s,current_A,voltage_V,temperature_C\na,0,-1,4,0\n");
  CHECK_THROWS_WITH_AS(parse_csv(missing), doctest::Contains("soc_pct"), ValidationError);
  std::istringstream backwards(
      "cycle_id,time_s,current_A,voltage_V,soc_pct,temperature_C\na,0,-1,4,100,0\na,0,-1,4,99,0\n");
  CHECK_THROWS_AS(parse_csv(backwards), ValidationError);
  std::istringstream nan(
      "cycle_id,time_s,current_A,voltage_V,soc_pct,temperature_C\na,0,-1,4,100,0\na,1,nan,4,99,0\n");
  CHECK_THROWS_WITH_AS(parse_csv(nan), doctest::Contains("2"), ValidationError);
  CHECK_THROWS_AS(load_csv("/nonexistent/cycles.csv"), MissingArtifactError);
}

TEST_CASE("custom schema maps column names") {
  CsvSchema schema;
  schema.soc_pct = "SOC";
  schema.cycle_id = "id";
  std::istringstream in("id,time_s,current_A,voltage_V,SOC,temperature_C\nz,0,-1,4,100,0\nz,1,-1,4,99,0\n");
  const auto loaded = parse_csv(in, schema);
  REQUIRE(loaded.cycles.size() == 1);
  CHECK(loaded.cycles[0].soc_pct[1] == 99.0);
}

TEST_CASE("zero current keeps the cell full") {
  const auto p = quiet_params();
  const auto cycle = simulate_cycle(p, constant_profile(0.0, 100), 25.0, 1);
  CHECK(cycle.size() == 101);
  for (std::size_t k = 0; k < cycle.size(); ++k) {
    CHECK(cycle.soc_pct[k] == 100.0);
    CHECK(cycle.voltage_V[k] == doctest::Approx(p.ocv(100.0, 25.0)).epsilon(1e-12));
  }
}

TEST_CASE("constant one-C discharge empties the cell after an hour") {
  auto p = quiet_params();
  p.capacity_temp_factor = TemperatureTable({{25.0, 1.0}});
  const auto cycle = simulate_cycle(p, constant_profile(2.9, 4000), 25.0, 1);
  CHECK(cycle.time_s.back() == doctest::Approx(3600.0));
  CHECK(cycle.soc_pct.back() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(cycle.soc_pct[1800] == doctest::Approx(50.0).epsilon(1e-9));
}

TEST_CASE("derated capacity delivers proportionally less charge") {
  auto full = quiet_params();
  full.capacity_temp_factor = TemperatureTable({{25.0, 1.0}});
  auto derated = full;
  derated.capacity_temp_factor = TemperatureTable({{25.0, 0.7}});
  const auto profile = constant_profile(2.9, 4000);
  const auto a = simulate_cycle(full, profile, 25.0, 1);
  const auto b = simulate_cycle(derated, profile, 25.0, 1);
  CHECK(b.size() < a.size());
  const double charge_a = 2.9 * a.time_s.back() / 3600.0;
  const double charge_b = 2.9 * b.time_s.back() / 3600.0;
  CHECK(charge_b == doctest::Approx(0.7 * charge_a).epsilon(1e-3));
}

TEST_CASE("simulation is deterministic and voltage sags under load") {
  const auto p = EcmParams::panasonic_like();
  const auto profile = make_drive_profile({}, 5);
  const auto a = simulate_cycle(p, profile, 10.0, 9);
  const auto b = simulate_cycle(p, profile, 10.0, 9);
  CHECK(a.voltage_V == b.voltage_V);
  CHECK(a.current_A == b.current_A);

  const auto q = quiet_params();
  const auto c = simulate_cycle(q, constant_profile(3.0, 600), 10.0, 1);
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(c.voltage_V[k] < q.ocv(c.soc_pct[k], 10.0));
  c.validate();
}

TEST_CASE("drive profiles never charge a full cell") {
  const auto p = EcmParams::panasonic_like();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CHECK_NOTHROW(simulate_cycle(p, make_drive_profile({}, seed), 25.0, seed));
  }
}

TEST_CASE("coulomb counting") {
  const auto zero = coulomb_count(std::vector<double>(10, 0.0), 1.0, 2.0, 80.0);
  for (double s : zero.soc_pct) CHECK(s == 80.0);

  const auto one_percent = coulomb_count(std::vector<double>(37, 1.0), 1.0, 1.0, 100.0);
  CHECK(one_percent.soc_pct.back() == doctest::Approx(99.0).epsilon(1e-12));

  const auto charging = coulomb_count(std::vector<double>(11, -1.0), 1.0, 1.0, 50.0);
  CHECK(charging.soc_pct.back() > 50.0);

  const auto over = coulomb_count(std::vector<double>(11, -360.0), 1.0, 1.0, 95.0);
  CHECK_FALSE(over.clamp_events.empty());
  CHECK(over.soc_pct.back() == 100.0);

  // Linear: twice the current for half the time lands on the same SoC.
  const auto slow = coulomb_count(std::vector<double>(101, 1.0), 1.0, 1.0, 100.0);
  const auto fast = coulomb_count(std::vector<double>(51, 2.0), 1.0, 1.0, 100.0);
  CHECK(slow.soc_pct.back() == doctest::Approx(fast.soc_pct.back()).epsilon(1e-12));

  CHECK_THROWS_AS(coulomb_count({1.0, NAN}, 1.0, 1.0, 100.0), ValidationError);
}

TEST_CASE("temperature table interpolates and clamps") {
  TemperatureTable t({{-10.0, 0.5}, {10.0, 1.0}});
  CHECK(t(0.0) == doctest::Approx(0.75));
  CHECK(t(-40.0) == 0.5);
  CHECK(t(40.0) == 1.0);
  const auto p = EcmParams::panasonic_like();
  CHECK(p.effective_capacity_Ah(-6.0) == doctest::Approx(0.8 * p.capacity_Ah_ref));
}

}
