#include <doctest.h>

#include <sstream>

#include "envclass/error.hpp"
#include "envclass/pedfeat.hpp"
#include "envclass/synthgen.hpp"

using namespace envclass;

namespace {

RegimeParams quiet(std::uint64_t seed) {
  RegimeParams p;
  p.seed = seed;
  p.duration_s = 60;
  p.ped_count = 30;
  p.veh_count = 0;
  p.speed_jitter = 0.0;
  p.ped_speed_sd = 0.1;
  p.stop_rate = 0.0;
  return p;
}

double mean_stop_fraction(const PedestrianFeatureSet& fs) {
  double s = 0;
  for (const auto& r : fs.rows) s += r.stop_fraction;
  return fs.rows.empty() ? 0.0 : s / static_cast<double>(fs.rows.size());
}

}  // namespace

TEST_CASE("presets validate and generate valid bundles") {
  for (const char* name : {"road", "campus", "ROAD"}) {
    const auto p = preset(name, 3);
    CHECK_NOTHROW(validate_params(p));
    const auto b = generate(p);
    CHECK_NOTHROW(validate(b));
    REQUIRE(b.scenes.size() == 1);
    CHECK(b.scenes[0].area_m2 == p.area_m2);
    std::size_t peds = 0, vehs = 0;
    for (const auto& t : b.tracks) (t.kind == AgentKind::Pedestrian ? peds : vehs) += 1;
    CHECK(peds == p.ped_count + p.standing_count);
    CHECK(vehs == p.veh_count);
  }
  CHECK_THROWS_AS(preset("forest"), Error);
}

TEST_CASE("invalid parameters are configuration errors") {
  auto p = preset_road();
  p.frame_rate_hz = 0;
  CHECK_THROWS_AS(validate_params(p), Error);
  p = preset_road();
  p.yield_prob = 1.5;
  CHECK_THROWS_AS(validate_params(p), Error);
  CHECK_THROWS_AS(params_from_json(R"({"preset":"road","ped_count":-3})"), Error);
}

TEST_CASE("equal params give identical output, different seeds differ") {
  const auto a = generate(preset_campus(9)), b = generate(preset_campus(9)), c = generate(preset_campus(10));
  std::ostringstream sa, sb, sc;
  write_normalized(a, sa);
  write_normalized(b, sb);
  write_normalized(c, sc);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str() != sc.str());
}

TEST_CASE("params json round trip") {
  auto p = preset_campus(4);
  p.scene_id = "x";
  const auto back = params_from_json(params_to_json(p));
  CHECK(params_to_json(back) == params_to_json(p));
  const auto over = params_from_json(R"({"preset":"road","seed":7,"ped_count":12})");
  CHECK(over.ped_count == 12);
  CHECK(over.seed == 7);
  CHECK(over.veh_count == preset_road().veh_count);
}

TEST_CASE("no stops and no vehicles means no stopped samples") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto fs = compute_pedestrian_features(generate(quiet(seed)));
    CHECK(fs.rows.size() == 30);
    for (const auto& r : fs.rows) CHECK(r.stop_fraction == 0.0);
  }
}

TEST_CASE("two opposite allowed directions give an orientation entropy near ln 2") {
  auto p = quiet(2);
  p.ped_count = 80;
  p.allowed_directions = {0.0, 180.0};
  const auto fs = compute_pedestrian_features(generate(p));
  const auto& d = fs.orientation.begin()->second;
  CHECK(orientation_entropy(d) == doctest::Approx(std::log(2.0)).epsilon(0.05));
}

TEST_CASE("stop fraction grows with the stop rate") {
  double prev = -1.0;
  for (double rate : {0.0, 2.0, 6.0}) {
    double sum = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      auto p = quiet(seed);
      p.stop_rate = rate;
      sum += mean_stop_fraction(compute_pedestrian_features(generate(p)));
    }
    CHECK(sum > prev);
    prev = sum;
  }
}
