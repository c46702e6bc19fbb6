#pragma once

// Seeded synthetic scenes with a known regime. "Road-like" scenes restrict
// pedestrian headings to a few directions and run vehicles along lanes;
// "campus-like" scenes use free headings, frequent stops and roaming
// vehicles that yield more often. The simulation integrates positions itself
// and never calls the feature code, so its output can serve as an oracle.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "envclass/trajstore.hpp"

namespace envclass {

struct RegimeParams {
  std::string name = "custom";
  std::string dataset_id;  // defaults to scene_id
  std::string scene_id;    // defaults to "<name>-<seed>"
  std::uint64_t seed = 1;

  double frame_rate_hz = 10.0;
  double duration_s = 120.0;
  double area_m2 = 1600.0;  // square scene centred on the origin

  // Pedestrians
  std::size_t ped_count = 40;
  std::size_t standing_count = 0;  // pedestrians that never move
  double ped_lifetime_s = 40.0;
  double ped_speed_mean = 1.3;
  double ped_speed_sd = 0.15;
  double speed_jitter = 0.05;       // sd of the AR(1) speed noise, m/s
  double stop_rate = 0.5;           // expected stops per minute
  double stop_duration_s = 3.0;
  std::vector<double> allowed_directions;  // degrees; empty = free headings
  double heading_dispersion_deg = 0.0;     // sd around the chosen direction
  double heading_wander_deg = 0.0;         // heading random walk, deg per sqrt(s)
  double leg_duration_s = 20.0;            // mean time before a new heading

  // Vehicles
  std::size_t veh_count = 10;
  double veh_speed_mean = 8.0;
  double veh_speed_sd = 1.0;
  double caution_speed = 4.0;  // speed when a pedestrian is in the conflict zone
  double yield_prob = 0.2;     // probability a vehicle yields to a crossing pedestrian
};

// Throws a config error on invalid parameters.
void validate_params(const RegimeParams& p);

RegimeParams preset_road(std::uint64_t seed = 1);
RegimeParams preset_campus(std::uint64_t seed = 1);
// "road" / "campus" (case-insensitive).
RegimeParams preset(std::string_view name, std::uint64_t seed = 1);

// Fields absent from the JSON keep their defaults; a "preset" key selects the
// base values first.
RegimeParams params_from_json(std::string_view json_text);
std::string params_to_json(const RegimeParams& p);

// One scene; the bundle passes trajstore validation. Bit-identical for equal
// params.
DatasetBundle generate(const RegimeParams& params);

}  // namespace envclass
