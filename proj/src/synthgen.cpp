#include "envclass/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <json.hpp>

#include "envclass/error.hpp"
#include "envclass/random.hpp"
#include "text_util.hpp"

namespace envclass {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Conflict geometry, in the vehicle frame.
constexpr double kLookAhead = 12.0;     // m ahead of the vehicle, at least
constexpr double kLookAheadTime = 3.0;  // s of travel at the current speed
constexpr double kZoneHalfWidth = 3.5;  // m either side of its path
constexpr double kPathHalfWidth = 1.0;  // pedestrian inside this is "in the path"
constexpr double kStopDistance = 3.0;   // vehicle stops for an in-path pedestrian closer than this
constexpr double kResume = 1.0;         // a waiting pedestrian goes once the vehicle is this close to its line
constexpr double kAccel = 2.0;          // m/s^2
constexpr double kDecel = 5.0;          // m/s^2

struct Ped {
  std::size_t id;
  std::int64_t f0, f1;  // alive frames, inclusive
  Vec2 pos;
  double heading = 0.0;  // radians
  double base_speed = 0.0;
  double jitter = 0.0;
  double stop_left = 0.0;
  double leg_left = 0.0;
  bool standing = false;
  std::vector<TrackPoint> pts;
};

struct Veh {
  std::size_t id;
  std::int64_t f0;
  bool alive = false;
  bool done = false;
  Vec2 pos;
  Vec2 dir;
  double cruise = 0.0;
  double speed = 0.0;
  std::vector<TrackPoint> pts;
};

double choose_heading(const RegimeParams& p, Rng& rng) {
  if (p.allowed_directions.empty()) return rng.uniform(-std::numbers::pi, std::numbers::pi);
  const double base = p.allowed_directions[rng.index(p.allowed_directions.size())];
  return (base + (p.heading_dispersion_deg > 0.0 ? rng.normal(0.0, p.heading_dispersion_deg) : 0.0)) * kDeg;
}

}  // namespace

void validate_params(const RegimeParams& p) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw config_error(std::string("synth: ") + name + " must be > 0");
  };
  auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw config_error(std::string("synth: ") + name + " must be >= 0");
  };
  positive(p.frame_rate_hz, "frame_rate_hz");
  positive(p.duration_s, "duration_s");
  positive(p.area_m2, "area_m2");
  positive(p.ped_lifetime_s, "ped_lifetime_s");
  positive(p.ped_speed_mean, "ped_speed_mean");
  non_negative(p.ped_speed_sd, "ped_speed_sd");
  non_negative(p.speed_jitter, "speed_jitter");
  non_negative(p.stop_rate, "stop_rate");
  positive(p.stop_duration_s, "stop_duration_s");
  non_negative(p.heading_dispersion_deg, "heading_dispersion_deg");
  non_negative(p.heading_wander_deg, "heading_wander_deg");
  positive(p.leg_duration_s, "leg_duration_s");
  positive(p.veh_speed_mean, "veh_speed_mean");
  non_negative(p.veh_speed_sd, "veh_speed_sd");
  positive(p.caution_speed, "caution_speed");
  if (!(p.yield_prob >= 0.0 && p.yield_prob <= 1.0)) throw config_error("synth: yield_prob must be in [0, 1]");
  if (p.duration_s * p.frame_rate_hz < 2.0) throw config_error("synth: scene shorter than two frames");
}

RegimeParams preset_road(std::uint64_t seed) {
  RegimeParams p;
  p.name = "road";
  p.seed = seed;
  p.duration_s = 240.0;
  p.area_m2 = 1600.0;
  p.ped_count = 80;
  p.standing_count = 1;
  p.ped_speed_mean = 1.35;
  p.ped_speed_sd = 0.2;
  p.speed_jitter = 0.06;
  p.stop_rate = 0.4;
  p.stop_duration_s = 3.0;
  p.allowed_directions = {0.0, 90.0, 180.0, 270.0};
  p.heading_dispersion_deg = 3.0;
  p.heading_wander_deg = 1.0;
  p.leg_duration_s = 25.0;
  p.veh_count = 80;
  p.veh_speed_mean = 8.0;
  p.veh_speed_sd = 1.0;
  p.caution_speed = 4.0;
  p.yield_prob = 0.15;
  return p;
}

RegimeParams preset_campus(std::uint64_t seed) {
  RegimeParams p;
  p.name = "campus";
  p.seed = seed;
  p.duration_s = 240.0;
  p.area_m2 = 1600.0;
  p.ped_count = 80;
  p.standing_count = 6;
  p.ped_speed_mean = 1.2;
  p.ped_speed_sd = 0.25;
  p.speed_jitter = 0.12;
  p.stop_rate = 2.5;
  p.stop_duration_s = 5.0;
  p.allowed_directions = {};
  p.heading_dispersion_deg = 0.0;
  p.heading_wander_deg = 12.0;
  p.leg_duration_s = 7.0;
  p.veh_count = 24;
  p.veh_speed_mean = 3.5;
  p.veh_speed_sd = 0.7;
  p.caution_speed = 2.0;
  p.yield_prob = 0.8;
  return p;
}

RegimeParams preset(std::string_view name, std::uint64_t seed) {
  const auto n = detail::lower(name);
  if (n == "road") return preset_road(seed);
  if (n == "campus") return preset_campus(seed);
  throw config_error("unknown preset '" + std::string(name) + "' (expected road or campus)");
}

RegimeParams params_from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw config_error(std::string("synth params are not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw config_error("synth params must be a JSON object");
  RegimeParams p;
  try {
    const std::uint64_t seed = j.value("seed", std::uint64_t{1});
    if (j.contains("preset")) p = preset(j["preset"].get<std::string>(), seed);
    p.seed = seed;
#define ENVC_FIELD(name) \
  if (j.contains(#name)) j.at(#name).get_to(p.name);
#define ENVC_COUNT(name)                                                                          \
  if (j.contains(#name)) {                                                                         \
    if (!j.at(#name).is_number_unsigned()) throw config_error("synth: " #name " must be a count >= 0"); \
    j.at(#name).get_to(p.name);                                                                    \
  }
    ENVC_FIELD(name)
    ENVC_FIELD(dataset_id)
    ENVC_FIELD(scene_id)
    ENVC_FIELD(frame_rate_hz)
    ENVC_FIELD(duration_s)
    ENVC_FIELD(area_m2)
    ENVC_COUNT(ped_count)
    ENVC_COUNT(standing_count)
    ENVC_FIELD(ped_lifetime_s)
    ENVC_FIELD(ped_speed_mean)
    ENVC_FIELD(ped_speed_sd)
    ENVC_FIELD(speed_jitter)
    ENVC_FIELD(stop_rate)
    ENVC_FIELD(stop_duration_s)
    ENVC_FIELD(allowed_directions)
    ENVC_FIELD(heading_dispersion_deg)
    ENVC_FIELD(heading_wander_deg)
    ENVC_FIELD(leg_duration_s)
    ENVC_COUNT(veh_count)
    ENVC_FIELD(veh_speed_mean)
    ENVC_FIELD(veh_speed_sd)
    ENVC_FIELD(caution_speed)
    ENVC_FIELD(yield_prob)
#undef ENVC_FIELD
#undef ENVC_COUNT
  } catch (const json::exception& e) {
    throw config_error(std::string("synth params: ") + e.what());
  }
  validate_params(p);
  return p;
}

std::string params_to_json(const RegimeParams& p) {
  json j{{"name", p.name},
         {"dataset_id", p.dataset_id},
         {"scene_id", p.scene_id},
         {"seed", p.seed},
         {"frame_rate_hz", p.frame_rate_hz},
         {"duration_s", p.duration_s},
         {"area_m2", p.area_m2},
         {"ped_count", p.ped_count},
         {"standing_count", p.standing_count},
         {"ped_lifetime_s", p.ped_lifetime_s},
         {"ped_speed_mean", p.ped_speed_mean},
         {"ped_speed_sd", p.ped_speed_sd},
         {"speed_jitter", p.speed_jitter},
         {"stop_rate", p.stop_rate},
         {"stop_duration_s", p.stop_duration_s},
         {"allowed_directions", p.allowed_directions},
         {"heading_dispersion_deg", p.heading_dispersion_deg},
         {"heading_wander_deg", p.heading_wander_deg},
         {"leg_duration_s", p.leg_duration_s},
         {"veh_count", p.veh_count},
         {"veh_speed_mean", p.veh_speed_mean},
         {"veh_speed_sd", p.veh_speed_sd},
         {"caution_speed", p.caution_speed},
         {"yield_prob", p.yield_prob}};
  return j.dump(2) + "\n";
}

DatasetBundle generate(const RegimeParams& params) {
  validate_params(params);
  Rng rng(params.seed);
  const double dt = 1.0 / params.frame_rate_hz;
  const auto frames = static_cast<std::int64_t>(std::floor(params.duration_s * params.frame_rate_hz));
  const double half = std::sqrt(params.area_m2) / 2.0;
  const bool lanes = !params.allowed_directions.empty();

  SceneMeta meta;
  meta.scene_id = params.scene_id.empty() ? params.name + "-" + std::to_string(params.seed) : params.scene_id;
  meta.dataset_id = params.dataset_id.empty() ? meta.scene_id : params.dataset_id;
  meta.frame_rate_hz = params.frame_rate_hz;
  meta.area_m2 = params.area_m2;

  std::vector<Ped> peds;
  const std::size_t total_peds = params.ped_count + params.standing_count;
  for (std::size_t i = 0; i < total_peds; ++i) {
    Ped p;
    p.id = i;
    p.standing = i >= params.ped_count;
    const double life = std::min(params.duration_s, params.ped_lifetime_s * rng.uniform(0.5, 1.5));
    // Stratified start times keep the per-scene head counts steady.
    const double slot = (params.duration_s - life) / static_cast<double>(total_peds);
    const double t0 = (static_cast<double>(i) + rng.uniform()) * slot;
    p.f0 = static_cast<std::int64_t>(t0 * params.frame_rate_hz);
    p.f1 = std::min(frames - 1, p.f0 + std::max<std::int64_t>(1, static_cast<std::int64_t>(life * params.frame_rate_hz)));
    p.pos = {rng.uniform(-0.9 * half, 0.9 * half), rng.uniform(-0.9 * half, 0.9 * half)};
    p.heading = choose_heading(params, rng);
    p.base_speed = std::max(0.6, rng.normal(params.ped_speed_mean, params.ped_speed_sd));
    p.leg_left = params.leg_duration_s * rng.uniform(0.5, 1.5);
    peds.push_back(std::move(p));
  }

  std::vector<Veh> vehs;
  for (std::size_t i = 0; i < params.veh_count; ++i) {
    Veh v;
    v.id = i;
    const double slot = 0.8 * params.duration_s / static_cast<double>(params.veh_count);
    v.f0 = static_cast<std::int64_t>((static_cast<double>(i) + rng.uniform()) * slot * params.frame_rate_hz);
    v.cruise = std::max(1.5, rng.normal(params.veh_speed_mean, params.veh_speed_sd));
    if (lanes) {
      const bool east = rng.bernoulli(0.5);
      v.dir = {east ? 1.0 : -1.0, 0.0};
      v.pos = {east ? -half : half, east ? -2.0 : 2.0};
    } else {
      const double a = rng.uniform(-std::numbers::pi, std::numbers::pi);
      v.dir = {std::cos(a), std::sin(a)};
      const Vec2 normal{-v.dir.y, v.dir.x};
      v.pos = (-half) * v.dir + rng.uniform(-0.5 * half, 0.5 * half) * normal;
    }
    v.speed = v.cruise;
    vehs.push_back(std::move(v));
  }

  // Per (vehicle, pedestrian) pair: does the vehicle yield? Drawn on first contact.
  std::map<std::pair<std::size_t, std::size_t>, bool> decisions;
  const double stop_prob = params.stop_rate / 60.0 * dt;
  const double wander_sd = params.heading_wander_deg * kDeg * std::sqrt(dt);

  for (std::int64_t f = 0; f < frames; ++f) {
    std::vector<Veh*> active;
    for (auto& v : vehs) {
      if (!v.done && f >= v.f0) {
        v.alive = true;
        active.push_back(&v);
      }
    }
    std::vector<bool> waiting(peds.size(), false);
    // A pedestrian already standing in some vehicle's path is committed and
    // never waits for another one; otherwise two lanes can lock each other.
    std::vector<bool> committed(peds.size(), false);
    for (const auto* v : active) {
      for (const auto& p : peds) {
        if (p.standing || f < p.f0 || f > p.f1) continue;
        const Vec2 rel = p.pos - v->pos;
        const double lon = dot(rel, v->dir);
        if (lon >= -0.5 && lon <= kLookAhead && std::fabs(cross(v->dir, rel)) < kPathHalfWidth) committed[p.id] = true;
      }
    }
    std::vector<double> target(active.size());
    for (std::size_t a = 0; a < active.size(); ++a) {
      auto& v = *active[a];
      target[a] = v.cruise;
      const double look = std::max(kLookAhead, kLookAheadTime * v.cruise);
      for (auto& p : peds) {
        if (p.standing || f < p.f0 || f > p.f1) continue;
        const Vec2 rel = p.pos - v.pos;
        const double lon = dot(rel, v.dir);
        const double lat = cross(v.dir, rel);
        if (lon < -0.5 || lon > look || std::fabs(lat) > kZoneHalfWidth) continue;
        const Vec2 pdir{std::cos(p.heading), std::sin(p.heading)};
        const double crossing_rate = cross(v.dir, pdir);  // d(lat)/ds for the pedestrian
        if (std::fabs(crossing_rate) < 0.5) continue;  // walking alongside, not crossing
        const bool approaching = lat * crossing_rate < 0.0;
        const bool in_path = std::fabs(lat) < kPathHalfWidth;
        if (!in_path && !approaching) continue;  // already clear of the path
        if (in_path) p.stop_left = 0.0;           // nobody lingers in front of a car
        auto key = std::make_pair(v.id, p.id);
        auto it = decisions.find(key);
        if (it == decisions.end()) it = decisions.emplace(key, rng.bernoulli(params.yield_prob)).first;
        const bool vehicle_yields = it->second;
        if (in_path || vehicle_yields) {
          if (lon < 0.0 || lon > kLookAhead) continue;
          target[a] = std::min(target[a], lon < kStopDistance ? 0.0 : params.caution_speed);
        } else {
          target[a] = std::min(target[a], params.caution_speed);
          if (lon > kResume && !committed[p.id]) waiting[p.id] = true;
        }
      }
    }
    for (std::size_t a = 0; a < active.size(); ++a) {
      auto& v = *active[a];
      if (v.speed < target[a]) v.speed = std::min(target[a], v.speed + kAccel * dt);
      else v.speed = std::max(target[a], v.speed - kDecel * dt);
      v.pts.push_back({f, 0.0, v.pos});
      v.pos = v.pos + (v.speed * dt) * v.dir;
      if (dot(v.pos, v.dir) > half + 5.0) v.done = true;
    }

    for (auto& p : peds) {
      if (f < p.f0 || f > p.f1) continue;
      p.pts.push_back({f, 0.0, p.pos});
      if (p.standing) continue;
      p.jitter = 0.8 * p.jitter + 0.6 * rng.normal(0.0, params.speed_jitter);
      if (p.stop_left <= 0.0 && stop_prob > 0.0 && rng.bernoulli(stop_prob)) {
        p.stop_left = params.stop_duration_s * rng.uniform(0.5, 1.5);
      }
      p.leg_left -= dt;
      if (p.leg_left <= 0.0) {
        p.heading = choose_heading(params, rng);
        p.leg_left = params.leg_duration_s * rng.uniform(0.5, 1.5);
      }
      if (wander_sd > 0.0) p.heading += rng.normal(0.0, wander_sd);
      double speed = std::max(0.0, p.base_speed + p.jitter);
      if (p.stop_left > 0.0) {
        p.stop_left -= dt;
        speed = 0.0;
      }
      if (waiting[p.id]) speed = 0.0;
      Vec2 next = p.pos + (speed * dt) * Vec2{std::cos(p.heading), std::sin(p.heading)};
      if (std::fabs(next.x) > half || std::fabs(next.y) > half) {
        if (lanes) {
          p.heading += std::numbers::pi;
        } else {
          p.heading = std::atan2(-p.pos.y, -p.pos.x) + rng.normal(0.0, 0.5);
        }
        next = p.pos + (speed * dt) * Vec2{std::cos(p.heading), std::sin(p.heading)};
      }
      p.pos = next;
    }
  }

  DatasetBundle bundle;
  bundle.scenes = {meta};
  char id[32];
  for (auto& p : peds) {
    if (p.pts.size() < 2) continue;
    std::snprintf(id, sizeof id, "p%04zu", p.id);
    Track t{id, AgentKind::Pedestrian, meta.scene_id, std::move(p.pts)};
    for (auto& pt : t.points) pt.time_s = static_cast<double>(pt.frame) / meta.frame_rate_hz;
    bundle.tracks.push_back(std::move(t));
  }
  for (auto& v : vehs) {
    if (v.pts.size() < 2) continue;
    std::snprintf(id, sizeof id, "v%04zu", v.id);
    Track t{id, AgentKind::Vehicle, meta.scene_id, std::move(v.pts)};
    for (auto& pt : t.points) pt.time_s = static_cast<double>(pt.frame) / meta.frame_rate_hz;
    bundle.tracks.push_back(std::move(t));
  }
  std::sort(bundle.tracks.begin(), bundle.tracks.end(),
            [](const Track& a, const Track& b) { return a.agent_id < b.agent_id; });
  return bundle;
}

}  // namespace envclass
