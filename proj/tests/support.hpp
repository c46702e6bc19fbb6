#pragma once

#include <algorithm>
#include <cmath>
#include <tuple>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "envclass/trajstore.hpp"

namespace testing {

using envclass::AgentKind;
using envclass::DatasetBundle;
using envclass::SceneMeta;
using envclass::Track;
using envclass::TrackPoint;
using envclass::Vec2;

inline Track make_track(const std::string& id, AgentKind kind, const std::string& scene,
                        const std::vector<std::pair<std::int64_t, Vec2>>& pts, double fps = 10.0) {
  Track t;
  t.agent_id = id;
  t.kind = kind;
  t.scene_id = scene;
  for (const auto& [f, p] : pts) t.points.push_back({f, static_cast<double>(f) / fps, p});
  return t;
}

// Straight line from `a` at frame f0 to `b` at frame f1, one point per frame.
inline Track line_track(const std::string& id, AgentKind kind, const std::string& scene, std::int64_t f0,
                        std::int64_t f1, Vec2 a, Vec2 b, double fps = 10.0) {
  std::vector<std::pair<std::int64_t, Vec2>> pts;
  for (std::int64_t f = f0; f <= f1; ++f) {
    const double u = f1 == f0 ? 0.0 : static_cast<double>(f - f0) / static_cast<double>(f1 - f0);
    pts.push_back({f, Vec2{a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)}});
  }
  return make_track(id, kind, scene, pts, fps);
}

inline SceneMeta meta(const std::string& scene, const std::string& dataset, double fps = 10.0,
                      double area = 100.0) {
  return SceneMeta{scene, dataset, fps, area};
}

inline DatasetBundle bundle_of(std::vector<SceneMeta> scenes, std::vector<Track> tracks) {
  DatasetBundle b;
  std::sort(scenes.begin(), scenes.end(), [](const auto& x, const auto& y) { return x.scene_id < y.scene_id; });
  std::sort(tracks.begin(), tracks.end(), [](const Track& x, const Track& y) {
    return std::tie(x.scene_id, x.agent_id) < std::tie(y.scene_id, y.agent_id);
  });
  b.scenes = std::move(scenes);
  b.tracks = std::move(tracks);
  return b;
}

inline double ulp_close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

}  // namespace testing
