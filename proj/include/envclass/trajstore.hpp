#pragma once

// Trajectory recordings: the canonical in-memory model plus ingestion from the
// normalized CSV schema and dataset-specific adapters.
//
// Normalized CSV (UTF-8, header row):
//   dataset_id,scene_id,agent_id,kind,frame,x_m,y_m
// with kind one of pedestrian|vehicle|other. Positions are world meters.

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace envclass {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
  double norm() const { return std::hypot(x, y); }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

enum class AgentKind { Pedestrian, Vehicle, Other };

std::string_view to_string(AgentKind kind);
// Accepts pedestrian|vehicle|other, case-insensitive.
std::optional<AgentKind> parse_agent_kind(std::string_view text);

struct TrackPoint {
  std::int64_t frame = 0;
  double time_s = 0.0;  // frame / frame_rate_hz
  Vec2 position;
};

struct Track {
  std::string agent_id;
  AgentKind kind = AgentKind::Other;
  std::string scene_id;
  std::vector<TrackPoint> points;  // strictly increasing frame

  std::int64_t first_frame() const { return points.front().frame; }
  std::int64_t last_frame() const { return points.back().frame; }
};

struct SceneMeta {
  std::string scene_id;
  std::string dataset_id;
  double frame_rate_hz = 0.0;
  double area_m2 = 0.0;
};

// Counters and messages accumulated while loading. Never fatal.
struct LoadReport {
  std::size_t short_tracks_dropped = 0;  // < 2 points
  std::size_t lost_rows_dropped = 0;     // SDD lost flag
  std::size_t unknown_labels = 0;        // adapter label not in the mapping
  std::vector<std::string> warnings;

  void merge(const LoadReport& other);
};

struct DatasetBundle {
  std::vector<SceneMeta> scenes;  // sorted by scene_id
  std::vector<Track> tracks;      // sorted by (scene_id, agent_id)
  LoadReport report;

  const SceneMeta& scene(std::string_view scene_id) const;
  const SceneMeta* find_scene(std::string_view scene_id) const;
  // Dataset ids in sorted order.
  std::vector<std::string> dataset_ids() const;
};

// Scene metadata: a single JSON object or an array of them, each
// {"scene_id":..., "dataset_id":..., "frame_rate_hz":..., "area_m2":...}.
std::vector<SceneMeta> parse_scene_meta(std::string_view json_text);
std::vector<SceneMeta> load_scene_meta(const std::string& path);
std::string scene_meta_to_json(const std::vector<SceneMeta>& scenes);

DatasetBundle read_normalized(std::istream& in, const std::string& source_name,
                              const std::vector<SceneMeta>& scenes);
DatasetBundle load_normalized(const std::string& path, const std::vector<SceneMeta>& scenes);
void write_normalized(const DatasetBundle& bundle, std::ostream& out);

// Row-major 3x3 homogeneous transform from image (or any source) coordinates
// to world meters.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  Vec2 apply(Vec2 p) const;
  static Homography identity() { return {}; }
};

// Parses a 9-number JSON array.
Homography parse_homography(std::string_view json_text);

// Stanford-Drone-style annotations, whitespace separated:
//   track_id xmin ymin xmax ymax frame lost occluded generated "label"
// Lost rows are dropped; the box center is mapped through `transform`.
// Pedestrian -> Pedestrian, Car/Cart -> Vehicle, Biker/Skater/Bus -> Other;
// any other label becomes Other and bumps report.unknown_labels.
DatasetBundle read_sdd(std::istream& in, const std::string& source_name, const SceneMeta& meta,
                       const Homography& transform);
DatasetBundle adapt_sdd(const std::string& path, const SceneMeta& meta, const Homography& transform);

// Maps arbitrary CSV headers onto the track fields. `kind` is optional; when
// absent every row gets `default_kind`. Kind values are matched
// case-insensitively, first against `kind_values`, then the built-in aliases.
struct ColumnMap {
  std::string id;
  std::string frame;
  std::string x;
  std::string y;
  std::optional<std::string> kind;
  AgentKind default_kind = AgentKind::Pedestrian;
  std::map<std::string, AgentKind> kind_values;
  Homography transform;
};

ColumnMap parse_column_map(std::string_view json_text);
DatasetBundle read_generic(std::istream& in, const std::string& source_name, const ColumnMap& map,
                           const SceneMeta& meta);
DatasetBundle adapt_generic(const std::string& path, const ColumnMap& map, const SceneMeta& meta);

// Appends `other` into `into`. Scene ids must not collide with different
// metadata; (scene_id, agent_id) pairs must not collide at all.
void merge_into(DatasetBundle& into, DatasetBundle other);

// Re-checks every Track invariant. Throws on the first violation.
void validate(const DatasetBundle& bundle);

}  // namespace envclass
