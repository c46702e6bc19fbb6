#include "envclass/trajstore.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "envclass/error.hpp"
#include "text_util.hpp"

namespace envclass {

using nlohmann::json;

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::Pedestrian: return "pedestrian";
    case AgentKind::Vehicle: return "vehicle";
    case AgentKind::Other: return "other";
  }
  return "other";
}

std::optional<AgentKind> parse_agent_kind(std::string_view text) {
  const auto s = detail::lower(detail::trim(text));
  if (s == "pedestrian") return AgentKind::Pedestrian;
  if (s == "vehicle") return AgentKind::Vehicle;
  if (s == "other") return AgentKind::Other;
  return std::nullopt;
}

void LoadReport::merge(const LoadReport& other) {
  short_tracks_dropped += other.short_tracks_dropped;
  lost_rows_dropped += other.lost_rows_dropped;
  unknown_labels += other.unknown_labels;
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

const SceneMeta* DatasetBundle::find_scene(std::string_view scene_id) const {
  auto it = std::lower_bound(scenes.begin(), scenes.end(), scene_id,
                             [](const SceneMeta& s, std::string_view id) { return s.scene_id < id; });
  if (it == scenes.end() || it->scene_id != scene_id) return nullptr;
  return &*it;
}

const SceneMeta& DatasetBundle::scene(std::string_view scene_id) const {
  if (const auto* s = find_scene(scene_id)) return *s;
  throw reference_error("scene '" + std::string(scene_id) + "' has no metadata");
}

std::vector<std::string> DatasetBundle::dataset_ids() const {
  std::set<std::string> ids;
  for (const auto& s : scenes) ids.insert(s.dataset_id);
  return {ids.begin(), ids.end()};
}

namespace {

void check_meta(const SceneMeta& m) {
  if (m.scene_id.empty()) throw config_error("scene metadata without scene_id");
  if (!(m.frame_rate_hz > 0.0) || !std::isfinite(m.frame_rate_hz)) {
    throw config_error("scene '" + m.scene_id + "': frame_rate_hz must be > 0");
  }
  if (!(m.area_m2 > 0.0) || !std::isfinite(m.area_m2)) {
    throw config_error("scene '" + m.scene_id + "': area_m2 must be > 0");
  }
}

SceneMeta meta_from_json(const json& j) {
  if (!j.is_object()) throw config_error("scene metadata entry is not an object");
  SceneMeta m;
  try {
    m.scene_id = j.at("scene_id").is_string() ? j.at("scene_id").get<std::string>()
                                               : j.at("scene_id").dump();
    m.dataset_id = j.at("dataset_id").is_string() ? j.at("dataset_id").get<std::string>()
                                                   : j.at("dataset_id").dump();
    m.frame_rate_hz = j.at("frame_rate_hz").get<double>();
    m.area_m2 = j.at("area_m2").get<double>();
  } catch (const json::exception& e) {
    throw config_error(std::string("scene metadata: ") + e.what());
  }
  check_meta(m);
  return m;
}

void sort_scenes(std::vector<SceneMeta>& scenes) {
  std::sort(scenes.begin(), scenes.end(),
            [](const SceneMeta& a, const SceneMeta& b) { return a.scene_id < b.scene_id; });
  for (std::size_t i = 1; i < scenes.size(); ++i) {
    if (scenes[i].scene_id == scenes[i - 1].scene_id) {
      throw config_error("scene '" + scenes[i].scene_id + "' defined twice");
    }
  }
}

std::string read_file(const std::string& path) {
  auto text = detail::slurp(path);
  if (!text) throw io_error("cannot open '" + path + "'");
  return std::move(*text);
}

struct RawRow {
  std::string scene_id;
  std::string agent_id;
  AgentKind kind;
  std::int64_t frame;
  Vec2 pos;
  std::size_t line;
};

// Groups rows into tracks: sort by (scene, agent, frame), reject duplicate
// frames, derive time from the scene frame rate, drop tracks under 2 points.
std::vector<Track> build_tracks(std::vector<RawRow> rows, const DatasetBundle& bundle,
                                const std::string& source, LoadReport& report) {
  std::stable_sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) {
    return std::tie(a.scene_id, a.agent_id, a.frame) < std::tie(b.scene_id, b.agent_id, b.frame);
  });
  std::vector<Track> tracks;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    Track t;
    t.agent_id = rows[i].agent_id;
    t.scene_id = rows[i].scene_id;
    t.kind = rows[i].kind;
    const auto& meta = bundle.scene(t.scene_id);
    for (; j < rows.size() && rows[j].scene_id == t.scene_id && rows[j].agent_id == t.agent_id; ++j) {
      const auto& r = rows[j];
      if (r.kind != t.kind) {
        throw ParseError(source, r.line, "agent '" + r.agent_id + "' changes kind");
      }
      if (!t.points.empty() && t.points.back().frame == r.frame) {
        throw ParseError(source, std::max(r.line, rows[j - 1].line),
                         "duplicate (agent_id, frame) = (" + r.agent_id + ", " +
                             std::to_string(r.frame) + ")");
      }
      t.points.push_back({r.frame, static_cast<double>(r.frame) / meta.frame_rate_hz, r.pos});
    }
    if (t.points.size() < 2) {
      ++report.short_tracks_dropped;
      report.warnings.push_back(source + ": dropped single-point track '" + t.agent_id + "' in scene '" +
                                t.scene_id + "'");
    } else {
      tracks.push_back(std::move(t));
    }
    i = j;
  }
  return tracks;
}

Vec2 parse_position(const std::string& xs, const std::string& ys, const std::string& source, std::size_t line) {
  const auto x = detail::parse_double(xs);
  const auto y = detail::parse_double(ys);
  if (!x || !y) throw ParseError(source, line, "position is not numeric");
  if (!std::isfinite(*x) || !std::isfinite(*y)) throw ParseError(source, line, "position is not finite");
  return {*x, *y};
}

std::int64_t parse_frame(const std::string& s, const std::string& source, std::size_t line) {
  const auto f = detail::parse_int(s);
  if (!f) throw ParseError(source, line, "frame '" + s + "' is not an integer");
  if (*f < 0) throw ParseError(source, line, "frame must be >= 0");
  return *f;
}

std::optional<AgentKind> builtin_kind_alias(const std::string& lowered) {
  static const std::map<std::string, AgentKind> aliases = {
      {"pedestrian", AgentKind::Pedestrian}, {"ped", AgentKind::Pedestrian},
      {"person", AgentKind::Pedestrian},     {"vehicle", AgentKind::Vehicle},
      {"car", AgentKind::Vehicle},           {"cart", AgentKind::Vehicle},
      {"truck", AgentKind::Vehicle},         {"bus", AgentKind::Vehicle},
      {"van", AgentKind::Vehicle},           {"truck_bus", AgentKind::Vehicle},
      {"other", AgentKind::Other},
  };
  auto it = aliases.find(lowered);
  if (it == aliases.end()) return std::nullopt;
  return it->second;
}

}  // namespace

std::vector<SceneMeta> parse_scene_meta(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw config_error(std::string("scene metadata is not valid JSON: ") + e.what());
  }
  std::vector<SceneMeta> out;
  if (j.is_array()) {
    for (const auto& e : j) out.push_back(meta_from_json(e));
  } else {
    out.push_back(meta_from_json(j));
  }
  sort_scenes(out);
  return out;
}

std::vector<SceneMeta> load_scene_meta(const std::string& path) { return parse_scene_meta(read_file(path)); }

std::string scene_meta_to_json(const std::vector<SceneMeta>& scenes) {
  json arr = json::array();
  for (const auto& s : scenes) {
    arr.push_back({{"scene_id", s.scene_id},
                   {"dataset_id", s.dataset_id},
                   {"frame_rate_hz", s.frame_rate_hz},
                   {"area_m2", s.area_m2}});
  }
  return arr.dump(2) + "\n";
}

DatasetBundle read_normalized(std::istream& in, const std::string& source,
                              const std::vector<SceneMeta>& scenes) {
  DatasetBundle bundle;
  bundle.scenes = scenes;
  sort_scenes(bundle.scenes);
  for (const auto& s : bundle.scenes) check_meta(s);

  static const std::vector<std::string> expected = {"dataset_id", "scene_id", "agent_id", "kind",
                                                    "frame",      "x_m",      "y_m"};
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::vector<RawRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv(line);
    if (!have_header) {
      if (lineno == 1 && !fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) {
        fields[0] = fields[0].substr(3);
      }
      if (fields != expected) {
        throw ParseError(source, lineno, "header must be dataset_id,scene_id,agent_id,kind,frame,x_m,y_m");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != expected.size()) {
      throw ParseError(source, lineno,
                       "expected 7 fields, found " + std::to_string(fields.size()));
    }
    const auto kind = parse_agent_kind(fields[3]);
    if (!kind) throw ParseError(source, lineno, "unknown kind '" + fields[3] + "'");
    const auto* meta = bundle.find_scene(fields[1]);
    if (!meta) throw reference_error("scene '" + fields[1] + "' has no metadata (" + source + ":" +
                                     std::to_string(lineno) + ")");
    if (meta->dataset_id != fields[0]) {
      throw reference_error("scene '" + fields[1] + "' belongs to dataset '" + meta->dataset_id +
                            "', row says '" + fields[0] + "' (" + source + ":" + std::to_string(lineno) + ")");
    }
    rows.push_back({fields[1], fields[2], *kind, parse_frame(fields[4], source, lineno),
                    parse_position(fields[5], fields[6], source, lineno), lineno});
  }
  if (!have_header) throw ParseError(source, lineno + 1, "missing header row");
  bundle.tracks = build_tracks(std::move(rows), bundle, source, bundle.report);
  return bundle;
}

DatasetBundle load_normalized(const std::string& path, const std::vector<SceneMeta>& scenes) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  return read_normalized(in, path, scenes);
}

void write_normalized(const DatasetBundle& bundle, std::ostream& out) {
  out << "dataset_id,scene_id,agent_id,kind,frame,x_m,y_m\n";
  for (const auto& t : bundle.tracks) {
    const auto& meta = bundle.scene(t.scene_id);
    for (const auto& p : t.points) {
      out << meta.dataset_id << ',' << t.scene_id << ',' << t.agent_id << ',' << to_string(t.kind) << ','
          << p.frame << ',' << detail::format_double(p.position.x) << ','
          << detail::format_double(p.position.y) << '\n';
    }
  }
}

Vec2 Homography::apply(Vec2 p) const {
  const double x = m[0] * p.x + m[1] * p.y + m[2];
  const double y = m[3] * p.x + m[4] * p.y + m[5];
  const double w = m[6] * p.x + m[7] * p.y + m[8];
  if (w == 0.0) throw invariant_error("homography maps a point to infinity");
  if (w == 1.0) return {x, y};
  return {x / w, y / w};
}

Homography parse_homography(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw config_error(std::string("transform is not valid JSON: ") + e.what());
  }
  if (!j.is_array() || j.size() != 9) throw config_error("transform must be a JSON array of 9 numbers");
  Homography h;
  for (std::size_t i = 0; i < 9; ++i) {
    if (!j[i].is_number()) throw config_error("transform entry " + std::to_string(i) + " is not a number");
    h.m[i] = j[i].get<double>();
  }
  return h;
}

DatasetBundle read_sdd(std::istream& in, const std::string& source, const SceneMeta& meta,
                       const Homography& transform) {
  DatasetBundle bundle;
  check_meta(meta);
  bundle.scenes = {meta};
  std::vector<RawRow> rows;
  std::map<std::string, std::size_t> unknown;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto tok = detail::split_ws(line);
    if (tok.size() < 10) {
      throw ParseError(source, lineno, "expected 10 SDD columns, found " + std::to_string(tok.size()));
    }
    const auto lost = detail::parse_int(tok[6]);
    if (!lost) throw ParseError(source, lineno, "lost flag is not an integer");
    if (*lost == 1) {
      ++bundle.report.lost_rows_dropped;
      continue;
    }
    const auto xmin = detail::parse_double(tok[1]);
    const auto ymin = detail::parse_double(tok[2]);
    const auto xmax = detail::parse_double(tok[3]);
    const auto ymax = detail::parse_double(tok[4]);
    if (!xmin || !ymin || !xmax || !ymax) throw ParseError(source, lineno, "bounding box is not numeric");
    const Vec2 center{(*xmin + *xmax) / 2.0, (*ymin + *ymax) / 2.0};
    const Vec2 world = transform.apply(center);
    if (!std::isfinite(world.x) || !std::isfinite(world.y)) {
      throw ParseError(source, lineno, "transformed position is not finite");
    }
    const auto& label = tok[9];
    AgentKind kind = AgentKind::Other;
    if (label == "Pedestrian") {
      kind = AgentKind::Pedestrian;
    } else if (label == "Car" || label == "Cart") {
      kind = AgentKind::Vehicle;
    } else if (label != "Biker" && label != "Skater" && label != "Bus") {
      ++bundle.report.unknown_labels;
      ++unknown[label];
    }
    rows.push_back({meta.scene_id, tok[0], kind, parse_frame(tok[5], source, lineno), world, lineno});
  }
  for (const auto& [label, n] : unknown) {
    bundle.report.warnings.push_back(source + ": unknown label '" + label + "' mapped to other (" +
                                     std::to_string(n) + " rows)");
  }
  bundle.tracks = build_tracks(std::move(rows), bundle, source, bundle.report);
  return bundle;
}

DatasetBundle adapt_sdd(const std::string& path, const SceneMeta& meta, const Homography& transform) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  return read_sdd(in, path, meta, transform);
}

ColumnMap parse_column_map(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw config_error(std::string("column map is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw config_error("column map must be a JSON object");
  ColumnMap map;
  auto required = [&](const char* key, std::string& dst) {
    if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
      throw config_error(std::string("column map: required column '") + key + "' is not mapped");
    }
    dst = j[key].get<std::string>();
  };
  required("id", map.id);
  required("frame", map.frame);
  required("x", map.x);
  required("y", map.y);
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) throw config_error("column map: 'kind' must be a column name");
    map.kind = j["kind"].get<std::string>();
  }
  if (j.contains("default_kind")) {
    const auto k = parse_agent_kind(j["default_kind"].get<std::string>());
    if (!k) throw config_error("column map: bad default_kind");
    map.default_kind = *k;
  }
  if (j.contains("kind_values")) {
    for (const auto& [value, kind] : j["kind_values"].items()) {
      const auto k = parse_agent_kind(kind.get<std::string>());
      if (!k) throw config_error("column map: kind_values['" + value + "'] is not a kind");
      map.kind_values[detail::lower(value)] = *k;
    }
  }
  if (j.contains("transform")) map.transform = parse_homography(j["transform"].dump());
  return map;
}

DatasetBundle read_generic(std::istream& in, const std::string& source, const ColumnMap& map,
                           const SceneMeta& meta) {
  for (const auto* col : {&map.id, &map.frame, &map.x, &map.y}) {
    if (col->empty()) throw config_error("column map: required column is not mapped");
  }
  DatasetBundle bundle;
  check_meta(meta);
  bundle.scenes = {meta};
  std::map<std::string, AgentKind> kind_values;
  for (const auto& [k, v] : map.kind_values) kind_values[detail::lower(k)] = v;

  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::size_t ci = 0, cf = 0, cx = 0, cy = 0, ck = 0;
  std::map<std::string, std::size_t> unknown;
  std::vector<RawRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv(line);
    if (header.empty()) {
      header = fields;
      auto col = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw config_error("column map: column '" + name + "' not in " + source);
        return static_cast<std::size_t>(it - header.begin());
      };
      ci = col(map.id);
      cf = col(map.frame);
      cx = col(map.x);
      cy = col(map.y);
      if (map.kind) ck = col(*map.kind);
      continue;
    }
    if (fields.size() != header.size()) {
      throw ParseError(source, lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                                           std::to_string(fields.size()));
    }
    AgentKind kind = map.default_kind;
    if (map.kind) {
      const auto v = detail::lower(fields[ck]);
      if (auto it = kind_values.find(v); it != kind_values.end()) {
        kind = it->second;
      } else if (auto alias = builtin_kind_alias(v)) {
        kind = *alias;
      } else {
        kind = AgentKind::Other;
        ++bundle.report.unknown_labels;
        ++unknown[fields[ck]];
      }
    }
    const Vec2 raw = parse_position(fields[cx], fields[cy], source, lineno);
    rows.push_back({meta.scene_id, fields[ci], kind, parse_frame(fields[cf], source, lineno),
                    map.transform.apply(raw), lineno});
  }
  if (header.empty()) throw ParseError(source, lineno + 1, "missing header row");
  for (const auto& [label, n] : unknown) {
    bundle.report.warnings.push_back(source + ": unknown kind value '" + label + "' mapped to other (" +
                                     std::to_string(n) + " rows)");
  }
  bundle.tracks = build_tracks(std::move(rows), bundle, source, bundle.report);
  return bundle;
}

DatasetBundle adapt_generic(const std::string& path, const ColumnMap& map, const SceneMeta& meta) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  return read_generic(in, path, map, meta);
}

void merge_into(DatasetBundle& into, DatasetBundle other) {
  // Built on the side so a rejected merge leaves `into` untouched.
  auto scenes = into.scenes;
  for (auto& s : other.scenes) {
    if (const auto* existing = into.find_scene(s.scene_id)) {
      if (existing->dataset_id != s.dataset_id || existing->frame_rate_hz != s.frame_rate_hz ||
          existing->area_m2 != s.area_m2) {
        throw config_error("scene '" + s.scene_id + "' appears twice with different metadata");
      }
    } else {
      scenes.push_back(std::move(s));
    }
  }
  sort_scenes(scenes);
  const auto key = [](const Track& t) { return std::tie(t.scene_id, t.agent_id); };
  const auto less = [&](const Track& a, const Track& b) { return key(a) < key(b); };
  std::sort(other.tracks.begin(), other.tracks.end(), less);
  for (auto a = into.tracks.begin(), b = other.tracks.begin(); a != into.tracks.end() && b != other.tracks.end();) {
    if (less(*a, *b)) {
      ++a;
    } else if (less(*b, *a)) {
      ++b;
    } else {
      throw reference_error("agent '" + b->agent_id + "' in scene '" + b->scene_id + "' appears in two inputs");
    }
  }
  std::vector<Track> tracks;
  tracks.reserve(into.tracks.size() + other.tracks.size());
  std::merge(std::make_move_iterator(into.tracks.begin()), std::make_move_iterator(into.tracks.end()),
             std::make_move_iterator(other.tracks.begin()), std::make_move_iterator(other.tracks.end()),
             std::back_inserter(tracks), less);
  into.scenes = std::move(scenes);
  into.tracks = std::move(tracks);
  into.report.merge(other.report);
}

void validate(const DatasetBundle& bundle) {
  for (const auto& s : bundle.scenes) check_meta(s);
  for (const auto& t : bundle.tracks) {
    const auto& meta = bundle.scene(t.scene_id);
    if (t.points.size() < 2) throw invariant_error("track '" + t.agent_id + "' has fewer than 2 points");
    for (std::size_t i = 0; i < t.points.size(); ++i) {
      const auto& p = t.points[i];
      if (!std::isfinite(p.position.x) || !std::isfinite(p.position.y)) {
        throw invariant_error("track '" + t.agent_id + "' has a non-finite position");
      }
      if (p.time_s != static_cast<double>(p.frame) / meta.frame_rate_hz) {
        throw invariant_error("track '" + t.agent_id + "' time does not match its scene frame rate");
      }
      if (i > 0 && !(p.time_s > t.points[i - 1].time_s)) {
        throw invariant_error("track '" + t.agent_id + "' time is not strictly increasing");
      }
    }
  }
}

}  // namespace envclass
