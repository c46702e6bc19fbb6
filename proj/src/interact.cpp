#include "envclass/interact.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>
#include <unordered_map>

#include "envclass/error.hpp"
#include "envclass/stats.hpp"

namespace envclass {

namespace {

struct SceneRange {
  std::size_t begin;
  std::size_t end;
};

std::vector<SceneRange> scene_ranges(const DatasetBundle& bundle) {
  std::vector<SceneRange> out;
  std::size_t i = 0;
  while (i < bundle.tracks.size()) {
    std::size_t j = i;
    while (j < bundle.tracks.size() && bundle.tracks[j].scene_id == bundle.tracks[i].scene_id) ++j;
    out.push_back({i, j});
    i = j;
  }
  return out;
}

struct CellKey {
  std::int64_t cx;
  std::int64_t cy;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    return std::hash<std::int64_t>{}(k.cx * 0x9E3779B97F4A7C15LL ^ k.cy);
  }
};

CellKey cell_of(Vec2 p, double cell) {
  return {static_cast<std::int64_t>(std::floor(p.x / cell)), static_cast<std::int64_t>(std::floor(p.y / cell))};
}

// Active-set sweep over frames for a set of samplers.
class ActiveSweep {
 public:
  explicit ActiveSweep(const std::vector<FrameSampler>& s) : s_(s) {
    order_.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) order_[i] = i;
    std::sort(order_.begin(), order_.end(),
              [&](std::size_t a, std::size_t b) { return s_[a].first_frame() < s_[b].first_frame(); });
  }

  const std::vector<std::size_t>& at(std::int64_t frame) {
    while (next_ < order_.size() && s_[order_[next_]].first_frame() <= frame) active_.push_back(order_[next_++]);
    std::erase_if(active_, [&](std::size_t i) { return s_[i].last_frame() < frame; });
    return active_;
  }

 private:
  const std::vector<FrameSampler>& s_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> active_;
  std::size_t next_ = 0;
};

}  // namespace

std::vector<InteractionEvent> find_interactions(const DatasetBundle& bundle, double threshold_m) {
  if (!(threshold_m > 0.0)) throw config_error("interaction threshold must be > 0");
  std::vector<InteractionEvent> events;
  for (const auto& range : scene_ranges(bundle)) {
    std::vector<const Track*> peds, vehs;
    for (auto i = range.begin; i < range.end; ++i) {
      const auto& t = bundle.tracks[i];
      if (t.kind == AgentKind::Pedestrian) peds.push_back(&t);
      if (t.kind == AgentKind::Vehicle) vehs.push_back(&t);
    }
    if (peds.empty() || vehs.empty()) continue;
    std::vector<FrameSampler> ps, vs;
    for (const auto* t : peds) ps.emplace_back(*t);
    for (const auto* t : vehs) vs.emplace_back(*t);

    std::int64_t lo = ps.front().first_frame(), hi = ps.front().last_frame();
    for (const auto& s : ps) {
      lo = std::min(lo, s.first_frame());
      hi = std::max(hi, s.last_frame());
    }
    ActiveSweep ped_sweep(ps), veh_sweep(vs);
    std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid;
    // (ped, veh) -> index of that pair's most recent event
    std::unordered_map<std::uint64_t, std::size_t> open;
    std::vector<std::tuple<std::size_t, std::size_t, std::int64_t, std::int64_t>> spans;
    const double t2 = threshold_m * threshold_m;

    for (auto f = lo; f <= hi; ++f) {
      const auto& active_peds = ped_sweep.at(f);
      const auto& active_vehs = veh_sweep.at(f);
      if (active_peds.empty() || active_vehs.empty()) continue;
      grid.clear();
      for (auto v : active_vehs) grid[cell_of(vs[v].position(f), threshold_m)].push_back(v);
      for (auto p : active_peds) {
        const Vec2 pp = ps[p].position(f);
        const auto c = cell_of(pp, threshold_m);
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          for (std::int64_t dy = -1; dy <= 1; ++dy) {
            const auto it = grid.find({c.cx + dx, c.cy + dy});
            if (it == grid.end()) continue;
            for (auto v : it->second) {
              const Vec2 d = vs[v].position(f) - pp;
              if (d.x * d.x + d.y * d.y >= t2) continue;
              const std::uint64_t key = (static_cast<std::uint64_t>(p) << 32) | v;
              auto o = open.find(key);
              if (o != open.end() && std::get<3>(spans[o->second]) == f - 1) {
                std::get<3>(spans[o->second]) = f;
              } else {
                open[key] = spans.size();
                spans.emplace_back(p, v, f, f);
              }
            }
          }
        }
      }
    }
    const auto& scene_id = bundle.tracks[range.begin].scene_id;
    std::vector<InteractionEvent> scene_events;
    scene_events.reserve(spans.size());
    for (const auto& [p, v, a, b] : spans) {
      InteractionEvent ev;
      ev.scene_id = scene_id;
      ev.ped_id = peds[p]->agent_id;
      ev.veh_id = vehs[v]->agent_id;
      ev.first_frame = a;
      ev.last_frame = b;
      scene_events.push_back(std::move(ev));
    }
    std::sort(scene_events.begin(), scene_events.end(), [](const auto& x, const auto& y) {
      return std::tie(x.ped_id, x.veh_id, x.first_frame) < std::tie(y.ped_id, y.veh_id, y.first_frame);
    });
    events.insert(events.end(), std::make_move_iterator(scene_events.begin()),
                  std::make_move_iterator(scene_events.end()));
  }
  return events;
}

std::optional<double> approach_angle(const InteractionEvent& ev, const FrameSampler& ped,
                                     const FrameSampler& veh) {
  const Vec2 a = ped.position(ev.last_frame) - ped.position(ev.first_frame);
  const Vec2 b = veh.position(ev.last_frame) - veh.position(ev.first_frame);
  if ((a.x == 0.0 && a.y == 0.0) || (b.x == 0.0 && b.y == 0.0)) return std::nullopt;
  return std::atan2(std::fabs(cross(a, b)), dot(a, b)) * 180.0 / std::numbers::pi;
}

std::optional<Crossing> crossing_priority(const InteractionEvent& ev, const FrameSampler& ped,
                                          const FrameSampler& veh, double frame_rate_hz) {
  std::optional<Crossing> best;
  for (auto i = ev.first_frame; i < ev.last_frame; ++i) {
    const Vec2 p0 = ped.position(i);
    const Vec2 r = ped.position(i + 1) - p0;
    const double pminx = std::min(p0.x, p0.x + r.x), pmaxx = std::max(p0.x, p0.x + r.x);
    const double pminy = std::min(p0.y, p0.y + r.y), pmaxy = std::max(p0.y, p0.y + r.y);
    for (auto j = ev.first_frame; j < ev.last_frame; ++j) {
      const Vec2 q0 = veh.position(j);
      const Vec2 s = veh.position(j + 1) - q0;
      if (std::max(q0.x, q0.x + s.x) < pminx || std::min(q0.x, q0.x + s.x) > pmaxx ||
          std::max(q0.y, q0.y + s.y) < pminy || std::min(q0.y, q0.y + s.y) > pmaxy) {
        continue;
      }
      const double denom = cross(r, s);
      if (denom == 0.0) continue;
      const Vec2 qp = q0 - p0;
      const double t = cross(qp, s) / denom;
      const double u = cross(qp, r) / denom;
      if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) continue;
      const double ped_time = (static_cast<double>(i) + t) / frame_rate_hz;
      const double veh_time = (static_cast<double>(j) + u) / frame_rate_hz;
      if (best && std::tie(best->ped_time_s, best->veh_time_s) <= std::tie(ped_time, veh_time)) continue;
      best = Crossing{p0 + t * r, ped_time, veh_time,
                      ped_time < veh_time ? Priority::PedestrianFirst : Priority::VehicleFirst};
    }
  }
  return best;
}

void annotate_interactions(std::vector<InteractionEvent>& events, const DatasetBundle& bundle) {
  auto find_track = [&](const std::string& scene, const std::string& agent) -> const Track& {
    auto it = std::lower_bound(bundle.tracks.begin(), bundle.tracks.end(), std::tie(scene, agent),
                               [](const Track& t, const auto& key) {
                                 return std::tie(t.scene_id, t.agent_id) < key;
                               });
    if (it == bundle.tracks.end() || it->scene_id != scene || it->agent_id != agent) {
      throw reference_error("event references unknown agent '" + agent + "' in scene '" + scene + "'");
    }
    return *it;
  };
  std::unordered_map<const Track*, FrameSampler> cache;
  auto sampler = [&](const Track& t) -> const FrameSampler& {
    auto it = cache.find(&t);
    if (it == cache.end()) it = cache.emplace(&t, FrameSampler(t)).first;
    return it->second;
  };
  for (auto& ev : events) {
    const auto& ps = sampler(find_track(ev.scene_id, ev.ped_id));
    const auto& vs = sampler(find_track(ev.scene_id, ev.veh_id));
    ev.approach_angle_deg = approach_angle(ev, ps, vs);
    ev.crossing = crossing_priority(ev, ps, vs, bundle.scene(ev.scene_id).frame_rate_hz);
  }
}

std::size_t approach_bin(double angle_deg) {
  const double k = std::floor(angle_deg / 10.0);
  if (k < 0.0) return 0;
  return std::min<std::size_t>(static_cast<std::size_t>(k), 17);
}

double approach_entropy(const std::vector<InteractionEvent>& events) {
  std::array<std::size_t, 18> counts{};
  std::size_t n = 0;
  for (const auto& ev : events) {
    if (!ev.approach_angle_deg) continue;
    ++counts[approach_bin(*ev.approach_angle_deg)];
    ++n;
  }
  if (n == 0) throw data_error("approach entropy needs at least one defined approach angle");
  return histogram_entropy(counts);
}

std::optional<double> priority_ratio(const std::vector<InteractionEvent>& events) {
  std::size_t crossings = 0, ped_first = 0;
  for (const auto& ev : events) {
    if (!ev.crossing) continue;
    ++crossings;
    if (ev.crossing->winner == Priority::PedestrianFirst) ++ped_first;
  }
  if (crossings == 0) return std::nullopt;
  return static_cast<double>(ped_first) / static_cast<double>(crossings);
}

double v2p_ratio(const DatasetBundle& bundle, const std::string& dataset_id) {
  double sum = 0.0;
  std::size_t frames = 0;
  for (const auto& range : scene_ranges(bundle)) {
    const auto& meta = bundle.scene(bundle.tracks[range.begin].scene_id);
    if (meta.dataset_id != dataset_id) continue;
    std::int64_t lo = 0, hi = -1;
    bool any = false;
    for (auto i = range.begin; i < range.end; ++i) {
      const auto& t = bundle.tracks[i];
      if (t.kind != AgentKind::Pedestrian) continue;
      lo = any ? std::min(lo, t.first_frame()) : t.first_frame();
      hi = any ? std::max(hi, t.last_frame()) : t.last_frame();
      any = true;
    }
    if (!any) continue;
    const auto n = static_cast<std::size_t>(hi - lo + 1);
    std::vector<std::size_t> ped(n, 0), veh(n, 0);
    for (auto i = range.begin; i < range.end; ++i) {
      const auto& t = bundle.tracks[i];
      auto* counts = t.kind == AgentKind::Pedestrian ? &ped : t.kind == AgentKind::Vehicle ? &veh : nullptr;
      if (!counts) continue;
      for (auto f = std::max(lo, t.first_frame()); f <= std::min(hi, t.last_frame()); ++f) {
        ++(*counts)[static_cast<std::size_t>(f - lo)];
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (ped[k] == 0) continue;
      sum += static_cast<double>(veh[k]) / static_cast<double>(ped[k]);
      ++frames;
    }
  }
  if (frames == 0) throw data_error("dataset '" + dataset_id + "' has no frame with a pedestrian");
  return sum / static_cast<double>(frames);
}

InteractionFeatureSet compute_interaction_features(const DatasetBundle& bundle, const Thresholds& th) {
  InteractionFeatureSet out;
  out.events = find_interactions(bundle, th.interaction_m);
  annotate_interactions(out.events, bundle);
  std::map<std::string, std::vector<InteractionEvent>> per_dataset;
  for (const auto& ds : bundle.dataset_ids()) per_dataset[ds];
  for (const auto& ev : out.events) per_dataset[bundle.scene(ev.scene_id).dataset_id].push_back(ev);
  for (const auto& [ds, evs] : per_dataset) {
    InteractionFeatures f;
    f.events = evs.size();
    for (const auto& ev : evs) {
      if (ev.approach_angle_deg) ++f.defined_angles;
      if (ev.crossing) ++f.crossings;
    }
    if (f.defined_angles > 0) f.approach_entropy = approach_entropy(evs);
    f.priority_ratio = priority_ratio(evs);
    try {
      f.v2p_ratio = v2p_ratio(bundle, ds);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Data) throw;
    }
    out.by_dataset[ds] = f;
  }
  return out;
}

}  // namespace envclass
