#include "envclass/pedfeat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "envclass/error.hpp"
#include "envclass/stats.hpp"

namespace envclass {

double mean_speed(const SpeedSeries& ss) {
  if (ss.empty()) throw data_error("mean speed of an empty series");
  double s = 0.0;
  for (const auto& x : ss.samples) s += x.speed;
  return s / static_cast<double>(ss.size());
}

double stop_fraction(const SpeedSeries& ss, double threshold) {
  if (ss.empty()) throw data_error("stop fraction of an empty series");
  const auto stopped = std::count_if(ss.samples.begin(), ss.samples.end(),
                                     [&](const SpeedSample& s) { return s.speed < threshold; });
  return static_cast<double>(stopped) / static_cast<double>(ss.size());
}

double variability(const SpeedSeries& ss) {
  const double m = mean_speed(ss);
  double acc = 0.0;
  for (const auto& x : ss.samples) acc += (x.speed - m) * (x.speed - m);
  return acc / static_cast<double>(ss.size());
}

bool is_stationary(const SpeedSeries& ss, double stop_threshold, double fraction) {
  return stop_fraction(ss, stop_threshold) > fraction;
}

double path_efficiency(const Track& track, double window_s) {
  double endpoints = 0.0;
  double length = 0.0;
  for (const auto& t : split_trajlets(track.points, window_s)) {
    endpoints += endpoint_distance(t.points);
    length += path_length(t.points);
  }
  if (length == 0.0) return 1.0;
  return endpoints / length;
}

std::size_t OrientationDistribution::bin_of(double heading_rad) {
  const double width = 2.0 * std::numbers::pi / static_cast<double>(kBins);
  // +pi is the same direction as -pi.
  const double h = heading_rad >= std::numbers::pi ? heading_rad - 2.0 * std::numbers::pi : heading_rad;
  const double k = std::floor((h + std::numbers::pi) / width);
  if (k < 0.0) return 0;
  return std::min(static_cast<std::size_t>(k), kBins - 1);
}

void OrientationDistribution::add(double heading_rad) {
  ++counts[bin_of(heading_rad)];
  ++total;
}

void OrientationDistribution::merge(const OrientationDistribution& other) {
  for (std::size_t i = 0; i < kBins; ++i) counts[i] += other.counts[i];
  total += other.total;
}

double orientation_entropy(const OrientationDistribution& dist) {
  if (dist.total == 0) throw data_error("orientation entropy needs at least one defined heading");
  return histogram_entropy(dist.counts);
}

SceneDensityIndex::SceneDensityIndex(const std::vector<const Track*>& scene_tracks, const SceneMeta& meta,
                                     double stop_threshold)
    : area_(meta.area_m2) {
  if (!(meta.area_m2 > 0.0)) throw config_error("scene '" + meta.scene_id + "': area must be > 0");
  std::int64_t lo = 0, hi = -1;
  bool any = false;
  for (const auto* t : scene_tracks) {
    if (t->kind != AgentKind::Pedestrian) continue;
    lo = any ? std::min(lo, t->first_frame()) : t->first_frame();
    hi = any ? std::max(hi, t->last_frame()) : t->last_frame();
    any = true;
  }
  first_ = lo;
  const auto n = any ? static_cast<std::size_t>(hi - lo + 1) : 0;
  present_.assign(n, 0);
  standing_.assign(n, 0);
  for (const auto* t : scene_tracks) {
    if (t->kind != AgentKind::Pedestrian) continue;
    const FrameSampler s(*t);
    for (auto f = s.first_frame(); f <= s.last_frame(); ++f) {
      const auto k = static_cast<std::size_t>(f - first_);
      ++present_[k];
      if (s.speed(f) < stop_threshold) ++standing_[k];
    }
  }
}

std::size_t SceneDensityIndex::present(std::int64_t frame) const {
  if (frame < first_ || frame - first_ >= static_cast<std::int64_t>(present_.size())) return 0;
  return present_[static_cast<std::size_t>(frame - first_)];
}

std::size_t SceneDensityIndex::standing(std::int64_t frame) const {
  if (frame < first_ || frame - first_ >= static_cast<std::int64_t>(standing_.size())) return 0;
  return standing_[static_cast<std::size_t>(frame - first_)];
}

DensityFeatures density_features(const Track& subject, const SceneDensityIndex& index) {
  double all = 0.0, standing = 0.0;
  const auto first = subject.first_frame();
  const auto last = subject.last_frame();
  for (auto f = first; f <= last; ++f) {
    all += static_cast<double>(index.present(f));
    standing += static_cast<double>(index.standing(f));
  }
  const double frames = static_cast<double>(last - first + 1);
  return {all / frames / index.area_m2(), standing / frames / index.area_m2()};
}

PedestrianFeatureSet compute_pedestrian_features(const DatasetBundle& bundle, const Thresholds& th) {
  PedestrianFeatureSet out;
  for (const auto& ds : bundle.dataset_ids()) {
    out.orientation[ds];
    out.stationary_count[ds] = 0;
  }
  // Tracks are sorted by scene, so each scene is one contiguous run.
  std::size_t i = 0;
  while (i < bundle.tracks.size()) {
    const auto& scene_id = bundle.tracks[i].scene_id;
    std::vector<const Track*> scene_tracks;
    for (; i < bundle.tracks.size() && bundle.tracks[i].scene_id == scene_id; ++i) {
      scene_tracks.push_back(&bundle.tracks[i]);
    }
    const auto& meta = bundle.scene(scene_id);
    const SceneDensityIndex index(scene_tracks, meta, th.ped_stop_mps);
    auto& orientation = out.orientation[meta.dataset_id];
    for (const auto* t : scene_tracks) {
      if (t->kind != AgentKind::Pedestrian) continue;
      const auto ss = speed_series(*t);
      if (is_stationary(ss, th.ped_stop_mps, th.stationary_fraction)) {
        ++out.stationary_count[meta.dataset_id];
        continue;
      }
      PedestrianFeatures f;
      f.dataset_id = meta.dataset_id;
      f.scene_id = scene_id;
      f.agent_id = t->agent_id;
      f.mean_speed = mean_speed(ss);
      f.stop_fraction = stop_fraction(ss, th.ped_stop_mps);
      f.variability = variability(ss);
      double endpoints = 0.0, length = 0.0;
      for (const auto& tl : split_trajlets(t->points, th.trajlet_s)) {
        endpoints += endpoint_distance(tl.points);
        length += path_length(tl.points);
        if (const auto h = heading_angle(tl.points)) orientation.add(*h);
      }
      f.path_efficiency = length == 0.0 ? 1.0 : endpoints / length;
      const auto d = density_features(*t, index);
      f.avg_density = d.avg_density;
      f.avg_standing_density = d.avg_standing_density;
      out.rows.push_back(std::move(f));
    }
  }
  return out;
}

}  // namespace envclass
