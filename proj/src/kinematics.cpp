#include "envclass/kinematics.hpp"

#include <cmath>
#include <numbers>

#include "envclass/error.hpp"

namespace envclass {

namespace {
// Frame-derived times carry rounding noise; window edges compare with slack.
constexpr double kTimeSlack = 1e-9;
}  // namespace

SpeedSeries speed_series(std::span<const TrackPoint> points) {
  if (points.size() < 2) throw invariant_error("speed series needs at least 2 points");
  SpeedSeries ss;
  ss.samples.reserve(points.size() - 1);
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double dt = points[i + 1].time_s - points[i].time_s;
    if (!(dt > 0.0)) throw invariant_error("timestamps are not strictly increasing");
    ss.samples.push_back({points[i].time_s, (points[i + 1].position - points[i].position).norm() / dt});
  }
  return ss;
}

std::vector<Trajlet> split_trajlets(std::span<const TrackPoint> points, double window_s) {
  if (points.size() < 2) throw invariant_error("trajlet split needs at least 2 points");
  if (!(window_s > 0.0)) throw config_error("trajlet window must be > 0");
  std::vector<Trajlet> out;
  std::size_t start = 0;
  const std::size_t last = points.size() - 1;
  while (start < last) {
    std::size_t end = start + 1;
    while (end < last && points[end + 1].time_s - points[start].time_s <= window_s + kTimeSlack) ++end;
    out.push_back({points.subspan(start, end - start + 1)});
    start = end;
  }
  return out;
}

double path_length(std::span<const TrackPoint> points) {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) len += (points[i + 1].position - points[i].position).norm();
  return len;
}

double endpoint_distance(std::span<const TrackPoint> points) {
  if (points.empty()) return 0.0;
  return (points.back().position - points.front().position).norm();
}

std::optional<double> heading_angle(std::span<const TrackPoint> points) {
  if (points.size() < 2) return std::nullopt;
  const Vec2 d = points.back().position - points.front().position;
  if (d.x == 0.0 && d.y == 0.0) return std::nullopt;
  double a = std::atan2(d.y, d.x);
  if (a >= std::numbers::pi) a = -std::numbers::pi;
  return a;
}

FrameSampler::FrameSampler(const Track& track) {
  const auto& pts = track.points;
  if (pts.size() < 2) throw invariant_error("frame sampler needs at least 2 points");
  first_ = pts.front().frame;
  const auto n = static_cast<std::size_t>(pts.back().frame - first_ + 1);
  pos_.resize(n);
  speed_.resize(n);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[i + 1];
    const double dt = b.time_s - a.time_s;
    if (!(dt > 0.0)) throw invariant_error("timestamps are not strictly increasing");
    const double v = (b.position - a.position).norm() / dt;
    const auto span = static_cast<double>(b.frame - a.frame);
    for (auto f = a.frame; f < b.frame; ++f) {
      const double u = static_cast<double>(f - a.frame) / span;
      const auto k = static_cast<std::size_t>(f - first_);
      pos_[k] = u == 0.0 ? a.position : a.position + u * (b.position - a.position);
      speed_[k] = v;
    }
  }
  pos_.back() = pts.back().position;
  speed_.back() = speed_.size() > 1 ? speed_[speed_.size() - 2] : 0.0;
}

}  // namespace envclass
