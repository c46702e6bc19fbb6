#pragma once

// Velocity, trajlet and path-geometry primitives shared by the feature modules.
// All functions are pure.

#include <optional>
#include <span>
#include <vector>

#include "envclass/trajstore.hpp"

namespace envclass {

inline constexpr double kDefaultTrajletSeconds = 4.8;

struct SpeedSample {
  double time_s;  // time of the leading point
  double speed;   // m/s, >= 0
};

struct SpeedSeries {
  std::vector<SpeedSample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Forward differences: |p[i+1] - p[i]| / (t[i+1] - t[i]). Frame gaps divide by
// the actual elapsed time. Throws on fewer than 2 points or non-increasing time.
SpeedSeries speed_series(std::span<const TrackPoint> points);
inline SpeedSeries speed_series(const Track& track) { return speed_series(track.points); }

// A contiguous view into a parent track. Consecutive trajlets share their
// boundary point, so durations add up to the parent's duration.
struct Trajlet {
  std::span<const TrackPoint> points;

  double duration() const { return points.back().time_s - points.front().time_s; }
};

// Greedy left-to-right windows of duration <= window_s. Because boundaries are
// shared, the trailing remainder always has >= 2 points and is kept as its own
// trajlet. A frame gap longer than the window yields a two-point trajlet
// spanning the gap.
std::vector<Trajlet> split_trajlets(std::span<const TrackPoint> points,
                                    double window_s = kDefaultTrajletSeconds);

double path_length(std::span<const TrackPoint> points);
double endpoint_distance(std::span<const TrackPoint> points);

// atan2 of the first->last displacement, in [-pi, pi). nullopt when the
// displacement is zero.
std::optional<double> heading_angle(std::span<const TrackPoint> points);

// Dense per-frame view of one track over [first_frame, last_frame]. Positions
// inside frame gaps are linearly interpolated; the speed at a frame is the
// forward-difference speed of the segment that covers it (the final frame
// reuses the last segment).
class FrameSampler {
 public:
  explicit FrameSampler(const Track& track);

  std::int64_t first_frame() const { return first_; }
  std::int64_t last_frame() const { return first_ + static_cast<std::int64_t>(pos_.size()) - 1; }
  bool covers(std::int64_t frame) const { return frame >= first_ && frame <= last_frame(); }
  Vec2 position(std::int64_t frame) const { return pos_[static_cast<std::size_t>(frame - first_)]; }
  double speed(std::int64_t frame) const { return speed_[static_cast<std::size_t>(frame - first_)]; }

 private:
  std::int64_t first_ = 0;
  std::vector<Vec2> pos_;
  std::vector<double> speed_;
};

}  // namespace envclass
