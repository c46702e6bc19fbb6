#pragma once

// Per-pedestrian motion features and the dataset-level path orientation
// distribution.

#include <array>
#include <map>
#include <string>
#include <vector>

#include "envclass/kinematics.hpp"
#include "envclass/thresholds.hpp"
#include "envclass/trajstore.hpp"

namespace envclass {

double mean_speed(const SpeedSeries& ss);

// Fraction of samples with speed strictly below `threshold`.
double stop_fraction(const SpeedSeries& ss, double threshold);

// Trace of the speed covariance: (1/n) sum_t (v_t - mean)^2.
double variability(const SpeedSeries& ss);

// True iff stop_fraction(ss, stop_threshold) > fraction.
bool is_stationary(const SpeedSeries& ss, double stop_threshold = 0.5, double fraction = 0.9);

// Sum of trajlet endpoint distances over sum of trajlet path lengths; 1 when
// the track never moves.
double path_efficiency(const Track& track, double window_s = kDefaultTrajletSeconds);

// 36 bins of 10 degrees over [-180, 180).
struct OrientationDistribution {
  static constexpr std::size_t kBins = 36;

  std::array<std::size_t, kBins> counts{};
  std::size_t total = 0;

  static std::size_t bin_of(double heading_rad);
  void add(double heading_rad);
  void merge(const OrientationDistribution& other);
};

// Shannon entropy (nats) of the distribution. Throws when it is empty.
double orientation_entropy(const OrientationDistribution& dist);

// Per-frame pedestrian counts of one scene. A pedestrian is present on every
// frame of its [first, last] span and standing when its instantaneous speed
// is below the stop threshold.
class SceneDensityIndex {
 public:
  SceneDensityIndex(const std::vector<const Track*>& scene_tracks, const SceneMeta& meta,
                    double stop_threshold = 0.5);

  std::size_t present(std::int64_t frame) const;
  std::size_t standing(std::int64_t frame) const;
  double area_m2() const { return area_; }

 private:
  std::int64_t first_ = 0;
  std::vector<std::size_t> present_;
  std::vector<std::size_t> standing_;
  double area_ = 1.0;
};

struct DensityFeatures {
  double avg_density = 0.0;           // pedestrians / m^2
  double avg_standing_density = 0.0;  // standing pedestrians / m^2
};

// Time-averages of the scene's pedestrian densities over the subject's frames.
DensityFeatures density_features(const Track& subject, const SceneDensityIndex& index);

struct PedestrianFeatures {
  std::string dataset_id;
  std::string scene_id;
  std::string agent_id;
  double mean_speed = 0.0;
  double stop_fraction = 0.0;
  double variability = 0.0;
  double path_efficiency = 1.0;
  double avg_density = 0.0;
  double avg_standing_density = 0.0;
};

struct PedestrianFeatureSet {
  std::vector<PedestrianFeatures> rows;  // non-stationary pedestrians only
  std::map<std::string, OrientationDistribution> orientation;  // by dataset_id
  std::map<std::string, std::size_t> stationary_count;         // by dataset_id
};

PedestrianFeatureSet compute_pedestrian_features(const DatasetBundle& bundle, const Thresholds& th = {});

}  // namespace envclass
