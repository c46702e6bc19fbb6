#pragma once

// Pedestrian-vehicle interaction episodes and the three dataset-level
// interaction features.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "envclass/kinematics.hpp"
#include "envclass/thresholds.hpp"
#include "envclass/trajstore.hpp"

namespace envclass {

enum class Priority { PedestrianFirst, VehicleFirst };

struct Crossing {
  Vec2 point;
  double ped_time_s = 0.0;
  double veh_time_s = 0.0;
  Priority winner = Priority::VehicleFirst;
};

// A maximal run of consecutive frames on which the pair is closer than the
// interaction threshold. Positions inside annotation gaps are interpolated.
struct InteractionEvent {
  std::string scene_id;
  std::string ped_id;
  std::string veh_id;
  std::int64_t first_frame = 0;
  std::int64_t last_frame = 0;
  std::optional<double> approach_angle_deg;
  std::optional<Crossing> crossing;
};

// Proximity episodes of every (pedestrian, vehicle) pair, ordered by
// (scene_id, ped_id, veh_id, first_frame). Uses a uniform grid of
// threshold-sized cells per frame; equivalent to the all-pairs scan.
std::vector<InteractionEvent> find_interactions(const DatasetBundle& bundle, double threshold_m = 4.0);

// Unsigned angle in degrees, [0, 180], between the two agents' first->last
// displacements over the event span. nullopt when either displacement is 0.
std::optional<double> approach_angle(const InteractionEvent& ev, const FrameSampler& ped,
                                     const FrameSampler& veh);

// Intersects the two per-frame polylines over the event span. The earliest
// intersection by pedestrian arrival time decides; arrival times are linear
// interpolations along the intersecting segments. Equal arrival times count
// as vehicle first. Parallel segments never intersect.
std::optional<Crossing> crossing_priority(const InteractionEvent& ev, const FrameSampler& ped,
                                          const FrameSampler& veh, double frame_rate_hz);

// Fills approach_angle_deg and crossing of every event.
void annotate_interactions(std::vector<InteractionEvent>& events, const DatasetBundle& bundle);

// 18 bins of 10 degrees over [0, 180]; 180 itself falls in the last bin.
std::size_t approach_bin(double angle_deg);

// Entropy (nats) over events with a defined angle; throws a data error when
// there are none.
double approach_entropy(const std::vector<InteractionEvent>& events);

// Fraction of crossings won by the pedestrian; nullopt without crossings.
std::optional<double> priority_ratio(const std::vector<InteractionEvent>& events);

// Mean over frames with >= 1 pedestrian present of vehicles/pedestrians.
// Frames without pedestrians are skipped. Throws when no frame qualifies.
double v2p_ratio(const DatasetBundle& bundle, const std::string& dataset_id);

struct InteractionFeatures {
  std::optional<double> approach_entropy;
  std::optional<double> priority_ratio;
  std::optional<double> v2p_ratio;
  std::size_t events = 0;
  std::size_t defined_angles = 0;
  std::size_t crossings = 0;
};

struct InteractionFeatureSet {
  std::vector<InteractionEvent> events;  // annotated
  std::map<std::string, InteractionFeatures> by_dataset;
};

InteractionFeatureSet compute_interaction_features(const DatasetBundle& bundle, const Thresholds& th = {});

}  // namespace envclass
