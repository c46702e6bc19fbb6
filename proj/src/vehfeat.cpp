#include "envclass/vehfeat.hpp"

#include "envclass/error.hpp"
#include "envclass/kinematics.hpp"
#include "envclass/pedfeat.hpp"

namespace envclass {

std::optional<VehicleFeatures> vehicle_features(const Track& track, const Thresholds& th) {
  const auto ss = speed_series(track);
  const double mv = mean_speed(ss);
  if (mv < th.parked_mps) return std::nullopt;
  VehicleFeatures f;
  f.scene_id = track.scene_id;
  f.agent_id = track.agent_id;
  f.mean_speed = mv;
  f.stop_fraction = stop_fraction(ss, th.veh_stop_mps);
  f.variability = variability(ss);
  return f;
}

VehicleMeans vehicle_means(const std::vector<VehicleFeatures>& vehicles) {
  if (vehicles.empty()) {
    throw data_error("no moving vehicles; exclude this dataset from clustering");
  }
  VehicleMeans m;
  for (const auto& v : vehicles) {
    m.mean_speed += v.mean_speed;
    m.stop_fraction += v.stop_fraction;
    m.variability += v.variability;
  }
  const auto n = static_cast<double>(vehicles.size());
  m.mean_speed /= n;
  m.stop_fraction /= n;
  m.variability /= n;
  m.vehicles = vehicles.size();
  return m;
}

VehicleFeatureSet compute_vehicle_features(const DatasetBundle& bundle, const Thresholds& th) {
  VehicleFeatureSet out;
  for (const auto& ds : bundle.dataset_ids()) out.parked_count[ds] = 0;
  for (const auto& t : bundle.tracks) {
    if (t.kind != AgentKind::Vehicle) continue;
    const auto& meta = bundle.scene(t.scene_id);
    if (auto f = vehicle_features(t, th)) {
      f->dataset_id = meta.dataset_id;
      out.rows.push_back(std::move(*f));
    } else {
      ++out.parked_count[meta.dataset_id];
    }
  }
  return out;
}

VehicleMeans dataset_vehicle_means(const DatasetBundle& bundle, const std::string& dataset_id,
                                   const Thresholds& th) {
  std::vector<VehicleFeatures> mine;
  for (auto& v : compute_vehicle_features(bundle, th).rows) {
    if (v.dataset_id == dataset_id) mine.push_back(std::move(v));
  }
  if (mine.empty()) {
    throw data_error("dataset '" + dataset_id + "' has no moving vehicles; exclude it from clustering");
  }
  return vehicle_means(mine);
}

}  // namespace envclass
