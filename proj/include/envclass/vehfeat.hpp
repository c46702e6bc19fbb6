#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "envclass/thresholds.hpp"
#include "envclass/trajstore.hpp"

namespace envclass {

struct VehicleFeatures {
  std::string dataset_id;
  std::string scene_id;
  std::string agent_id;
  double mean_speed = 0.0;
  double stop_fraction = 0.0;
  double variability = 0.0;
};

// nullopt when the vehicle is parked (mean speed < th.parked_mps). Stop
// fraction uses the vehicle threshold th.veh_stop_mps.
std::optional<VehicleFeatures> vehicle_features(const Track& track, const Thresholds& th = {});

struct VehicleMeans {
  double mean_speed = 0.0;
  double stop_fraction = 0.0;
  double variability = 0.0;
  std::size_t vehicles = 0;
};

// Unweighted means over the given (non-parked) vehicles. Throws a data error
// when the list is empty: the dataset cannot join the clustering.
VehicleMeans vehicle_means(const std::vector<VehicleFeatures>& vehicles);

struct VehicleFeatureSet {
  std::vector<VehicleFeatures> rows;                // non-parked vehicles
  std::map<std::string, std::size_t> parked_count;  // by dataset_id
};

VehicleFeatureSet compute_vehicle_features(const DatasetBundle& bundle, const Thresholds& th = {});

// Per-dataset means of the non-parked vehicles of one dataset.
VehicleMeans dataset_vehicle_means(const DatasetBundle& bundle, const std::string& dataset_id,
                                   const Thresholds& th = {});

}  // namespace envclass
