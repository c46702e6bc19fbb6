#pragma once

namespace envclass {

// Scalar constants of the feature definitions. Defaults are the standard
// values; every one can be overridden from the run configuration.
struct Thresholds {
  double ped_stop_mps = 0.5;          // pedestrian "stopped" below this speed
  double veh_stop_mps = 1.0;          // vehicle "stopped" below this speed
  double parked_mps = 0.5;            // vehicle mean speed below this => parked
  double stationary_fraction = 0.9;   // pedestrian stop fraction above this => stationary
  double interaction_m = 4.0;         // pedestrian-vehicle proximity for an interaction
  double trajlet_s = 4.8;             // trajlet window

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

}  // namespace envclass
