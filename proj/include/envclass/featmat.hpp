#pragma once

// The per-pedestrian 13-feature matrix: assembly, 1.5 x IQR outlier removal,
// z-score standardization and centering.

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "envclass/interact.hpp"
#include "envclass/pedfeat.hpp"
#include "envclass/vehfeat.hpp"

namespace envclass {

inline constexpr std::size_t kFeatureCount = 13;

// Column order of every feature row.
enum Feature : std::size_t {
  kMeanSpeed = 0,
  kStopFraction,
  kVariability,
  kPathEfficiency,
  kOrientationEntropy,
  kAvgDensity,
  kAvgStandingDensity,
  kVehMeanSpeed,
  kVehStopFraction,
  kVehVariability,
  kApproachEntropy,
  kPriorityRatio,
  kV2pRatio,
};

const std::array<std::string_view, kFeatureCount>& feature_names();

// The seven pedestrian columns, candidates for the GLM.
inline constexpr std::array<Feature, 7> kPedestrianFeatures = {
    kMeanSpeed, kStopFraction, kVariability, kPathEfficiency, kOrientationEntropy, kAvgDensity, kAvgStandingDensity};

using FeatureVector = std::array<double, kFeatureCount>;

struct FeatureRow {
  std::string dataset_id;
  std::string scene_id;
  std::string agent_id;
  FeatureVector values{};
};

struct ColumnStats {
  double mean = 0.0;
  double sd = 0.0;  // sample sd; exactly 0 for a constant column
  double q1 = 0.0;
  double q3 = 0.0;
};

using ColumnStatsArray = std::array<ColumnStats, kFeatureCount>;

struct FeatureMatrix {
  std::vector<FeatureRow> rows;
  ColumnStatsArray column_stats{};  // of the matrix these rows were derived from

  std::vector<double> column(std::size_t j) const;
};

ColumnStatsArray compute_column_stats(const std::vector<FeatureRow>& rows);

struct ExcludedDataset {
  std::string dataset_id;
  std::string reason;
};

struct AssembledMatrix {
  FeatureMatrix matrix;
  std::vector<ExcludedDataset> excluded;
};

// One row per non-stationary pedestrian. Orientation entropy, vehicle means
// and interaction features are dataset-level and broadcast onto every row of
// the dataset. Datasets lacking any of them are excluded and reported.
AssembledMatrix assemble(const PedestrianFeatureSet& peds, const VehicleFeatureSet& vehs,
                         const InteractionFeatureSet& inter);

struct Fence {
  double lower = 0.0;
  double upper = 0.0;
};

using FenceArray = std::array<Fence, kFeatureCount>;

struct OutlierResult {
  FeatureMatrix matrix;
  std::vector<FeatureRow> dropped;
  // Keyed by dataset_id when fences are per dataset, otherwise one entry "".
  std::map<std::string, FenceArray> fences;
};

// Single pass: a row is dropped when any entry lies outside
// [Q1 - 1.5 IQR, Q3 + 1.5 IQR] of its column. Quantiles interpolate linearly.
// Fences come from the combined matrix, or from each dataset's own rows when
// per_dataset is set. Requires >= 4 rows; throws if nothing survives.
OutlierResult remove_outliers(const FeatureMatrix& matrix, bool per_dataset = false);

// Z-scores with the matrix's own column stats (constant columns become 0).
// The result's column_stats are the stats of the input.
FeatureMatrix standardize(const FeatureMatrix& matrix);

// Z-scores with externally supplied stats, e.g. those stored in a model.
FeatureMatrix apply_standardization(const FeatureMatrix& matrix, const ColumnStatsArray& stats);

// Subtracts each column mean.
FeatureMatrix center(const FeatureMatrix& matrix);

// CSV with header dataset_id,scene_id,agent_id,<13 feature names>.
void write_matrix_csv(const FeatureMatrix& matrix, std::ostream& out);
FeatureMatrix read_matrix_csv(std::istream& in, const std::string& source_name);

// JSON sidecar: column stats, fences and dropped rows.
std::string matrix_sidecar_json(const FeatureMatrix& matrix, const OutlierResult* outliers,
                                const std::vector<ExcludedDataset>& excluded);

}  // namespace envclass
