#pragma once

// Run configuration and the ingest -> features -> matrix -> cluster -> GLM
// chain used by the command-line tool. Every writer is deterministic: the same
// config and inputs give byte-identical files.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "envclass/cluster.hpp"
#include "envclass/featmat.hpp"
#include "envclass/glmfit.hpp"
#include "envclass/synthgen.hpp"
#include "envclass/thresholds.hpp"

namespace envclass {

struct InputSpec {
  std::string adapter = "normalized";  // normalized | sdd | generic | synth
  std::string path;                     // trajectory file
  std::string scenes;                   // scene metadata JSON
  std::string scene_id;                 // sdd/generic: which scene of `scenes` (optional if only one)
  std::string transform;                // sdd: 3x3 homography JSON (optional)
  std::string column_map;               // generic: column map JSON
  std::optional<RegimeParams> synth;    // adapter == synth
};

struct RunConfig {
  std::vector<InputSpec> inputs;
  Thresholds thresholds;
  std::uint64_t seed = 0;
  std::size_t restarts = 50;
  bool per_dataset_iqr = false;
  bool unstructured_is_one = true;
  std::string out = "envclass-out";
  std::string model;  // classify: fitted model JSON
};

// Relative paths are resolved against `base_dir`. Unknown keys are rejected.
RunConfig parse_run_config(std::string_view json_text, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& path);
// Canonical JSON (sorted keys, every default spelled out); hashed into the manifest.
std::string run_config_to_json(const RunConfig& cfg);

DatasetBundle load_inputs(const RunConfig& cfg);

struct FeatureStage {
  PedestrianFeatureSet peds;
  VehicleFeatureSet vehs;
  InteractionFeatureSet inter;
};
FeatureStage compute_features(const DatasetBundle& bundle, const Thresholds& th);

struct MatrixStage {
  AssembledMatrix assembled;
  OutlierResult outliers;
  FeatureMatrix standardized;
};
MatrixStage build_matrix(const FeatureStage& features, bool per_dataset_iqr);

struct ClusterStage {
  ClusterModel model;
  std::vector<ClusterLabel> row_labels;       // nearest centroid per matrix row
  std::vector<ClusterLabel> dataset_labels;   // each row's dataset majority
  std::vector<DatasetClusterShare> by_dataset;
  std::vector<DatasetClusterShare> by_scene;
};
ClusterStage run_clustering(const MatrixStage& matrix, std::uint64_t seed, std::size_t restarts);

// GLM of the dataset-majority labels on the pedestrian features.
SelectionResult run_selection(const MatrixStage& matrix, const ClusterStage& clusters, bool unstructured_is_one);

struct FeatureDiagnostic {
  std::string feature;
  double value = 0.0;       // mean over the new rows, raw units
  double centroid_a = 0.0;  // raw units
  double centroid_b = 0.0;
  ClusterLabel nearer = ClusterLabel::Unresolved;
};
struct ClassifyReport {
  ClusterLabel majority = ClusterLabel::Unresolved;
  std::size_t rows = 0;
  std::size_t rows_a = 0;
  std::size_t rows_b = 0;
  std::vector<DatasetClusterShare> by_dataset;
  std::vector<FeatureDiagnostic> diagnostics;
};
ClassifyReport classify_bundle(const ClusterModel& model, const DatasetBundle& bundle, const Thresholds& th);
std::string format_classify_report(const ClassifyReport& report);

// Command drivers. Each writes its outputs plus manifest.json into cfg.out and
// returns a short human-readable summary.
std::string cmd_features(const RunConfig& cfg);
std::string cmd_cluster(const RunConfig& cfg);
std::string cmd_glm(const RunConfig& cfg);
std::string cmd_classify(const RunConfig& cfg);
// `count` scenes with seeds params.seed, params.seed + 1, ...
std::string cmd_synth(const RegimeParams& params, std::size_t count, const std::string& out_dir);

}  // namespace envclass
