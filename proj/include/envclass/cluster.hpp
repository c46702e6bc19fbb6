#pragma once

// k-means over the standardized feature matrix, dataset majority labels and
// per-group summaries with 95% confidence intervals.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "envclass/featmat.hpp"

namespace envclass {

struct KMeansOptions {
  std::size_t k = 2;
  std::uint64_t seed = 0;
  std::size_t restarts = 50;
  std::size_t max_iterations = 300;
};

// Plain Lloyd result on an arbitrary point set.
struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignment;
  double inertia = 0.0;
  std::size_t iterations = 0;
  std::size_t restart = 0;             // index of the winning restart
  std::vector<double> inertia_trace;   // after each assignment step of the winner
};

// Best-inertia result over `restarts` k-means++ seedings (ties: lowest restart
// index). Lloyd iterations stop when assignments are stable or after
// max_iterations. An emptied cluster is reseeded at the point farthest from
// its centroid. Each restart then runs Hartigan single-point transfers until
// no move lowers the inertia. Deterministic for a fixed seed.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, const KMeansOptions& opt);

// Index of the nearest centroid; ties go to the lower index.
std::size_t nearest_centroid(const std::vector<std::vector<double>>& centroids, std::span<const double> x);

enum class ClusterLabel { A, B, Unresolved };
std::string_view to_string(ClusterLabel label);

struct ClusterModel {
  std::vector<std::string> columns;                  // feature names, in order
  std::vector<std::vector<double>> centroids;        // standardized space; [0] = A, [1] = B
  ColumnStatsArray column_stats{};                   // raw-space stats used to standardize
  double inertia = 0.0;
  std::uint64_t seed = 0;
  std::size_t restarts = 0;
  std::vector<double> inertia_trace;
};

// Fits k = 2 on a standardized matrix. Cluster A is the one whose centroid has
// the higher pedestrian stop fraction. Throws when rows < 2.
ClusterModel kmeans_fit(const FeatureMatrix& standardized, std::uint64_t seed, std::size_t restarts = 50,
                        std::size_t max_iterations = 300);

// Nearest-centroid labels for rows already standardized with the model stats.
std::vector<ClusterLabel> classify_standardized(const ClusterModel& model, const FeatureMatrix& standardized);

// Standardizes raw rows with the model stats, then assigns.
std::vector<ClusterLabel> classify(const ClusterModel& model, const FeatureMatrix& raw);

struct DatasetClusterShare {
  std::string dataset_id;
  std::size_t rows = 0;
  double fraction_a = 0.0;
  double fraction_b = 0.0;
  ClusterLabel majority = ClusterLabel::Unresolved;  // > 50% of rows, else Unresolved
};

// Per dataset (sorted by id); group_by_scene switches the grouping key.
std::vector<DatasetClusterShare> majority_labels(const FeatureMatrix& matrix, const std::vector<ClusterLabel>& labels,
                                                 bool group_by_scene = false);

// Every row relabelled with its dataset's majority label.
std::vector<ClusterLabel> propagate_majority(const FeatureMatrix& matrix, const std::vector<ClusterLabel>& labels);

struct FeatureSummary {
  std::string group;
  std::string feature;
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> half_width;  // 1.96 * sd / sqrt(n); needs n >= 2
};

// Mean and 95% CI half-width of every feature per group, in the units of
// `matrix`. Groups are visited in sorted order.
std::vector<FeatureSummary> group_summaries(const FeatureMatrix& matrix, const std::vector<std::string>& group_of_row);

// group_summaries keyed by cluster label; Unresolved rows are skipped.
std::vector<FeatureSummary> cluster_summaries(const FeatureMatrix& raw, const std::vector<ClusterLabel>& labels);

std::string model_to_json(const ClusterModel& model);
ClusterModel model_from_json(std::string_view text);

}  // namespace envclass
