#include "envclass/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "envclass/error.hpp"
#include "envclass/random.hpp"
#include "envclass/stats.hpp"

namespace envclass {

using nlohmann::json;

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<std::vector<double>> kmeanspp_seed(const std::vector<std::vector<double>>& pts, std::size_t k, Rng& rng) {
  std::vector<std::vector<double>> centers;
  centers.push_back(pts[rng.index(pts.size())]);
  std::vector<double> d2(pts.size());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, sq_dist(pts[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      centers.push_back(pts[rng.index(pts.size())]);
      continue;
    }
    const double r = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = pts.size() - 1;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (d2[i] == 0.0) continue;
      acc += d2[i];
      if (acc > r) {
        pick = i;
        break;
      }
    }
    centers.push_back(pts[pick]);
  }
  return centers;
}

KMeansResult lloyd(const std::vector<std::vector<double>>& pts, std::vector<std::vector<double>> centers,
                   std::size_t max_iterations) {
  const std::size_t n = pts.size();
  const std::size_t k = centers.size();
  const std::size_t d = pts.front().size();
  KMeansResult res;
  res.assignment.assign(n, k);
  std::vector<double> cost(n);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = nearest_centroid(centers, pts[i]);
      if (c != res.assignment[i]) {
        res.assignment[i] = c;
        changed = true;
      }
      cost[i] = sq_dist(pts[i], centers[c]);
      inertia += cost[i];
    }
    res.inertia = inertia;
    res.inertia_trace.push_back(inertia);
    res.iterations = it + 1;
    if (!changed || it + 1 == max_iterations) break;

    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[res.assignment[i]];
      for (std::size_t j = 0; j < d; ++j) s[j] += pts[i][j];
      ++counts[res.assignment[i]];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < d; ++j) centers[c][j] = sums[c][j] / static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move it onto the worst-served point.
      std::size_t far = 0;
      double far_cost = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && cost[i] > far_cost) {
          far_cost = cost[i];
          far = i;
        }
      }
      taken[far] = true;
      centers[c] = pts[far];
    }
  }
  res.centroids = std::move(centers);
  return res;
}

// Hartigan single-point transfers from a Lloyd fixed point: move a point when
// that lowers the inertia once both centroids are updated. The result is still
// a Lloyd fixed point.
void hartigan_refine(const std::vector<std::vector<double>>& pts, KMeansResult& res, std::size_t max_passes) {
  const std::size_t n = pts.size(), k = res.centroids.size(), d = pts.front().size();
  std::vector<std::size_t> counts(k, 0);
  for (auto a : res.assignment) ++counts[a];
  auto& c = res.centroids;
  bool any = false;
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = res.assignment[i];
      if (counts[a] < 2) continue;
      const double na = static_cast<double>(counts[a]);
      const double leave = na / (na - 1.0) * sq_dist(pts[i], c[a]);
      std::size_t to = a;
      double join_best = leave;
      for (std::size_t b = 0; b < k; ++b) {
        if (b == a) continue;
        const double nb = static_cast<double>(counts[b]);
        const double join = nb / (nb + 1.0) * sq_dist(pts[i], c[b]);
        if (join < join_best * (1.0 - 1e-12)) {
          join_best = join;
          to = b;
        }
      }
      if (to == a) continue;
      const double nb = static_cast<double>(counts[to]);
      for (std::size_t j = 0; j < d; ++j) {
        c[a][j] = (c[a][j] * na - pts[i][j]) / (na - 1.0);
        c[to][j] = (c[to][j] * nb + pts[i][j]) / (nb + 1.0);
      }
      --counts[a];
      ++counts[to];
      res.assignment[i] = to;
      moved = any = true;
    }
    if (!moved) break;
  }
  if (!any) return;
  // Exact means and inertia, free of the incremental updates' rounding.
  for (std::size_t a = 0; a < k; ++a) std::fill(c[a].begin(), c[a].end(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) c[res.assignment[i]][j] += pts[i][j];
  for (std::size_t a = 0; a < k; ++a)
    for (auto& v : c[a]) v /= static_cast<double>(counts[a]);
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) inertia += sq_dist(pts[i], c[res.assignment[i]]);
  res.inertia = inertia;
  res.inertia_trace.push_back(inertia);
}

}  // namespace

std::size_t nearest_centroid(const std::vector<std::vector<double>>& centroids, std::span<const double> x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double dd = sq_dist(x, centroids[c]);
    if (dd < best_d) {
      best_d = dd;
      best = c;
    }
  }
  return best;
}

KMeansResult kmeans(const std::vector<std::vector<double>>& points, const KMeansOptions& opt) {
  if (opt.k == 0) throw config_error("k must be >= 1");
  if (points.size() < opt.k) {
    throw data_error("k-means needs at least " + std::to_string(opt.k) + " rows, got " + std::to_string(points.size()));
  }
  const auto dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw invariant_error("k-means points have mixed dimensions");
  }
  Rng rng(opt.seed);
  KMeansResult best;
  bool have = false;
  for (std::size_t r = 0; r < std::max<std::size_t>(opt.restarts, 1); ++r) {
    auto res = lloyd(points, kmeanspp_seed(points, opt.k, rng), std::max<std::size_t>(opt.max_iterations, 1));
    hartigan_refine(points, res, std::max<std::size_t>(opt.max_iterations, 1));
    res.restart = r;
    if (!have || res.inertia < best.inertia) {
      best = std::move(res);
      have = true;
    }
  }
  return best;
}

std::string_view to_string(ClusterLabel label) {
  switch (label) {
    case ClusterLabel::A: return "A";
    case ClusterLabel::B: return "B";
    case ClusterLabel::Unresolved: return "Unresolved";
  }
  return "Unresolved";
}

ClusterModel kmeans_fit(const FeatureMatrix& standardized, std::uint64_t seed, std::size_t restarts,
                        std::size_t max_iterations) {
  if (standardized.rows.size() < 2) throw data_error("clustering needs at least 2 rows");
  std::vector<std::vector<double>> pts;
  pts.reserve(standardized.rows.size());
  for (const auto& r : standardized.rows) pts.emplace_back(r.values.begin(), r.values.end());
  auto res = kmeans(pts, {2, seed, restarts, max_iterations});
  if (res.centroids[1][kStopFraction] > res.centroids[0][kStopFraction]) std::swap(res.centroids[0], res.centroids[1]);

  ClusterModel m;
  for (auto n : feature_names()) m.columns.emplace_back(n);
  m.centroids = std::move(res.centroids);
  m.column_stats = standardized.column_stats;
  m.inertia = res.inertia;
  m.seed = seed;
  m.restarts = restarts;
  m.inertia_trace = std::move(res.inertia_trace);
  return m;
}

std::vector<ClusterLabel> classify_standardized(const ClusterModel& model, const FeatureMatrix& standardized) {
  std::vector<std::string> names;
  for (auto n : feature_names()) names.emplace_back(n);
  if (model.columns != names || model.centroids.size() != 2) {
    throw config_error("model columns do not match the feature matrix");
  }
  std::vector<ClusterLabel> out;
  out.reserve(standardized.rows.size());
  for (const auto& r : standardized.rows) {
    out.push_back(nearest_centroid(model.centroids, r.values) == 0 ? ClusterLabel::A : ClusterLabel::B);
  }
  return out;
}

std::vector<ClusterLabel> classify(const ClusterModel& model, const FeatureMatrix& raw) {
  if (raw.rows.empty()) throw data_error("nothing to classify");
  return classify_standardized(model, apply_standardization(raw, model.column_stats));
}

std::vector<DatasetClusterShare> majority_labels(const FeatureMatrix& matrix, const std::vector<ClusterLabel>& labels,
                                                 bool group_by_scene) {
  if (labels.size() != matrix.rows.size()) throw invariant_error("label count does not match row count");
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& c = counts[group_by_scene ? matrix.rows[i].scene_id : matrix.rows[i].dataset_id];
    if (labels[i] == ClusterLabel::A) ++c.first;
    if (labels[i] == ClusterLabel::B) ++c.second;
  }
  std::vector<DatasetClusterShare> out;
  for (const auto& [id, c] : counts) {
    DatasetClusterShare s;
    s.dataset_id = id;
    s.rows = c.first + c.second;
    if (s.rows > 0) {
      s.fraction_a = static_cast<double>(c.first) / static_cast<double>(s.rows);
      s.fraction_b = static_cast<double>(c.second) / static_cast<double>(s.rows);
    }
    if (2 * c.first > s.rows) s.majority = ClusterLabel::A;
    else if (2 * c.second > s.rows) s.majority = ClusterLabel::B;
    out.push_back(s);
  }
  return out;
}

std::vector<ClusterLabel> propagate_majority(const FeatureMatrix& matrix, const std::vector<ClusterLabel>& labels) {
  std::map<std::string, ClusterLabel> major;
  for (const auto& s : majority_labels(matrix, labels)) major[s.dataset_id] = s.majority;
  std::vector<ClusterLabel> out;
  out.reserve(labels.size());
  for (const auto& r : matrix.rows) out.push_back(major.at(r.dataset_id));
  return out;
}

std::vector<FeatureSummary> group_summaries(const FeatureMatrix& matrix, const std::vector<std::string>& group_of_row) {
  if (group_of_row.size() != matrix.rows.size()) throw invariant_error("group count does not match row count");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < group_of_row.size(); ++i) groups[group_of_row[i]].push_back(i);
  std::vector<FeatureSummary> out;
  for (const auto& [g, idx] : groups) {
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      std::vector<double> v;
      v.reserve(idx.size());
      for (auto i : idx) v.push_back(matrix.rows[i].values[j]);
      FeatureSummary s;
      s.group = g;
      s.feature = std::string(feature_names()[j]);
      s.n = v.size();
      s.mean = mean(v);
      if (v.size() >= 2) s.half_width = 1.96 * sample_sd(v) / std::sqrt(static_cast<double>(v.size()));
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<FeatureSummary> cluster_summaries(const FeatureMatrix& raw, const std::vector<ClusterLabel>& labels) {
  if (labels.size() != raw.rows.size()) throw invariant_error("label count does not match row count");
  FeatureMatrix kept;
  std::vector<std::string> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == ClusterLabel::Unresolved) continue;
    kept.rows.push_back(raw.rows[i]);
    groups.emplace_back(to_string(labels[i]));
  }
  return group_summaries(kept, groups);
}

std::string model_to_json(const ClusterModel& model) {
  json j;
  j["columns"] = model.columns;
  j["labels"] = {"A", "B"};
  j["centroids"] = model.centroids;
  json stats = json::object();
  for (std::size_t k = 0; k < kFeatureCount && k < model.columns.size(); ++k) {
    const auto& s = model.column_stats[k];
    stats[model.columns[k]] = {{"mean", s.mean}, {"sd", s.sd}, {"q1", s.q1}, {"q3", s.q3}};
  }
  j["column_stats"] = stats;
  j["inertia"] = model.inertia;
  j["seed"] = model.seed;
  j["restarts"] = model.restarts;
  return j.dump(2) + "\n";
}

ClusterModel model_from_json(std::string_view text) {
  ClusterModel m;
  try {
    const auto j = json::parse(text);
    m.columns = j.at("columns").get<std::vector<std::string>>();
    m.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
    m.inertia = j.at("inertia").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.restarts = j.value("restarts", std::size_t{0});
    const auto& names = feature_names();
    if (m.columns.size() != kFeatureCount || !std::equal(m.columns.begin(), m.columns.end(), names.begin())) {
      throw config_error("model columns do not match this tool's feature schema");
    }
    if (m.centroids.size() != 2) throw config_error("model must have exactly 2 centroids");
    for (const auto& c : m.centroids) {
      if (c.size() != kFeatureCount) throw config_error("model centroid has the wrong dimension");
    }
    const auto& stats = j.at("column_stats");
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      const auto& s = stats.at(m.columns[k]);
      m.column_stats[k] = {s.at("mean").get<double>(), s.at("sd").get<double>(), s.at("q1").get<double>(),
                           s.at("q3").get<double>()};
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("model file: ") + e.what());
  }
  return m;
}

}  // namespace envclass
