#include "envclass/featmat.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "envclass/error.hpp"
#include "envclass/stats.hpp"
#include "text_util.hpp"

namespace envclass {

using nlohmann::json;

const std::array<std::string_view, kFeatureCount>& feature_names() {
  static const std::array<std::string_view, kFeatureCount> names = {
      "mean_speed",      "stop_fraction",     "variability",     "path_efficiency", "orientation_entropy",
      "avg_density",     "avg_standing_density", "veh_mean_speed", "veh_stop_fraction", "veh_variability",
      "approach_entropy", "priority_ratio",    "v2p_ratio"};
  return names;
}

std::vector<double> FeatureMatrix::column(std::size_t j) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.values[j]);
  return out;
}

ColumnStatsArray compute_column_stats(const std::vector<FeatureRow>& rows) {
  ColumnStatsArray stats{};
  if (rows.empty()) return stats;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    std::vector<double> col;
    col.reserve(rows.size());
    for (const auto& r : rows) col.push_back(r.values[j]);
    std::sort(col.begin(), col.end());
    auto& s = stats[j];
    s.mean = mean(col);
    s.sd = col.front() == col.back() ? 0.0 : sample_sd(col);
    s.q1 = quantile_sorted(col, 0.25);
    s.q3 = quantile_sorted(col, 0.75);
  }
  return stats;
}

AssembledMatrix assemble(const PedestrianFeatureSet& peds, const VehicleFeatureSet& vehs,
                         const InteractionFeatureSet& inter) {
  AssembledMatrix out;
  std::map<std::string, std::vector<VehicleFeatures>> veh_by_ds;
  for (const auto& v : vehs.rows) veh_by_ds[v.dataset_id].push_back(v);

  std::map<std::string, std::array<double, 7>> dataset_level;
  std::map<std::string, std::string> excluded;
  auto datasets = std::vector<std::string>{};
  for (const auto& [ds, _] : peds.orientation) datasets.push_back(ds);
  for (const auto& r : peds.rows) {
    if (!peds.orientation.count(r.dataset_id)) datasets.push_back(r.dataset_id);
  }
  std::sort(datasets.begin(), datasets.end());
  datasets.erase(std::unique(datasets.begin(), datasets.end()), datasets.end());

  for (const auto& ds : datasets) {
    std::string reason;
    const auto orient = peds.orientation.find(ds);
    const auto veh = veh_by_ds.find(ds);
    const auto ia = inter.by_dataset.find(ds);
    if (orient == peds.orientation.end() || orient->second.total == 0) {
      reason = "no pedestrian trajlet with a defined heading";
    } else if (veh == veh_by_ds.end()) {
      reason = "no moving vehicles";
    } else if (ia == inter.by_dataset.end() || !ia->second.approach_entropy) {
      reason = "no interaction with a defined approach angle";
    } else if (!ia->second.priority_ratio) {
      reason = "no path crossings, priority ratio undefined";
    } else if (!ia->second.v2p_ratio) {
      reason = "no frame with a pedestrian";
    }
    if (!reason.empty()) {
      excluded[ds] = reason;
      continue;
    }
    const auto vm = vehicle_means(veh->second);
    dataset_level[ds] = {orientation_entropy(orient->second), vm.mean_speed, vm.stop_fraction, vm.variability,
                         *ia->second.approach_entropy, *ia->second.priority_ratio, *ia->second.v2p_ratio};
  }
  for (const auto& p : peds.rows) {
    const auto it = dataset_level.find(p.dataset_id);
    if (it == dataset_level.end()) continue;
    const auto& d = it->second;
    FeatureRow row;
    row.dataset_id = p.dataset_id;
    row.scene_id = p.scene_id;
    row.agent_id = p.agent_id;
    row.values = {p.mean_speed, p.stop_fraction, p.variability, p.path_efficiency, d[0], p.avg_density,
                  p.avg_standing_density, d[1], d[2], d[3], d[4], d[5], d[6]};
    for (double v : row.values) {
      if (!std::isfinite(v)) throw invariant_error("non-finite feature for agent '" + p.agent_id + "'");
    }
    out.matrix.rows.push_back(std::move(row));
  }
  for (const auto& [ds, reason] : excluded) out.excluded.push_back({ds, reason});
  out.matrix.column_stats = compute_column_stats(out.matrix.rows);
  return out;
}

namespace {

FenceArray fences_of(const std::vector<const FeatureRow*>& rows) {
  FenceArray f{};
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    std::vector<double> col;
    col.reserve(rows.size());
    for (const auto* r : rows) col.push_back(r->values[j]);
    std::sort(col.begin(), col.end());
    const double q1 = quantile_sorted(col, 0.25);
    const double q3 = quantile_sorted(col, 0.75);
    const double iqr = q3 - q1;
    f[j] = {q1 - 1.5 * iqr, q3 + 1.5 * iqr};
  }
  return f;
}

bool inside(const FeatureRow& r, const FenceArray& f) {
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    if (r.values[j] < f[j].lower || r.values[j] > f[j].upper) return false;
  }
  return true;
}

}  // namespace

OutlierResult remove_outliers(const FeatureMatrix& matrix, bool per_dataset) {
  if (matrix.rows.size() < 4) throw data_error("outlier removal needs at least 4 rows");
  OutlierResult out;
  std::map<std::string, std::vector<const FeatureRow*>> groups;
  for (const auto& r : matrix.rows) groups[per_dataset ? r.dataset_id : std::string()].push_back(&r);
  for (const auto& [key, rows] : groups) out.fences[key] = fences_of(rows);
  for (const auto& r : matrix.rows) {
    const auto& f = out.fences.at(per_dataset ? r.dataset_id : std::string());
    if (inside(r, f)) {
      out.matrix.rows.push_back(r);
    } else {
      out.dropped.push_back(r);
    }
  }
  if (out.matrix.rows.empty()) throw data_error("outlier removal dropped every row");
  out.matrix.column_stats = compute_column_stats(out.matrix.rows);
  return out;
}

FeatureMatrix apply_standardization(const FeatureMatrix& matrix, const ColumnStatsArray& stats) {
  FeatureMatrix out;
  out.column_stats = stats;
  out.rows = matrix.rows;
  for (auto& r : out.rows) {
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      r.values[j] = stats[j].sd == 0.0 ? 0.0 : (r.values[j] - stats[j].mean) / stats[j].sd;
    }
  }
  return out;
}

FeatureMatrix standardize(const FeatureMatrix& matrix) {
  if (matrix.rows.size() < 2) throw data_error("standardization needs at least 2 rows");
  return apply_standardization(matrix, compute_column_stats(matrix.rows));
}

FeatureMatrix center(const FeatureMatrix& matrix) {
  if (matrix.rows.size() < 2) throw data_error("centering needs at least 2 rows");
  FeatureMatrix out;
  out.column_stats = compute_column_stats(matrix.rows);
  out.rows = matrix.rows;
  for (auto& r : out.rows) {
    for (std::size_t j = 0; j < kFeatureCount; ++j) r.values[j] -= out.column_stats[j].mean;
  }
  return out;
}

void write_matrix_csv(const FeatureMatrix& matrix, std::ostream& out) {
  out << "dataset_id,scene_id,agent_id";
  for (auto n : feature_names()) out << ',' << n;
  out << '\n';
  for (const auto& r : matrix.rows) {
    out << r.dataset_id << ',' << r.scene_id << ',' << r.agent_id;
    for (double v : r.values) out << ',' << detail::format_double(v);
    out << '\n';
  }
}

FeatureMatrix read_matrix_csv(std::istream& in, const std::string& source) {
  FeatureMatrix m;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);
    if (!header) {
      std::vector<std::string> expected = {"dataset_id", "scene_id", "agent_id"};
      for (auto n : feature_names()) expected.emplace_back(n);
      if (fields != expected) throw ParseError(source, lineno, "feature matrix header does not match");
      header = true;
      continue;
    }
    if (fields.size() != 3 + kFeatureCount) throw ParseError(source, lineno, "wrong field count");
    FeatureRow r{fields[0], fields[1], fields[2], {}};
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const auto v = detail::parse_double(fields[3 + j]);
      if (!v || !std::isfinite(*v)) throw ParseError(source, lineno, "feature value is not a finite number");
      r.values[j] = *v;
    }
    m.rows.push_back(std::move(r));
  }
  if (!header) throw ParseError(source, lineno + 1, "missing header row");
  m.column_stats = compute_column_stats(m.rows);
  return m;
}

std::string matrix_sidecar_json(const FeatureMatrix& matrix, const OutlierResult* outliers,
                                const std::vector<ExcludedDataset>& excluded) {
  json j;
  json stats = json::object();
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    const auto& s = matrix.column_stats[k];
    stats[std::string(feature_names()[k])] = {{"mean", s.mean}, {"sd", s.sd}, {"q1", s.q1}, {"q3", s.q3}};
  }
  j["rows"] = matrix.rows.size();
  j["column_stats"] = stats;
  j["excluded_datasets"] = json::array();
  for (const auto& e : excluded) j["excluded_datasets"].push_back({{"dataset_id", e.dataset_id}, {"reason", e.reason}});
  if (outliers) {
    json fences = json::object();
    for (const auto& [key, arr] : outliers->fences) {
      json per = json::object();
      for (std::size_t k = 0; k < kFeatureCount; ++k) {
        per[std::string(feature_names()[k])] = {arr[k].lower, arr[k].upper};
      }
      fences[key.empty() ? "combined" : key] = per;
    }
    j["outlier_fences"] = fences;
    j["dropped_outliers"] = json::array();
    for (const auto& r : outliers->dropped) {
      j["dropped_outliers"].push_back({{"dataset_id", r.dataset_id}, {"scene_id", r.scene_id}, {"agent_id", r.agent_id}});
    }
  }
  return j.dump(2) + "\n";
}

}  // namespace envclass
