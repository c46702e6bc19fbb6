#include "envclass/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "envclass/error.hpp"
#include "text_util.hpp"

namespace envclass {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_text(const std::string& path) {
  auto text = detail::slurp(path);
  if (!text) throw io_error("cannot open '" + path + "'");
  return std::move(*text);
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* s) { return k == s; }) == known.end()) {
      throw config_error(where + ": unknown key '" + k + "'");
    }
  }
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string num(double v) { return detail::format_double(v); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Collects output files so the manifest can list them with their hashes.
class OutputDir {
 public:
  explicit OutputDir(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw io_error("cannot create output directory '" + dir_ + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = (fs::path(dir_) / name).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << content;
    if (!out) throw io_error("write failed for '" + path + "'");
    files_[name] = hex64(detail::fnv1a64(content));
  }

  const std::map<std::string, std::string>& files() const { return files_; }
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  std::map<std::string, std::string> files_;
};

void write_manifest(OutputDir& out, const std::string& command, const RunConfig& cfg) {
  const auto canonical = run_config_to_json(cfg);
  json inputs = json::array();
  for (const auto& in : cfg.inputs) {
    json e{{"adapter", in.adapter}};
    for (const auto& p : {in.path, in.scenes, in.transform, in.column_map}) {
      if (!p.empty()) e["files"][p] = hex64(detail::fnv1a64(read_text(p)));
    }
    inputs.push_back(e);
  }
  json m{{"tool", "envclass"},
         {"version", ENVCLASS_VERSION},
         {"command", command},
         {"config", json::parse(canonical)},
         {"config_hash", hex64(detail::fnv1a64(canonical))},
         {"seed", cfg.seed},
         {"inputs", inputs},
         {"outputs", out.files()}};
  // The manifest itself is not listed in its own outputs.
  const auto path = (fs::path(out.dir()) / "manifest.json").string();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("cannot write '" + path + "'");
  f << m.dump(2) << "\n";
}

std::string fmt_share(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * f);
  return buf;
}

const SceneMeta& pick_scene(const std::vector<SceneMeta>& metas, const InputSpec& in) {
  if (in.scene_id.empty()) {
    if (metas.size() != 1) {
      throw config_error("input '" + in.path + "': scene_id is required when '" + in.scenes +
                         "' lists more than one scene");
    }
    return metas.front();
  }
  for (const auto& m : metas) {
    if (m.scene_id == in.scene_id) return m;
  }
  throw reference_error("input '" + in.path + "': scene '" + in.scene_id + "' not found in '" + in.scenes + "'");
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw config_error("config must be a JSON object");
  reject_unknown(j, {"inputs", "thresholds", "seed", "restarts", "per_dataset_iqr", "unstructured_is_one", "out", "model"},
                 "config");
  RunConfig cfg;
  try {
    cfg.seed = j.value("seed", cfg.seed);
    cfg.restarts = j.value("restarts", cfg.restarts);
    cfg.per_dataset_iqr = j.value("per_dataset_iqr", cfg.per_dataset_iqr);
    cfg.unstructured_is_one = j.value("unstructured_is_one", cfg.unstructured_is_one);
    if (j.contains("out")) cfg.out = resolve(base_dir, j["out"].get<std::string>());
    if (j.contains("model")) cfg.model = resolve(base_dir, j["model"].get<std::string>());
    if (j.contains("thresholds")) {
      const auto& t = j["thresholds"];
      if (!t.is_object()) throw config_error("config: thresholds must be an object");
      reject_unknown(t,
                     {"ped_stop_mps", "veh_stop_mps", "parked_mps", "stationary_fraction", "interaction_m",
                      "trajlet_s"},
                     "thresholds");
      auto& th = cfg.thresholds;
      th.ped_stop_mps = t.value("ped_stop_mps", th.ped_stop_mps);
      th.veh_stop_mps = t.value("veh_stop_mps", th.veh_stop_mps);
      th.parked_mps = t.value("parked_mps", th.parked_mps);
      th.stationary_fraction = t.value("stationary_fraction", th.stationary_fraction);
      th.interaction_m = t.value("interaction_m", th.interaction_m);
      th.trajlet_s = t.value("trajlet_s", th.trajlet_s);
    }
    for (const auto& e : j.value("inputs", json::array())) {
      if (!e.is_object()) throw config_error("config: every input must be an object");
      reject_unknown(e, {"adapter", "path", "scenes", "scene_id", "transform", "column_map", "params"}, "input");
      InputSpec in;
      in.adapter = detail::lower(e.value("adapter", std::string("normalized")));
      in.path = resolve(base_dir, e.value("path", std::string()));
      in.scenes = resolve(base_dir, e.value("scenes", std::string()));
      in.scene_id = e.value("scene_id", std::string());
      in.transform = resolve(base_dir, e.value("transform", std::string()));
      in.column_map = resolve(base_dir, e.value("column_map", std::string()));
      if (e.contains("params")) in.synth = params_from_json(e["params"].dump());
      cfg.inputs.push_back(std::move(in));
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  const auto& th = cfg.thresholds;
  for (double v : {th.ped_stop_mps, th.veh_stop_mps, th.parked_mps, th.interaction_m, th.trajlet_s}) {
    if (!(v > 0.0)) throw config_error("thresholds must be positive");
  }
  if (!(th.stationary_fraction > 0.0 && th.stationary_fraction <= 1.0)) {
    throw config_error("stationary_fraction must be in (0, 1]");
  }
  if (cfg.restarts == 0) throw config_error("restarts must be >= 1");
  for (const auto& in : cfg.inputs) {
    if (in.adapter == "synth") {
      if (!in.synth) throw config_error("synth input needs 'params'");
      continue;
    }
    if (in.adapter != "normalized" && in.adapter != "sdd" && in.adapter != "generic") {
      throw config_error("unknown adapter '" + in.adapter + "' (expected normalized, sdd, generic or synth)");
    }
    if (in.path.empty()) throw config_error("input without 'path'");
    if (in.scenes.empty()) throw config_error("input '" + in.path + "' needs a 'scenes' metadata file");
    if (in.adapter == "generic" && in.column_map.empty()) {
      throw config_error("generic input '" + in.path + "' needs a 'column_map'");
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  const auto base = fs::path(path).parent_path().string();
  return parse_run_config(read_text(path), base.empty() ? "." : base);
}

std::string run_config_to_json(const RunConfig& cfg) {
  json inputs = json::array();
  for (const auto& in : cfg.inputs) {
    json e{{"adapter", in.adapter}};
    if (in.synth) {
      e["params"] = json::parse(params_to_json(*in.synth));
    } else {
      e["path"] = in.path;
      e["scenes"] = in.scenes;
      e["scene_id"] = in.scene_id;
      e["transform"] = in.transform;
      e["column_map"] = in.column_map;
    }
    inputs.push_back(e);
  }
  const auto& th = cfg.thresholds;
  json j{{"inputs", inputs},
         {"thresholds",
          {{"ped_stop_mps", th.ped_stop_mps},
           {"veh_stop_mps", th.veh_stop_mps},
           {"parked_mps", th.parked_mps},
           {"stationary_fraction", th.stationary_fraction},
           {"interaction_m", th.interaction_m},
           {"trajlet_s", th.trajlet_s}}},
         {"seed", cfg.seed},
         {"restarts", cfg.restarts},
         {"per_dataset_iqr", cfg.per_dataset_iqr},
         {"unstructured_is_one", cfg.unstructured_is_one},
         {"out", cfg.out},
         {"model", cfg.model}};
  return j.dump(2) + "\n";
}

DatasetBundle load_inputs(const RunConfig& cfg) {
  if (cfg.inputs.empty()) throw config_error("no inputs configured");
  DatasetBundle all;
  bool first = true;
  for (const auto& in : cfg.inputs) {
    DatasetBundle b;
    if (in.adapter == "synth") {
      b = generate(*in.synth);
    } else {
      const auto metas = load_scene_meta(in.scenes);
      if (in.adapter == "normalized") {
        b = load_normalized(in.path, metas);
      } else if (in.adapter == "sdd") {
        const auto h = in.transform.empty() ? Homography::identity() : parse_homography(read_text(in.transform));
        b = adapt_sdd(in.path, pick_scene(metas, in), h);
      } else {
        b = adapt_generic(in.path, parse_column_map(read_text(in.column_map)), pick_scene(metas, in));
      }
    }
    if (first) {
      all = std::move(b);
      first = false;
    } else {
      merge_into(all, std::move(b));
    }
  }
  validate(all);
  return all;
}

FeatureStage compute_features(const DatasetBundle& bundle, const Thresholds& th) {
  FeatureStage s;
  s.peds = compute_pedestrian_features(bundle, th);
  s.vehs = compute_vehicle_features(bundle, th);
  s.inter = compute_interaction_features(bundle, th);
  return s;
}

MatrixStage build_matrix(const FeatureStage& features, bool per_dataset_iqr) {
  MatrixStage m;
  m.assembled = assemble(features.peds, features.vehs, features.inter);
  if (m.assembled.matrix.rows.empty()) {
    std::string why;
    for (const auto& e : m.assembled.excluded) why += "\n  " + e.dataset_id + ": " + e.reason;
    throw data_error("feature matrix is empty" + (why.empty() ? std::string(" (no moving pedestrians)") : why));
  }
  m.outliers = remove_outliers(m.assembled.matrix, per_dataset_iqr);
  m.standardized = standardize(m.outliers.matrix);
  return m;
}

ClusterStage run_clustering(const MatrixStage& matrix, std::uint64_t seed, std::size_t restarts) {
  ClusterStage c;
  c.model = kmeans_fit(matrix.standardized, seed, restarts);
  c.row_labels = classify_standardized(c.model, matrix.standardized);
  c.by_dataset = majority_labels(matrix.outliers.matrix, c.row_labels, false);
  c.by_scene = majority_labels(matrix.outliers.matrix, c.row_labels, true);
  c.dataset_labels = propagate_majority(matrix.outliers.matrix, c.row_labels);
  return c;
}

SelectionResult run_selection(const MatrixStage& matrix, const ClusterStage& clusters, bool unstructured_is_one) {
  SelectionOptions opt;
  opt.unstructured_is_one = unstructured_is_one;
  return screen_and_select(matrix.outliers.matrix, clusters.dataset_labels, opt);
}

ClassifyReport classify_bundle(const ClusterModel& model, const DatasetBundle& bundle, const Thresholds& th) {
  const auto features = compute_features(bundle, th);
  const auto assembled = assemble(features.peds, features.vehs, features.inter);
  if (assembled.matrix.rows.empty()) throw data_error("no classifiable pedestrian rows in the input");
  ClassifyReport r;
  const auto labels = classify(model, assembled.matrix);
  r.rows = labels.size();
  for (auto l : labels) (l == ClusterLabel::A ? r.rows_a : r.rows_b)++;
  if (2 * r.rows_a > r.rows) r.majority = ClusterLabel::A;
  else if (2 * r.rows_b > r.rows) r.majority = ClusterLabel::B;
  r.by_dataset = majority_labels(assembled.matrix, labels, false);
  const auto& names = feature_names();
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    FeatureDiagnostic d;
    d.feature = std::string(names[j]);
    double s = 0.0;
    for (const auto& row : assembled.matrix.rows) s += row.values[j];
    d.value = s / static_cast<double>(assembled.matrix.rows.size());
    const auto& cs = model.column_stats[j];
    d.centroid_a = cs.mean + cs.sd * model.centroids[0][j];
    d.centroid_b = cs.mean + cs.sd * model.centroids[1][j];
    const double da = std::fabs(d.value - d.centroid_a), db = std::fabs(d.value - d.centroid_b);
    d.nearer = da < db ? ClusterLabel::A : db < da ? ClusterLabel::B : ClusterLabel::Unresolved;
    r.diagnostics.push_back(d);
  }
  return r;
}

std::string format_classify_report(const ClassifyReport& r) {
  std::ostringstream os;
  os << "label: " << to_string(r.majority) << "  (" << r.rows_a << " of " << r.rows << " rows in A, " << r.rows_b
     << " in B)\n";
  for (const auto& d : r.by_dataset) {
    os << "  dataset " << d.dataset_id << ": " << to_string(d.majority) << "  A " << fmt_share(d.fraction_a) << "  B "
       << fmt_share(d.fraction_b) << "\n";
  }
  char line[256];
  std::snprintf(line, sizeof line, "%-22s %12s %12s %12s  %s\n", "feature", "value", "cluster A", "cluster B",
                "nearer");
  os << line;
  for (const auto& d : r.diagnostics) {
    std::snprintf(line, sizeof line, "%-22s %12.5g %12.5g %12.5g  %s\n", d.feature.c_str(), d.value, d.centroid_a,
                  d.centroid_b, std::string(to_string(d.nearer)).c_str());
    os << line;
  }
  return os.str();
}

namespace {

void write_feature_files(OutputDir& out, const DatasetBundle& bundle, const FeatureStage& f) {
  std::ostringstream ped;
  ped << "dataset_id,scene_id,agent_id,mean_speed,stop_fraction,variability,path_efficiency,avg_density,"
         "avg_standing_density\n";
  for (const auto& r : f.peds.rows) {
    ped << csv_field(r.dataset_id) << ',' << csv_field(r.scene_id) << ',' << csv_field(r.agent_id) << ','
        << num(r.mean_speed) << ',' << num(r.stop_fraction) << ',' << num(r.variability) << ','
        << num(r.path_efficiency) << ',' << num(r.avg_density) << ',' << num(r.avg_standing_density) << '\n';
  }
  out.write("pedestrian_features.csv", ped.str());

  std::ostringstream veh;
  veh << "dataset_id,scene_id,agent_id,veh_mean_speed,veh_stop_fraction,veh_variability\n";
  for (const auto& r : f.vehs.rows) {
    veh << csv_field(r.dataset_id) << ',' << csv_field(r.scene_id) << ',' << csv_field(r.agent_id) << ','
        << num(r.mean_speed) << ',' << num(r.stop_fraction) << ',' << num(r.variability) << '\n';
  }
  out.write("vehicle_features.csv", veh.str());

  std::ostringstream ev;
  ev << "scene_id,ped_id,veh_id,first_frame,last_frame,approach_angle_deg,crossing,winner\n";
  for (const auto& e : f.inter.events) {
    ev << csv_field(e.scene_id) << ',' << csv_field(e.ped_id) << ',' << csv_field(e.veh_id) << ',' << e.first_frame
       << ',' << e.last_frame << ',' << (e.approach_angle_deg ? num(*e.approach_angle_deg) : "") << ','
       << (e.crossing ? "1" : "0") << ','
       << (e.crossing ? (e.crossing->winner == Priority::PedestrianFirst ? "pedestrian" : "vehicle") : "") << '\n';
  }
  out.write("interaction_events.csv", ev.str());

  json datasets = json::object();
  std::map<std::string, std::vector<VehicleFeatures>> veh_by_ds;
  for (const auto& r : f.vehs.rows) veh_by_ds[r.dataset_id].push_back(r);
  std::map<std::string, std::size_t> ped_rows;
  for (const auto& r : f.peds.rows) ++ped_rows[r.dataset_id];
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  for (const auto& ds : bundle.dataset_ids()) {
    json d;
    const auto& orient = f.peds.orientation.at(ds);
    d["pedestrian_rows"] = ped_rows[ds];
    d["stationary_pedestrians"] = f.peds.stationary_count.at(ds);
    d["orientation_trajlets"] = orient.total;
    d["orientation_entropy"] = orient.total ? json(orientation_entropy(orient)) : json(nullptr);
    d["orientation_counts"] = orient.counts;
    d["parked_vehicles"] = f.vehs.parked_count.count(ds) ? f.vehs.parked_count.at(ds) : 0;
    const auto vit = veh_by_ds.find(ds);
    if (vit != veh_by_ds.end()) {
      const auto vm = vehicle_means(vit->second);
      d["moving_vehicles"] = vm.vehicles;
      d["veh_mean_speed"] = vm.mean_speed;
      d["veh_stop_fraction"] = vm.stop_fraction;
      d["veh_variability"] = vm.variability;
    } else {
      d["moving_vehicles"] = 0;
      d["veh_mean_speed"] = d["veh_stop_fraction"] = d["veh_variability"] = nullptr;
    }
    const auto& ia = f.inter.by_dataset.at(ds);
    d["interactions"] = ia.events;
    d["interactions_with_angle"] = ia.defined_angles;
    d["crossings"] = ia.crossings;
    d["approach_entropy"] = opt(ia.approach_entropy);
    d["priority_ratio"] = opt(ia.priority_ratio);
    d["v2p_ratio"] = opt(ia.v2p_ratio);
    datasets[ds] = d;
  }
  const auto& rep = bundle.report;
  json j{{"datasets", datasets},
         {"load_report",
          {{"short_tracks_dropped", rep.short_tracks_dropped},
           {"lost_rows_dropped", rep.lost_rows_dropped},
           {"unknown_labels", rep.unknown_labels},
           {"warnings", rep.warnings}}}};
  out.write("dataset_features.json", j.dump(2) + "\n");
}

void write_matrix_files(OutputDir& out, const MatrixStage& m) {
  std::ostringstream raw;
  write_matrix_csv(m.outliers.matrix, raw);
  out.write("feature_matrix.csv", raw.str());
  out.write("feature_matrix.json", matrix_sidecar_json(m.outliers.matrix, &m.outliers, m.assembled.excluded));
  std::ostringstream z;
  write_matrix_csv(m.standardized, z);
  out.write("feature_matrix_standardized.csv", z.str());
}

std::string summary_csv(const std::vector<FeatureSummary>& rows, const char* group_header) {
  std::ostringstream os;
  os << "feature," << group_header << ",n,mean,ci_low,ci_high\n";
  for (const auto& s : rows) {
    os << s.feature << ',' << csv_field(s.group) << ',' << s.n << ',' << num(s.mean) << ','
       << (s.half_width ? num(s.mean - *s.half_width) : "") << ','
       << (s.half_width ? num(s.mean + *s.half_width) : "") << '\n';
  }
  return os.str();
}

std::string shares_csv(const std::vector<DatasetClusterShare>& shares, const char* key) {
  std::ostringstream os;
  os << key << ",rows,fraction_a,fraction_b,majority\n";
  for (const auto& s : shares) {
    os << csv_field(s.dataset_id) << ',' << s.rows << ',' << num(s.fraction_a) << ',' << num(s.fraction_b) << ','
       << to_string(s.majority) << '\n';
  }
  return os.str();
}

void write_cluster_files(OutputDir& out, const MatrixStage& m, const ClusterStage& c) {
  out.write("cluster_model.json", model_to_json(c.model));
  out.write("cluster_datasets.csv", shares_csv(c.by_dataset, "dataset_id"));
  out.write("cluster_scenes.csv", shares_csv(c.by_scene, "scene_id"));

  std::ostringstream labels;
  labels << "dataset_id,scene_id,agent_id,cluster,dataset_cluster\n";
  const auto& rows = m.outliers.matrix.rows;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    labels << csv_field(rows[i].dataset_id) << ',' << csv_field(rows[i].scene_id) << ',' << csv_field(rows[i].agent_id)
           << ',' << to_string(c.row_labels[i]) << ',' << to_string(c.dataset_labels[i]) << '\n';
  }
  out.write("cluster_labels.csv", labels.str());
  out.write("cluster_summary.csv", summary_csv(cluster_summaries(m.outliers.matrix, c.row_labels), "cluster"));

  std::vector<std::string> by_ds;
  for (const auto& r : rows) by_ds.push_back(r.dataset_id);
  out.write("dataset_summary.csv", summary_csv(group_summaries(m.outliers.matrix, by_ds), "dataset_id"));
}

std::string cluster_text(const ClusterStage& c) {
  std::ostringstream os;
  os << "k-means inertia " << num(c.model.inertia) << " (seed " << c.model.seed << ", " << c.model.restarts
     << " restarts)\n";
  for (const auto& d : c.by_dataset) {
    os << "  " << d.dataset_id << ": " << to_string(d.majority) << "  A " << fmt_share(d.fraction_a) << "  B "
       << fmt_share(d.fraction_b) << "  (" << d.rows << " rows)\n";
  }
  return os.str();
}

}  // namespace

std::string cmd_features(const RunConfig& cfg) {
  const auto bundle = load_inputs(cfg);
  const auto f = compute_features(bundle, cfg.thresholds);
  OutputDir out(cfg.out);
  write_feature_files(out, bundle, f);
  write_manifest(out, "features", cfg);
  std::ostringstream os;
  os << f.peds.rows.size() << " pedestrian rows, " << f.vehs.rows.size() << " moving vehicles, "
     << f.inter.events.size() << " interactions, " << bundle.report.warnings.size() << " warnings\n";
  for (const auto& w : bundle.report.warnings) os << "warning: " << w << "\n";
  return os.str();
}

std::string cmd_cluster(const RunConfig& cfg) {
  const auto bundle = load_inputs(cfg);
  const auto f = compute_features(bundle, cfg.thresholds);
  const auto m = build_matrix(f, cfg.per_dataset_iqr);
  const auto c = run_clustering(m, cfg.seed, cfg.restarts);
  OutputDir out(cfg.out);
  write_feature_files(out, bundle, f);
  write_matrix_files(out, m);
  write_cluster_files(out, m, c);
  write_manifest(out, "cluster", cfg);
  return cluster_text(c);
}

std::string cmd_glm(const RunConfig& cfg) {
  const auto bundle = load_inputs(cfg);
  const auto f = compute_features(bundle, cfg.thresholds);
  const auto m = build_matrix(f, cfg.per_dataset_iqr);
  const auto c = run_clustering(m, cfg.seed, cfg.restarts);
  OutputDir out(cfg.out);
  write_feature_files(out, bundle, f);
  write_matrix_files(out, m);
  write_cluster_files(out, m, c);
  SelectionResult sel;
  try {
    sel = run_selection(m, c, cfg.unstructured_is_one);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Separation) {
      throw Error(ErrorKind::Separation,
                  std::string(e.what()) +
                      "\nthe cluster labels are perfectly predicted by the pedestrian features, so the logistic "
                      "maximum-likelihood estimate does not exist; add data from more datasets or inspect "
                      "cluster_labels.csv");
    }
    throw;
  }
  const auto table = format_glm_table(sel.best, sel.unstructured_is_one);
  out.write("glm_table.txt", table);
  out.write("glm.json", glm_to_json(sel));
  write_manifest(out, "glm", cfg);
  return table;
}

std::string cmd_classify(const RunConfig& cfg) {
  if (cfg.model.empty()) throw config_error("classify needs a model file");
  const auto model = model_from_json(read_text(cfg.model));
  const auto bundle = load_inputs(cfg);
  const auto report = classify_bundle(model, bundle, cfg.thresholds);
  const auto text = format_classify_report(report);
  OutputDir out(cfg.out);
  json diag = json::array();
  for (const auto& d : report.diagnostics) {
    diag.push_back({{"feature", d.feature},
                    {"value", d.value},
                    {"centroid_a", d.centroid_a},
                    {"centroid_b", d.centroid_b},
                    {"nearer", std::string(to_string(d.nearer))}});
  }
  json ds = json::array();
  for (const auto& d : report.by_dataset) {
    ds.push_back({{"dataset_id", d.dataset_id},
                  {"rows", d.rows},
                  {"fraction_a", d.fraction_a},
                  {"fraction_b", d.fraction_b},
                  {"majority", std::string(to_string(d.majority))}});
  }
  json j{{"label", std::string(to_string(report.majority))},
         {"rows", report.rows},
         {"rows_a", report.rows_a},
         {"rows_b", report.rows_b},
         {"datasets", ds},
         {"diagnostics", diag}};
  out.write("classification.json", j.dump(2) + "\n");
  write_manifest(out, "classify", cfg);
  return text;
}

std::string cmd_synth(const RegimeParams& params, std::size_t count, const std::string& out_dir) {
  if (count == 0) throw config_error("synth: count must be >= 1");
  DatasetBundle all;
  for (std::size_t i = 0; i < count; ++i) {
    auto p = params;
    p.seed = params.seed + i;
    if (count > 1 && !p.scene_id.empty()) p.scene_id += "-" + std::to_string(i);
    auto b = generate(p);
    if (i == 0) all = std::move(b);
    else merge_into(all, std::move(b));
  }
  validate(all);
  OutputDir out(out_dir);
  std::ostringstream csv;
  write_normalized(all, csv);
  out.write("trajectories.csv", csv.str());
  out.write("scenes.json", scene_meta_to_json(all.scenes));
  out.write("params.json", params_to_json(params));
  json cfg{{"inputs", json::array({{{"adapter", "normalized"}, {"path", "trajectories.csv"}, {"scenes", "scenes.json"}}})},
           {"seed", params.seed},
           {"out", "results"}};
  out.write("config.json", cfg.dump(2) + "\n");
  json m{{"tool", "envclass"},
         {"version", ENVCLASS_VERSION},
         {"command", "synth"},
         {"params", json::parse(params_to_json(params))},
         {"count", count},
         {"seed", params.seed},
         {"outputs", out.files()}};
  out.write("manifest.json", m.dump(2) + "\n");
  std::size_t peds = 0, vehs = 0;
  for (const auto& t : all.tracks) {
    peds += t.kind == AgentKind::Pedestrian;
    vehs += t.kind == AgentKind::Vehicle;
  }
  std::ostringstream os;
  os << all.scenes.size() << " scene(s), " << peds << " pedestrians, " << vehs << " vehicles -> " << out_dir << "\n";
  return os.str();
}

}  // namespace envclass
