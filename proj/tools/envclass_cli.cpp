// envclass command-line tool. Talks to the library only through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "envclass/envclass.h"

namespace {

// 0 success, 1 internal error, 2 user or configuration error.
int exit_code(envc_status s) {
  if (s == ENVC_OK) return 0;
  if (s == ENVC_E_INTERNAL) return 1;
  return 2;
}

int report(envc_status s) {
  if (s != ENVC_OK) std::cerr << "envclass: " << envc_status_name(s) << " error: " << envc_last_error() << "\n";
  return exit_code(s);
}

struct ConfigDeleter {
  void operator()(envc_config* c) const { envc_config_free(c); }
};
using ConfigPtr = std::unique_ptr<envc_config, ConfigDeleter>;

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string adapter;
  bool per_dataset_iqr = false;
  std::vector<std::string> inputs;
  std::string scenes;
  std::string scene_id;
  std::string transform;
  std::string column_map;
  std::vector<std::string> presets;
  std::size_t count = 1;
  std::string model;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config, "run configuration JSON");
  cmd->add_option("--seed", o.seed, "k-means seed (overrides the config)");
  cmd->add_option("--out", o.out, "output directory (overrides the config)");
  cmd->add_option("--adapter", o.adapter, "adapter for file inputs")->check(CLI::IsMember({"normalized", "sdd", "generic"}));
  cmd->add_flag("--per-dataset-iqr", o.per_dataset_iqr, "outlier fences per dataset instead of over all rows");
  cmd->add_option("--input", o.inputs, "trajectory file (repeatable)");
  cmd->add_option("--scenes", o.scenes, "scene metadata JSON for --input files");
  cmd->add_option("--scene-id", o.scene_id, "scene of --scenes that sdd/generic inputs belong to");
  cmd->add_option("--transform", o.transform, "homography JSON for sdd inputs");
  cmd->add_option("--column-map", o.column_map, "column map JSON for generic inputs");
  cmd->add_option("--preset", o.presets, "add synthetic scenes of a preset (road, campus; repeatable)");
  cmd->add_option("--count", o.count, "synthetic scenes per --preset")->check(CLI::PositiveNumber);
}

// Returns an exit code; 0 when the config is ready.
int build_config(const RunOptions& o, ConfigPtr& out) {
  envc_config* raw = nullptr;
  envc_status s = o.config.empty() ? envc_config_new(&raw) : envc_config_load(o.config.c_str(), &raw);
  if (s != ENVC_OK) return report(s);
  out.reset(raw);
  for (const auto& path : o.inputs) {
    if (o.scenes.empty()) {
      std::cerr << "envclass: --input needs --scenes\n";
      return 2;
    }
    const std::string adapter = o.adapter.empty() ? "normalized" : o.adapter;
    const char* extra = adapter == "sdd" ? (o.transform.empty() ? nullptr : o.transform.c_str())
                        : adapter == "generic" ? (o.column_map.empty() ? nullptr : o.column_map.c_str())
                                               : nullptr;
    s = envc_config_add_input(raw, adapter.c_str(), path.c_str(), o.scenes.c_str(),
                              o.scene_id.empty() ? nullptr : o.scene_id.c_str(), extra);
    if (s != ENVC_OK) return report(s);
  }
  if (!o.adapter.empty() && o.inputs.empty()) {
    if ((s = envc_config_set_adapter(raw, o.adapter.c_str())) != ENVC_OK) return report(s);
  }
  for (const auto& preset : o.presets) {
    for (std::size_t i = 0; i < o.count; ++i) {
      const std::string params = "{\"preset\": \"" + preset + "\", \"seed\": " + std::to_string(i + 1) + "}";
      if ((s = envc_config_add_synth(raw, params.c_str())) != ENVC_OK) return report(s);
    }
  }
  if (o.seed && (s = envc_config_set_seed(raw, *o.seed)) != ENVC_OK) return report(s);
  if (!o.out.empty() && (s = envc_config_set_out(raw, o.out.c_str())) != ENVC_OK) return report(s);
  if (o.per_dataset_iqr && (s = envc_config_set_per_dataset_iqr(raw, 1)) != ENVC_OK) return report(s);
  if (!o.model.empty() && (s = envc_config_set_model(raw, o.model.c_str())) != ENVC_OK) return report(s);
  std::size_t n = 0;
  envc_config_input_count(raw, &n);
  if (n == 0) {
    std::cerr << "envclass: no inputs (use --config, --input or --preset)\n";
    return 2;
  }
  return 0;
}

int run(const RunOptions& o, envc_status (*cmd)(const envc_config*, char**)) {
  ConfigPtr cfg;
  if (const int rc = build_config(o, cfg)) return rc;
  char* text = nullptr;
  const envc_status s = cmd(cfg.get(), &text);
  if (s != ENVC_OK) return report(s);
  std::cout << text;
  envc_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classify traffic environments as structured or unstructured from trajectory data"};
  app.set_version_flag("--version", std::string(envc_version()));
  app.require_subcommand(1);

  RunOptions features_opt, cluster_opt, glm_opt, classify_opt;
  auto* features = app.add_subcommand("features", "per-agent and per-dataset features");
  add_run_options(features, features_opt);
  auto* cluster = app.add_subcommand("cluster", "feature matrix, outlier removal and two-cluster k-means");
  add_run_options(cluster, cluster_opt);
  auto* glm = app.add_subcommand("glm", "logistic fit of the cluster labels on pedestrian features");
  add_run_options(glm, glm_opt);
  auto* classify = app.add_subcommand("classify", "label new data with a fitted cluster model");
  add_run_options(classify, classify_opt);
  classify->add_option("--model", classify_opt.model, "cluster_model.json from a cluster run");

  std::string synth_preset = "road", synth_params, synth_out;
  std::optional<std::uint64_t> synth_seed;
  std::size_t synth_count = 1;
  auto* synth = app.add_subcommand("synth", "write synthetic scenes in the normalized CSV schema");
  synth->add_option("--preset", synth_preset, "road or campus")->check(CLI::IsMember({"road", "campus"}));
  synth->add_option("--params", synth_params, "regime parameter JSON (overrides the preset)");
  synth->add_option("--seed", synth_seed, "seed of the first scene");
  synth->add_option("--count", synth_count, "number of scenes")->check(CLI::PositiveNumber);
  synth->add_option("--out", synth_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*features) return run(features_opt, envc_run_features);
  if (*cluster) return run(cluster_opt, envc_run_cluster);
  if (*glm) return run(glm_opt, envc_run_glm);
  if (*classify) {
    if (classify_opt.model.empty() && classify_opt.config.empty()) {
      std::cerr << "envclass: classify needs --model\n";
      return 2;
    }
    return run(classify_opt, envc_run_classify);
  }
  if (*synth) {
    std::string params;
    if (!synth_params.empty()) {
      std::ifstream in(synth_params);
      if (!in) {
        std::cerr << "envclass: cannot open '" << synth_params << "'\n";
        return 2;
      }
      nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
      if (!j.is_object()) {
        std::cerr << "envclass: '" << synth_params << "' is not a JSON object\n";
        return 2;
      }
      if (synth_seed) j["seed"] = *synth_seed;
      params = j.dump();
    } else {
      params = "{\"preset\": \"" + synth_preset + "\", \"seed\": " + std::to_string(synth_seed.value_or(1)) + "}";
    }
    char* text = nullptr;
    const envc_status s = envc_run_synth(params.c_str(), synth_count, synth_out.c_str(), &text);
    if (s != ENVC_OK) return report(s);
    std::cout << text;
    envc_string_free(text);
    return 0;
  }
  return 2;
}
