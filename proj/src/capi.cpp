#include "envclass/envclass.h"

#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "envclass/error.hpp"
#include "envclass/pipeline.hpp"

struct envc_config {
  envclass::RunConfig cfg;
};
struct envc_bundle {
  envclass::DatasetBundle bundle;
};
struct envc_model {
  envclass::ClusterModel model;
};

namespace {

thread_local std::string g_last_error;

envc_status status_of(envclass::ErrorKind k) {
  using envclass::ErrorKind;
  switch (k) {
    case ErrorKind::Parse: return ENVC_E_PARSE;
    case ErrorKind::Reference: return ENVC_E_REFERENCE;
    case ErrorKind::Config: return ENVC_E_CONFIG;
    case ErrorKind::Io: return ENVC_E_IO;
    case ErrorKind::Invariant: return ENVC_E_INVARIANT;
    case ErrorKind::Data: return ENVC_E_DATA;
    case ErrorKind::Separation: return ENVC_E_SEPARATION;
    case ErrorKind::Rank: return ENVC_E_RANK;
    case ErrorKind::Convergence: return ENVC_E_CONVERGENCE;
  }
  return ENVC_E_INTERNAL;
}

envc_status fail(envc_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

// Runs `f`, translating exceptions into status codes.
template <class F>
envc_status guarded(F&& f) {
  try {
    f();
    return ENVC_OK;
  } catch (const envclass::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(ENVC_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ENVC_E_INTERNAL, std::string("internal error: ") + e.what());
  } catch (...) {
    return fail(ENVC_E_INTERNAL, "internal error: unknown exception");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

#define ENVC_REQUIRE(cond, what) \
  if (!(cond)) return fail(ENVC_E_ARGUMENT, what)

envc_status run_command(const envc_config* cfg, char** out, std::string (*cmd)(const envclass::RunConfig&)) {
  ENVC_REQUIRE(cfg, "config is NULL");
  return guarded([&] {
    auto text = cmd(cfg->cfg);
    if (out) *out = dup_string(text);
  });
}

}  // namespace

extern "C" {

const char* envc_version(void) { return ENVCLASS_VERSION; }
const char* envc_last_error(void) { return g_last_error.c_str(); }

const char* envc_status_name(envc_status s) {
  switch (s) {
    case ENVC_OK: return "ok";
    case ENVC_E_ARGUMENT: return "argument";
    case ENVC_E_PARSE: return "parse";
    case ENVC_E_REFERENCE: return "reference";
    case ENVC_E_CONFIG: return "config";
    case ENVC_E_IO: return "io";
    case ENVC_E_INVARIANT: return "invariant";
    case ENVC_E_DATA: return "data";
    case ENVC_E_SEPARATION: return "separation";
    case ENVC_E_RANK: return "rank";
    case ENVC_E_CONVERGENCE: return "convergence";
    case ENVC_E_INTERNAL: return "internal";
  }
  return "unknown";
}

void envc_string_free(char* s) { std::free(s); }

envc_status envc_config_new(envc_config** out) {
  ENVC_REQUIRE(out, "out is NULL");
  return guarded([&] { *out = new envc_config{}; });
}

envc_status envc_config_load(const char* path, envc_config** out) {
  ENVC_REQUIRE(path && out, "path or out is NULL");
  return guarded([&] { *out = new envc_config{envclass::load_run_config(path)}; });
}

envc_status envc_config_parse(const char* json, const char* base_dir, envc_config** out) {
  ENVC_REQUIRE(json && out, "json or out is NULL");
  return guarded([&] { *out = new envc_config{envclass::parse_run_config(json, base_dir ? base_dir : "")}; });
}

envc_status envc_config_set_seed(envc_config* cfg, uint64_t seed) {
  ENVC_REQUIRE(cfg, "config is NULL");
  cfg->cfg.seed = seed;
  return ENVC_OK;
}

envc_status envc_config_set_out(envc_config* cfg, const char* dir) {
  ENVC_REQUIRE(cfg && dir && *dir, "config is NULL or directory empty");
  return guarded([&] { cfg->cfg.out = dir; });
}

envc_status envc_config_set_per_dataset_iqr(envc_config* cfg, int enabled) {
  ENVC_REQUIRE(cfg, "config is NULL");
  cfg->cfg.per_dataset_iqr = enabled != 0;
  return ENVC_OK;
}

envc_status envc_config_set_model(envc_config* cfg, const char* path) {
  ENVC_REQUIRE(cfg && path, "config or path is NULL");
  return guarded([&] { cfg->cfg.model = path; });
}

envc_status envc_config_add_input(envc_config* cfg, const char* adapter, const char* path, const char* scenes,
                                  const char* scene_id, const char* extra) {
  ENVC_REQUIRE(cfg && path && scenes, "config, path or scenes is NULL");
  return guarded([&] {
    envclass::InputSpec in;
    in.adapter = adapter ? adapter : "normalized";
    in.path = path;
    in.scenes = scenes;
    if (scene_id) in.scene_id = scene_id;
    if (extra) {
      if (in.adapter == "sdd") in.transform = extra;
      else if (in.adapter == "generic") in.column_map = extra;
      else throw envclass::config_error("adapter '" + in.adapter + "' takes no extra file");
    }
    if (in.adapter != "normalized" && in.adapter != "sdd" && in.adapter != "generic") {
      throw envclass::config_error("unknown adapter '" + in.adapter + "'");
    }
    if (in.adapter == "generic" && in.column_map.empty()) {
      throw envclass::config_error("generic input '" + in.path + "' needs a column map");
    }
    cfg->cfg.inputs.push_back(std::move(in));
  });
}

envc_status envc_config_add_synth(envc_config* cfg, const char* params_json) {
  ENVC_REQUIRE(cfg && params_json, "config or params is NULL");
  return guarded([&] {
    envclass::InputSpec in;
    in.adapter = "synth";
    in.synth = envclass::params_from_json(params_json);
    cfg->cfg.inputs.push_back(std::move(in));
  });
}

envc_status envc_config_set_adapter(envc_config* cfg, const char* adapter) {
  ENVC_REQUIRE(cfg && adapter, "config or adapter is NULL");
  return guarded([&] {
    const std::string a = adapter;
    if (a != "normalized" && a != "sdd" && a != "generic") {
      throw envclass::config_error("unknown adapter '" + a + "' (expected sdd or generic)");
    }
    for (auto& in : cfg->cfg.inputs) {
      if (in.adapter == "synth") continue;
      in.adapter = a;
      if (a == "generic" && in.column_map.empty()) {
        throw envclass::config_error("generic input '" + in.path + "' needs a column map");
      }
    }
  });
}

envc_status envc_config_input_count(const envc_config* cfg, size_t* out) {
  ENVC_REQUIRE(cfg && out, "config or out is NULL");
  *out = cfg->cfg.inputs.size();
  return ENVC_OK;
}

envc_status envc_config_to_json(const envc_config* cfg, char** out) {
  ENVC_REQUIRE(cfg && out, "config or out is NULL");
  return guarded([&] { *out = dup_string(envclass::run_config_to_json(cfg->cfg)); });
}

void envc_config_free(envc_config* cfg) { delete cfg; }

envc_status envc_run_features(const envc_config* cfg, char** summary) {
  return run_command(cfg, summary, envclass::cmd_features);
}
envc_status envc_run_cluster(const envc_config* cfg, char** summary) {
  return run_command(cfg, summary, envclass::cmd_cluster);
}
envc_status envc_run_glm(const envc_config* cfg, char** table) { return run_command(cfg, table, envclass::cmd_glm); }
envc_status envc_run_classify(const envc_config* cfg, char** report) {
  return run_command(cfg, report, envclass::cmd_classify);
}

envc_status envc_run_synth(const char* params_json, size_t count, const char* out_dir, char** summary) {
  ENVC_REQUIRE(params_json && out_dir, "params or out_dir is NULL");
  return guarded([&] {
    auto text = envclass::cmd_synth(envclass::params_from_json(params_json), count, out_dir);
    if (summary) *summary = dup_string(text);
  });
}

envc_status envc_bundle_load(const envc_config* cfg, envc_bundle** out) {
  ENVC_REQUIRE(cfg && out, "config or out is NULL");
  return guarded([&] { *out = new envc_bundle{envclass::load_inputs(cfg->cfg)}; });
}

envc_status envc_bundle_generate(const char* params_json, envc_bundle** out) {
  ENVC_REQUIRE(params_json && out, "params or out is NULL");
  return guarded([&] { *out = new envc_bundle{envclass::generate(envclass::params_from_json(params_json))}; });
}

envc_status envc_bundle_merge(envc_bundle* into, const envc_bundle* other) {
  ENVC_REQUIRE(into && other, "bundle is NULL");
  ENVC_REQUIRE(into != other, "cannot merge a bundle into itself");
  return guarded([&] {
    auto merged = into->bundle;
    envclass::merge_into(merged, other->bundle);
    into->bundle = std::move(merged);
  });
}

envc_status envc_bundle_counts(const envc_bundle* b, size_t* scenes, size_t* pedestrians, size_t* vehicles,
                               size_t* others) {
  ENVC_REQUIRE(b, "bundle is NULL");
  size_t n[3] = {0, 0, 0};
  for (const auto& t : b->bundle.tracks) {
    switch (t.kind) {
      case envclass::AgentKind::Pedestrian: ++n[0]; break;
      case envclass::AgentKind::Vehicle: ++n[1]; break;
      default: ++n[2]; break;
    }
  }
  if (scenes) *scenes = b->bundle.scenes.size();
  if (pedestrians) *pedestrians = n[0];
  if (vehicles) *vehicles = n[1];
  if (others) *others = n[2];
  return ENVC_OK;
}

envc_status envc_bundle_write_csv(const envc_bundle* b, const char* path) {
  ENVC_REQUIRE(b && path, "bundle or path is NULL");
  return guarded([&] {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw envclass::io_error(std::string("cannot write '") + path + "'");
    envclass::write_normalized(b->bundle, out);
  });
}

void envc_bundle_free(envc_bundle* b) { delete b; }

envc_status envc_model_fit(const envc_bundle* b, uint64_t seed, size_t restarts, envc_model** out) {
  ENVC_REQUIRE(b && out, "bundle or out is NULL");
  ENVC_REQUIRE(restarts > 0, "restarts must be >= 1");
  return guarded([&] {
    const auto features = envclass::compute_features(b->bundle, envclass::Thresholds{});
    const auto matrix = envclass::build_matrix(features, false);
    *out = new envc_model{envclass::kmeans_fit(matrix.standardized, seed, restarts)};
  });
}

envc_status envc_model_load(const char* path, envc_model** out) {
  ENVC_REQUIRE(path && out, "path or out is NULL");
  return guarded([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw envclass::io_error(std::string("cannot open '") + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    *out = new envc_model{envclass::model_from_json(text)};
  });
}

envc_status envc_model_save(const envc_model* m, const char* path) {
  ENVC_REQUIRE(m && path, "model or path is NULL");
  return guarded([&] {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw envclass::io_error(std::string("cannot write '") + path + "'");
    out << envclass::model_to_json(m->model);
  });
}

envc_status envc_model_centroid(const envc_model* m, envc_label cluster, double* out, size_t len) {
  ENVC_REQUIRE(m && out, "model or out is NULL");
  ENVC_REQUIRE(cluster == ENVC_LABEL_A || cluster == ENVC_LABEL_B, "cluster must be A or B");
  const auto& c = m->model.centroids[cluster == ENVC_LABEL_A ? 0 : 1];
  ENVC_REQUIRE(len >= c.size(), "output buffer too small");
  std::copy(c.begin(), c.end(), out);
  return ENVC_OK;
}

envc_status envc_model_inertia(const envc_model* m, double* out) {
  ENVC_REQUIRE(m && out, "model or out is NULL");
  *out = m->model.inertia;
  return ENVC_OK;
}

envc_status envc_classify(const envc_model* m, const envc_bundle* b, envc_label* label, size_t* rows_a,
                          size_t* rows_b) {
  ENVC_REQUIRE(m && b, "model or bundle is NULL");
  return guarded([&] {
    const auto r = envclass::classify_bundle(m->model, b->bundle, envclass::Thresholds{});
    if (label) {
      *label = r.majority == envclass::ClusterLabel::A   ? ENVC_LABEL_A
               : r.majority == envclass::ClusterLabel::B ? ENVC_LABEL_B
                                                         : ENVC_LABEL_UNRESOLVED;
    }
    if (rows_a) *rows_a = r.rows_a;
    if (rows_b) *rows_b = r.rows_b;
  });
}

void envc_model_free(envc_model* m) { delete m; }

size_t envc_feature_count(void) { return envclass::kFeatureCount; }

const char* envc_feature_name(size_t index) {
  if (index >= envclass::kFeatureCount) return nullptr;
  return envclass::feature_names()[index].data();
}

}  // extern "C"
