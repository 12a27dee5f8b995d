#include "chaoslab/chaoslab.h"

#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "chaoslab/error.hpp"
#include "chaoslab/experiment.hpp"

struct chaoslab_config {
  chaoslab::RunConfig config;
  std::string json;
};

struct chaoslab_model {
  chaoslab::Model model;
};

namespace {

thread_local std::string last_error;

chaoslab_status fail(chaoslab_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <class Fn>
chaoslab_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const chaoslab::InvalidInput& e) {
    return fail(CHAOSLAB_CONFIG_ERROR, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(CHAOSLAB_CONFIG_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return fail(CHAOSLAB_RUNTIME_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(CHAOSLAB_RUNTIME_ERROR, e.what());
  }
}

chaoslab::PointPattern pattern_of(const chaoslab_model* m, const double* coords, std::size_t n) {
  const auto d = static_cast<std::size_t>(m->model.intensity.window().dimension());
  return chaoslab::PointPattern(m->model.intensity.window(), std::vector<double>(coords, coords + n * d));
}

}  // namespace

extern "C" {

const char* chaoslab_version(void) { return "0.1.0"; }

const char* chaoslab_last_error(void) { return last_error.c_str(); }

chaoslab_status chaoslab_config_from_json(const char* json, chaoslab_config** out) {
  if (out == nullptr) return fail(CHAOSLAB_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  if (json == nullptr) return fail(CHAOSLAB_INVALID_ARGUMENT, "json is null");
  return guarded([&] {
    const auto j = nlohmann::json::parse(json);
    *out = new chaoslab_config{chaoslab::run_config_from_json(j), {}};
    return CHAOSLAB_OK;
  });
}

chaoslab_status chaoslab_config_load(const char* path, chaoslab_config** out) {
  if (out == nullptr) return fail(CHAOSLAB_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  if (path == nullptr) return fail(CHAOSLAB_INVALID_ARGUMENT, "path is null");
  std::ifstream is(path);
  if (!is) return fail(CHAOSLAB_CONFIG_ERROR, std::string("cannot read config ") + path);
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  return chaoslab_config_from_json(text.c_str(), out);
}

void chaoslab_config_free(chaoslab_config* config) { delete config; }

chaoslab_status chaoslab_config_set_seed(chaoslab_config* config, uint64_t seed) {
  if (config == nullptr) return fail(CHAOSLAB_INVALID_ARGUMENT, "config is null");
  config->config.seed = seed;
  return CHAOSLAB_OK;
}

chaoslab_status chaoslab_config_set_reps(chaoslab_config* config, uint64_t reps) {
  if (config == nullptr) return fail(CHAOSLAB_INVALID_ARGUMENT, "config is null");
  if (reps < 2) return fail(CHAOSLAB_CONFIG_ERROR, "reps must be at least 2");
  config->config.reps = reps;
  return CHAOSLAB_OK;
}

chaoslab_status chaoslab_config_set_out(chaoslab_config* config, const char* dir) {
  if (config == nullptr || dir == nullptr) return fail(CHAOSLAB_INVALID_ARGUMENT, "null argument");
  config->config.out = dir;
  return CHAOSLAB_OK;
}

chaoslab_status chaoslab_config_set_threads(chaoslab_config* config, int threads) {
  if (config == nullptr) return fail(CHAOSLAB_INVALID_ARGUMENT, "config is null");
  config->config.threads = threads;
  return CHAOSLAB_OK;
}

chaoslab_status chaoslab_config_set_tmax(chaoslab_config* config, double tmax) {
  if (config == nullptr) return fail(CHAOSLAB_INVALID_ARGUMENT, "config is null");
  return guarded([&] {
    chaoslab::RunConfig c = config->config;
    auto g = c.t_grid;
    if (g.contains("points")) {
      throw chaoslab::InvalidInput("tmax cannot override an explicit t_grid point list");
    }
    g["tmax"] = tmax;
    c.t_grid = g;
    // Re-validate through the parser so the override obeys the same rules.
    auto j = chaoslab::to_json(c);
    c = chaoslab::run_config_from_json(j);
    c.threads = config->config.threads;
    c.out = config->config.out;
    config->config = c;
    return CHAOSLAB_OK;
  });
}

const char* chaoslab_config_to_json(chaoslab_config* config) {
  if (config == nullptr) return nullptr;
  config->json = chaoslab::to_json(config->config).dump(2);
  return config->json.c_str();
}

chaoslab_status chaoslab_run(const chaoslab_config* config, const char* command) {
  if (config == nullptr || command == nullptr) return fail(CHAOSLAB_INVALID_ARGUMENT, "null argument");
  const std::string cmd = command;
  return guarded([&] {
    const auto& c = config->config;
    if (cmd == "sample") {
      chaoslab::cmd_sample(c);
    } else if (cmd == "evolve") {
      chaoslab::cmd_evolve(c);
    } else if (cmd == "diagnose") {
      if (!chaoslab::cmd_diagnose(c)) return fail(CHAOSLAB_RUNTIME_ERROR, "every diagnostic failed");
    } else if (cmd == "scan") {
      if (!chaoslab::cmd_scan(c)) return fail(CHAOSLAB_RUNTIME_ERROR, "every scan point failed");
    } else {
      return fail(CHAOSLAB_INVALID_ARGUMENT, "unknown command \"" + cmd + "\"");
    }
    return CHAOSLAB_OK;
  });
}

chaoslab_status chaoslab_plot(const char* report_path, const char* out_dir) {
  if (report_path == nullptr || out_dir == nullptr) return fail(CHAOSLAB_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    chaoslab::cmd_plot(report_path, out_dir);
    return CHAOSLAB_OK;
  });
}

chaoslab_status chaoslab_model_create(const chaoslab_config* config, chaoslab_model** out) {
  if (config == nullptr || out == nullptr) return fail(CHAOSLAB_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new chaoslab_model{chaoslab::build_model(config->config.model, config->config.sets)};
    return CHAOSLAB_OK;
  });
}

void chaoslab_model_free(chaoslab_model* model) { delete model; }

int chaoslab_model_dimension(const chaoslab_model* model) {
  return model == nullptr ? 0 : model->model.intensity.window().dimension();
}

chaoslab_status chaoslab_model_evaluate(const chaoslab_model* model, const double* coords, size_t n, double* value) {
  if (model == nullptr || value == nullptr || (coords == nullptr && n > 0)) {
    return fail(CHAOSLAB_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    *value = model->model.f->evaluate(pattern_of(model, coords, n));
    return CHAOSLAB_OK;
  });
}

chaoslab_status chaoslab_model_add_one_costs(const chaoslab_model* model, const double* coords, size_t n,
                                             const double* xs, size_t m, double* costs) {
  if (model == nullptr || (coords == nullptr && n > 0) || (m > 0 && (xs == nullptr || costs == nullptr))) {
    return fail(CHAOSLAB_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const auto out = model->model.f->add_one_costs(pattern_of(model, coords, n), pattern_of(model, xs, m));
    std::copy(out.begin(), out.end(), costs);
    return CHAOSLAB_OK;
  });
}

chaoslab_status chaoslab_model_remove_one_costs(const chaoslab_model* model, const double* coords, size_t n,
                                                double* costs) {
  if (model == nullptr || (n > 0 && (coords == nullptr || costs == nullptr))) {
    return fail(CHAOSLAB_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const auto out = model->model.f->remove_one_costs(pattern_of(model, coords, n));
    std::copy(out.begin(), out.end(), costs);
    return CHAOSLAB_OK;
  });
}

}  // extern "C"
