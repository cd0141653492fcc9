#include "focusfuse/focusfuse.h"

#include <exception>
#include <limits>
#include <mutex>
#include <new>
#include <string>

#include "api/commands.hpp"
#include "common/error.hpp"

struct ff_config {
  focusfuse::RunConfig cfg;
  mutable std::string scratch;
};

struct ff_fuser {
  focusfuse::Fuser impl;
};

namespace {

thread_local std::string g_last_error;
std::mutex g_log_mutex;
ff_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

void emit(const std::string& line) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  if (g_log_fn) g_log_fn(line.c_str(), g_log_user);
}

template <class F>
ff_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return FF_OK;
  } catch (const focusfuse::UsageError& e) {
    g_last_error = e.what();
    return FF_ERR_USAGE;
  } catch (const focusfuse::ShapeError& e) {
    g_last_error = e.what();
    return FF_ERR_SHAPE;
  } catch (const focusfuse::IoError& e) {
    g_last_error = e.what();
    return FF_ERR_IO;
  } catch (const focusfuse::FormatError& e) {
    g_last_error = e.what();
    return FF_ERR_FORMAT;
  } catch (const focusfuse::NumericalError& e) {
    g_last_error = e.what();
    return FF_ERR_NUMERICAL;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FF_ERR_INTERNAL;
  }
}

std::string arg(const char* s, const char* name) {
  if (!s) throw focusfuse::UsageError(std::string(name) + " must not be null");
  return s;
}

const focusfuse::RunConfig& config_of(const ff_config* cfg) {
  if (!cfg) throw focusfuse::UsageError("config handle must not be null");
  return cfg->cfg;
}

std::vector<std::string> path_list(const char* const* inputs, int n) {
  if (!inputs || n < 1) throw focusfuse::UsageError("no input paths given");
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(arg(inputs[i], "input path"));
  return out;
}

void fill(ff_train_summary* out, const focusfuse::TrainSummary& s) {
  if (!out) return;
  out->iterations = s.iterations;
  out->first_loss = s.first_loss;
  out->final_loss = s.final_loss;
  out->final_metric = s.final_metric;
  out->seconds = s.seconds;
}

}  // namespace

extern "C" {

const char* ff_last_error(void) { return g_last_error.c_str(); }

const char* ff_version(void) { return "0.1.0"; }

void ff_set_log_callback(ff_log_fn fn, void* user) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

ff_status ff_config_new(ff_config** out) {
  return guarded([&] {
    if (!out) throw focusfuse::UsageError("output handle pointer must not be null");
    *out = new ff_config();
  });
}

void ff_config_free(ff_config* cfg) { delete cfg; }

ff_status ff_config_set(ff_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    if (!cfg) throw focusfuse::UsageError("config handle must not be null");
    cfg->cfg.set(arg(key, "key"), arg(value, "value"));
  });
}

ff_status ff_config_get(const ff_config* cfg, const char* key, const char** value) {
  return guarded([&] {
    if (!value) throw focusfuse::UsageError("value pointer must not be null");
    cfg->scratch = config_of(cfg).get(arg(key, "key"));
    *value = cfg->scratch.c_str();
  });
}

ff_status ff_config_load_file(ff_config* cfg, const char* path) {
  return guarded([&] {
    if (!cfg) throw focusfuse::UsageError("config handle must not be null");
    cfg->cfg.load_file(arg(path, "path"));
  });
}

ff_status ff_config_dump(const ff_config* cfg, const char** text) {
  return guarded([&] {
    if (!text) throw focusfuse::UsageError("text pointer must not be null");
    std::string s;
    for (const auto& [k, v] : config_of(cfg).values()) s += k + " = " + v + "\n";
    cfg->scratch = std::move(s);
    *text = cfg->scratch.c_str();
  });
}

ff_status ff_synth(const ff_config* cfg, const char* out_dir, int n) {
  return guarded([&] { focusfuse::cmd_synth(config_of(cfg), arg(out_dir, "out_dir"), n, emit); });
}

ff_status ff_degrade(const ff_config* cfg, const char* src_dir, const char* out_dir, int n) {
  return guarded([&] {
    focusfuse::cmd_degrade(config_of(cfg), arg(src_dir, "src_dir"), arg(out_dir, "out_dir"), n,
                           emit);
  });
}

ff_status ff_make_fusion_data(const ff_config* cfg, const char* src_dir, const char* root) {
  return guarded([&] {
    focusfuse::cmd_make_fusion_data(config_of(cfg), arg(src_dir, "src_dir"), arg(root, "root"),
                                    emit);
  });
}

ff_status ff_train_bm(const ff_config* cfg, const char* data_dir, const char* out_ckpt,
                      ff_train_summary* summary) {
  return guarded([&] {
    fill(summary, focusfuse::cmd_train_bm(config_of(cfg), arg(data_dir, "data_dir"),
                                          arg(out_ckpt, "out_ckpt"), emit));
  });
}

ff_status ff_train_fusion(const ff_config* cfg, const char* data_dir, const char* bm_ckpt,
                          const char* out_ckpt, ff_train_summary* summary) {
  return guarded([&] {
    fill(summary, focusfuse::cmd_train_fusion(config_of(cfg), arg(data_dir, "data_dir"),
                                              bm_ckpt ? bm_ckpt : "", arg(out_ckpt, "out_ckpt"),
                                              emit));
  });
}

ff_status ff_fuser_open(const char* bm_ckpt, const char* gen_ckpt, ff_fuser** out) {
  return guarded([&] {
    if (!out) throw focusfuse::UsageError("output handle pointer must not be null");
    *out = new ff_fuser{focusfuse::Fuser(arg(bm_ckpt, "bm_ckpt"), arg(gen_ckpt, "gen_ckpt"))};
  });
}

void ff_fuser_free(ff_fuser* fuser) { delete fuser; }

int ff_fuser_layers(const ff_fuser* fuser) { return fuser ? fuser->impl.k() : 0; }

ff_status ff_fuse(const ff_fuser* fuser, const ff_config* cfg, const char* const* inputs,
                  int n_inputs, const char* out_path) {
  return guarded([&] {
    if (!fuser) throw focusfuse::UsageError("fuser handle must not be null");
    focusfuse::cmd_fuse(config_of(cfg), fuser->impl, path_list(inputs, n_inputs),
                        arg(out_path, "out_path"), emit);
  });
}

ff_status ff_wsi_fuse(const ff_fuser* fuser, const ff_config* cfg, const char* const* inputs,
                      int n_inputs, const char* out_path, ff_wsi_summary* summary) {
  return guarded([&] {
    if (!fuser) throw focusfuse::UsageError("fuser handle must not be null");
    const auto s = focusfuse::cmd_wsi_fuse(config_of(cfg), fuser->impl,
                                           path_list(inputs, n_inputs), arg(out_path, "out_path"),
                                           emit);
    if (summary) {
      *summary = ff_wsi_summary{s.width, s.height, s.tiles, s.tiles_x, s.tiles_y, s.seconds,
                                static_cast<int64_t>(s.accumulator_bytes)};
    }
  });
}

ff_status ff_evaluate(const ff_config* cfg, const char* pred_dir, const char* truth_dir,
                      const char* out_csv, ff_eval_summary* summary) {
  return guarded([&] {
    const auto r = focusfuse::cmd_evaluate(config_of(cfg), arg(pred_dir, "pred_dir"),
                                           arg(truth_dir, "truth_dir"), arg(out_csv, "out_csv"),
                                           emit);
    if (summary) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      *summary = ff_eval_summary{static_cast<int64_t>(r.rows.size()), r.mean_ssim.value_or(nan),
                                 r.mean_cc.value_or(nan), r.mean_qmi.value_or(nan),
                                 r.excluded_ssim, r.excluded_cc, r.excluded_qmi};
    }
  });
}

ff_status ff_gradcheck(const ff_config* cfg) {
  return guarded([&] {
    if (!focusfuse::cmd_gradcheck(config_of(cfg), emit)) {
      throw focusfuse::NumericalError("gradient suite has failing lines");
    }
  });
}

}  // extern "C"
