#ifndef FOCUSFUSE_FOCUSFUSE_H
#define FOCUSFUSE_FOCUSFUSE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FF_API __declspec(dllexport)
#else
#define FF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ff_status {
  FF_OK = 0,
  FF_ERR_USAGE = 1,
  FF_ERR_SHAPE = 2,
  FF_ERR_IO = 3,
  FF_ERR_FORMAT = 4,
  FF_ERR_NUMERICAL = 5,
  FF_ERR_INTERNAL = 6
} ff_status;

typedef struct ff_config ff_config;
typedef struct ff_fuser ff_fuser;

typedef void (*ff_log_fn)(const char* message, void* user);

typedef struct ff_train_summary {
  int64_t iterations;
  double first_loss;
  double final_loss;
  /* Blur model: training pixel accuracy. Fusion: dataset content loss. */
  double final_metric;
  double seconds;
} ff_train_summary;

typedef struct ff_wsi_summary {
  int64_t width;
  int64_t height;
  int64_t tiles;
  int64_t tiles_x;
  int64_t tiles_y;
  double seconds;
  int64_t accumulator_bytes;
} ff_wsi_summary;

/* Means are NaN when every value of that metric was undefined. */
typedef struct ff_eval_summary {
  int64_t images;
  double ssim;
  double cc;
  double qmi;
  int64_t ssim_excluded;
  int64_t cc_excluded;
  int64_t qmi_excluded;
} ff_eval_summary;

/* Message of the last failed call on this thread; empty after success. */
FF_API const char* ff_last_error(void);
FF_API const char* ff_version(void);
/* Progress lines from every command go to fn; NULL silences them. */
FF_API void ff_set_log_callback(ff_log_fn fn, void* user);

FF_API ff_status ff_config_new(ff_config** out);
FF_API void ff_config_free(ff_config* cfg);
FF_API ff_status ff_config_set(ff_config* cfg, const char* key, const char* value);
/* The returned string lives until the next call on cfg. */
FF_API ff_status ff_config_get(const ff_config* cfg, const char* key, const char** value);
FF_API ff_status ff_config_load_file(ff_config* cfg, const char* path);
/* All effective values as "key = value" lines, sorted by key. */
FF_API ff_status ff_config_dump(const ff_config* cfg, const char** text);

FF_API ff_status ff_synth(const ff_config* cfg, const char* out_dir, int n);
FF_API ff_status ff_degrade(const ff_config* cfg, const char* src_dir, const char* out_dir, int n);
FF_API ff_status ff_make_fusion_data(const ff_config* cfg, const char* src_dir, const char* root);
FF_API ff_status ff_train_bm(const ff_config* cfg, const char* data_dir, const char* out_ckpt,
                             ff_train_summary* summary);
FF_API ff_status ff_train_fusion(const ff_config* cfg, const char* data_dir, const char* bm_ckpt,
                                 const char* out_ckpt, ff_train_summary* summary);

FF_API ff_status ff_fuser_open(const char* bm_ckpt, const char* gen_ckpt, ff_fuser** out);
FF_API void ff_fuser_free(ff_fuser* fuser);
/* Number of focus layers the generator expects (1 or 3). */
FF_API int ff_fuser_layers(const ff_fuser* fuser);
FF_API ff_status ff_fuse(const ff_fuser* fuser, const ff_config* cfg, const char* const* inputs,
                         int n_inputs, const char* out_path);
FF_API ff_status ff_wsi_fuse(const ff_fuser* fuser, const ff_config* cfg,
                             const char* const* inputs, int n_inputs, const char* out_path,
                             ff_wsi_summary* summary);

FF_API ff_status ff_evaluate(const ff_config* cfg, const char* pred_dir, const char* truth_dir,
                             const char* out_csv, ff_eval_summary* summary);
/* FF_ERR_NUMERICAL when any line of the suite fails. */
FF_API ff_status ff_gradcheck(const ff_config* cfg);

#ifdef __cplusplus
}
#endif

#endif
