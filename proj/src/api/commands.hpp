#pragma once

#include <functional>
#include <string>
#include <vector>

#include "api/run_config.hpp"
#include "metrics/metrics.hpp"
#include "train/trainer.hpp"
#include "wsi/wsi.hpp"

// Command implementations behind the C API. Each writes its artifacts, a
// run manifest with the full resolved configuration, and reports progress
// through `log`.
namespace focusfuse {

using LogFn = std::function<void(const std::string&)>;

struct TrainSummary {
  int64_t iterations = 0;
  double first_loss = 0.0;
  double final_loss = 0.0;
  // Blur model: training-set pixel accuracy. Fusion: dataset content loss.
  double final_metric = 0.0;
  double seconds = 0.0;
};

// `model.ffc` -> `model<suffix>` (history CSV, run manifest).
std::string sibling_path(const std::string& path, const std::string& suffix);

// JSON run manifest: command, resolved config, inputs and outputs.
std::string run_manifest(const std::string& command, const RunConfig& cfg,
                         const std::vector<std::string>& inputs,
                         const std::vector<std::string>& outputs);

void cmd_synth(const RunConfig& cfg, const std::string& out_dir, int n, const LogFn& log);
void cmd_degrade(const RunConfig& cfg, const std::string& src_dir, const std::string& out_dir,
                 int n, const LogFn& log);
void cmd_make_fusion_data(const RunConfig& cfg, const std::string& src_dir,
                          const std::string& root, const LogFn& log);
TrainSummary cmd_train_bm(const RunConfig& cfg, const std::string& data_dir,
                          const std::string& out, const LogFn& log);
TrainSummary cmd_train_fusion(const RunConfig& cfg, const std::string& data_dir,
                              const std::string& bm_path, const std::string& out,
                              const LogFn& log);

// Frozen blur model plus generator, ready for inference.
class Fuser {
 public:
  Fuser(const std::string& bm_path, const std::string& gen_path);

  int k() const { return gen_.config.k_layers; }
  // Layers must share one size; it is padded by edge replication to a
  // multiple of 64 and cropped back afterwards.
  Image fuse(const std::vector<Image>& layers) const;

 private:
  LoadedBlurModel bm_;
  LoadedGenerator gen_;
};

void cmd_fuse(const RunConfig& cfg, const Fuser& fuser, const std::vector<std::string>& inputs,
              const std::string& out, const LogFn& log);
WsiSummary cmd_wsi_fuse(const RunConfig& cfg, const Fuser& fuser,
                        const std::vector<std::string>& inputs, const std::string& out,
                        const LogFn& log);
EvalReport cmd_evaluate(const RunConfig& cfg, const std::string& pred_dir,
                        const std::string& truth_dir, const std::string& out_csv,
                        const LogFn& log);
// True when every line passes.
bool cmd_gradcheck(const RunConfig& cfg, const LogFn& log);

}  // namespace focusfuse
