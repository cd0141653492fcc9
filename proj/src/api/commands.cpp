#include "api/commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "common/error.hpp"
#include "degrade/dataset.hpp"
#include "image/png_io.hpp"
#include "json.hpp"
#include "nets/grad_suite.hpp"

namespace focusfuse {
namespace fs = std::filesystem;
namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

void check_output(const std::string& path, const RunConfig& cfg) {
  if (!cfg.get_bool("force") && fs::exists(path)) {
    throw UsageError("'" + path + "' already exists (use --force to overwrite)");
  }
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw IoError("output directory '" + parent.string() + "' does not exist");
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
    throw IoError("cannot write '" + path + "'");
  }
}

int64_t total_iterations(const RunConfig& cfg, int64_t per_epoch_default) {
  const int64_t explicit_iters = cfg.get_int("iterations");
  if (explicit_iters < 0) throw UsageError("iterations must be >= 0");
  return explicit_iters > 0 ? explicit_iters : per_epoch_default;
}

Image pad_to(const Image& img, int multiple) {
  const int w = std::max(multiple, (img.width + multiple - 1) / multiple * multiple);
  const int h = std::max(multiple, (img.height + multiple - 1) / multiple * multiple);
  return w == img.width && h == img.height ? img : pad_replicate(img, w, h);
}

}  // namespace

std::string sibling_path(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  p.replace_extension();
  return p.string() + suffix;
}

std::string run_manifest(const std::string& command, const RunConfig& cfg,
                         const std::vector<std::string>& inputs,
                         const std::vector<std::string>& outputs) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = cfg.values();
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

void cmd_synth(const RunConfig& cfg, const std::string& out_dir, int n, const LogFn& log) {
  const auto written = write_synth_images(out_dir, n, cfg.get_int("synth_height"),
                                          cfg.get_int("synth_width"), cfg.get_u64("seed"),
                                          cfg.get_bool("force"));
  write_text((fs::path(out_dir) / "run.json").string(), run_manifest("synth", cfg, {}, written));
  log("wrote " + std::to_string(written.size()) + " images to " + out_dir);
}

void cmd_degrade(const RunConfig& cfg, const std::string& src_dir, const std::string& out_dir,
                 int n, const LogFn& log) {
  if (n < 1) throw UsageError("nothing to generate");
  const auto entries = make_bm_dataset(src_dir, cfg.degrade(), n, out_dir, cfg.get_u64("seed"),
                                       cfg.get_bool("force"));
  std::vector<std::string> outputs{"manifest.jsonl"};
  for (const auto& e : entries) {
    outputs.push_back(e.blurred_path);
    outputs.push_back(e.mask_path);
  }
  write_text((fs::path(out_dir) / "run.json").string(),
             run_manifest("degrade", cfg, {src_dir}, outputs));
  log("wrote " + std::to_string(entries.size()) + " blurred/mask pairs to " + out_dir);
}

void cmd_make_fusion_data(const RunConfig& cfg, const std::string& src_dir,
                          const std::string& root, const LogFn& log) {
  const int k = cfg.generator().k_layers;
  make_fusion_dataset(src_dir, cfg.degrade(), k, root, cfg.get_u64("seed"), cfg.get_bool("force"));
  write_text((fs::path(root) / "run.json").string(),
             run_manifest("make-fusion-data", cfg, {src_dir}, {root}));
  log("wrote a k=" + std::to_string(k) + " fusion dataset to " + root);
}

TrainSummary cmd_train_bm(const RunConfig& cfg, const std::string& data_dir,
                          const std::string& out, const LogFn& log) {
  const std::string history = sibling_path(out, ".history.csv");
  const std::string manifest = sibling_path(out, ".run.json");
  check_output(out, cfg);
  check_output(history, cfg);
  const auto t0 = Clock::now();
  BmTrainer trainer(read_bm_dataset(data_dir), cfg.blur_model(), cfg.train());
  const int64_t iters = total_iterations(cfg, trainer.total_iterations());
  const int every = std::max(1, cfg.get_int("log_every"));
  TrainSummary s;
  for (int64_t i = 0; i < iters; ++i) {
    const BmHistoryRow row = trainer.step();
    if (i == 0) s.first_loss = row.loss;
    s.final_loss = row.loss;
    if (i % every == 0 || i + 1 == iters) {
      log("iter " + std::to_string(row.iteration) + " epoch " + std::to_string(row.epoch) +
          " loss " + fmt("%.5f", row.loss) + " batch_acc " + fmt("%.4f", row.accuracy));
    }
  }
  s.iterations = iters;
  s.final_metric = trainer.training_accuracy();
  trainer.save(out);
  write_text(history, bm_history_csv(trainer.history()));
  write_text(manifest, run_manifest("train-bm", cfg, {data_dir}, {out, history}));
  s.seconds = since(t0);
  log("training pixel accuracy " + fmt("%.4f", s.final_metric) + " after " +
      std::to_string(iters) + " iterations");
  return s;
}

TrainSummary cmd_train_fusion(const RunConfig& cfg, const std::string& data_dir,
                              const std::string& bm_path, const std::string& out,
                              const LogFn& log) {
  if (bm_path.empty()) {
    throw UsageError("train-fusion needs a trained blur model checkpoint (--bm)");
  }
  const std::string history = sibling_path(out, ".history.csv");
  const std::string manifest = sibling_path(out, ".run.json");
  check_output(out, cfg);
  check_output(history, cfg);
  const auto t0 = Clock::now();
  const TrainConfig tc = cfg.train();
  const GeneratorConfig gen = cfg.generator();
  const LoadedBlurModel bm = load_blur_model(bm_path);
  FusionDataset data = read_fusion_dataset(data_dir, gen.k_layers);
  if (tc.use_masks && !data.has_masks) {
    compute_masks(bm.params, bm.config, data.samples);
    log("computed blur masks for " + std::to_string(data.samples.size()) + " samples");
  }
  FusionTrainer trainer(std::move(data.samples), gen, cfg.discriminator(), tc);
  const int64_t iters = total_iterations(cfg, trainer.total_iterations());
  const int every = std::max(1, cfg.get_int("log_every"));
  TrainSummary s;
  s.first_loss = trainer.dataset_content_loss();
  for (int64_t i = 0; i < iters; ++i) {
    const HistoryRow row = trainer.step();
    if (i % every == 0 || i + 1 == iters) {
      log("iter " + std::to_string(row.iteration) + " epoch " + std::to_string(row.epoch) +
          " l_content " + fmt("%.5f", row.l_content) + " l_adv " + fmt("%.4f", row.l_adv) +
          " l_d " + fmt("%.4f", row.l_d));
    }
  }
  s.iterations = iters;
  s.final_loss = trainer.dataset_content_loss();
  s.final_metric = s.final_loss;
  trainer.save(out);
  write_text(history, history_csv(trainer.history()));
  write_text(manifest, run_manifest("train-fusion", cfg, {data_dir, bm_path}, {out, history}));
  s.seconds = since(t0);
  log("dataset content loss " + fmt("%.5f", s.first_loss) + " -> " + fmt("%.5f", s.final_loss));
  return s;
}

Fuser::Fuser(const std::string& bm_path, const std::string& gen_path)
    : bm_(load_blur_model(bm_path)), gen_(load_generator(gen_path)) {}

Image Fuser::fuse(const std::vector<Image>& layers) const {
  if (static_cast<int>(layers.size()) != k()) {
    throw UsageError("generator expects " + std::to_string(k()) + " focus layer(s), got " +
                     std::to_string(layers.size()));
  }
  SamplePair s;
  for (const Image& l : layers) {
    if (!l.same_shape(layers.front()) || l.channels != 3) {
      throw ShapeError("focus layers are not aligned: " + layers.front().shape_str() + " vs " +
                       l.shape_str());
    }
    s.layers.push_back(pad_to(l, 64));
    if (gen_.use_masks) s.masks.push_back(predict_mask(bm_.params, bm_.config, s.layers.back()));
  }
  s.target = Image(3, s.layers.front().height, s.layers.front().width);
  const Image out = fuse_sample(gen_.params, gen_.config, s, gen_.use_masks);
  const Image& first = layers.front();
  return out.width == first.width && out.height == first.height
             ? out
             : crop(out, 0, 0, first.width, first.height);
}

void cmd_fuse(const RunConfig& cfg, const Fuser& fuser, const std::vector<std::string>& inputs,
              const std::string& out, const LogFn& log) {
  check_output(out, cfg);
  std::vector<Image> layers;
  for (const auto& p : inputs) layers.push_back(read_png(p, 3));
  write_png(out, fuser.fuse(layers));
  write_text(sibling_path(out, ".run.json"), run_manifest("fuse", cfg, inputs, {out}));
  log("wrote " + out);
}

WsiSummary cmd_wsi_fuse(const RunConfig& cfg, const Fuser& fuser,
                        const std::vector<std::string>& inputs, const std::string& out,
                        const LogFn& log) {
  check_output(out, cfg);
  if (static_cast<int>(inputs.size()) != fuser.k()) {
    throw UsageError("generator expects " + std::to_string(fuser.k()) + " aligned input(s), got " +
                     std::to_string(inputs.size()));
  }
  const int tile = cfg.get_int("tile");
  if (tile % 64 != 0) throw UsageError("tile must be a multiple of 64");
  const WsiSummary s = fuse_wsi(inputs, out, [&](const std::vector<Image>& l) { return fuser.fuse(l); },
                                tile, cfg.get_int("overlap"));
  write_text(sibling_path(out, ".run.json"), run_manifest("wsi-fuse", cfg, inputs, {out}));
  log("fused " + std::to_string(s.width) + "x" + std::to_string(s.height) + " in " +
      std::to_string(s.tiles) + " tiles (" + std::to_string(s.tiles_x) + " x " +
      std::to_string(s.tiles_y) + "), " + fmt("%.1f", s.seconds) + " s, accumulator " +
      std::to_string(s.accumulator_bytes) + " bytes");
  return s;
}

EvalReport cmd_evaluate(const RunConfig& cfg, const std::string& pred_dir,
                        const std::string& truth_dir, const std::string& out_csv,
                        const LogFn& log) {
  check_output(out_csv, cfg);
  const EvalReport r = evaluate_dirs(pred_dir, truth_dir, cfg.metrics());
  write_text(out_csv, report_csv(r));
  write_text(sibling_path(out_csv, ".run.json"),
             run_manifest("evaluate", cfg, {pred_dir, truth_dir}, {out_csv}));
  log(report_table(r));
  return r;
}

bool cmd_gradcheck(const RunConfig& cfg, const LogFn& log) {
  GradSuiteOptions opt;
  opt.seeds = cfg.get_int("grad_seeds");
  opt.coords_per_tensor = cfg.get_int("grad_coords");
  opt.seed = cfg.get_u64("seed");
  bool ok = true;
  for (const auto& line : run_gradient_suite(opt)) {
    ok &= line.passed();
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%s %-28s max_rel_err %.3e  tol %.0e  coords %lld",
                  line.passed() ? "PASS" : "FAIL", line.name.c_str(), line.max_rel_error,
                  line.tolerance, static_cast<long long>(line.coords_checked));
    log(buf);
  }
  return ok;
}

}  // namespace focusfuse
