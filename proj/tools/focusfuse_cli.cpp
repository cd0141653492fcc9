#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "focusfuse/focusfuse.h"

namespace {

// 0 success, 1 usage or data error, 2 numerical failure.
int exit_code(ff_status s) {
  if (s == FF_OK) return 0;
  std::fprintf(stderr, "error: %s\n", ff_last_error());
  return s == FF_ERR_NUMERICAL ? 2 : 1;
}

void print_line(const char* msg, void*) {
  std::fputs(msg, stdout);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  std::map<std::string, std::string> flags;
  bool force = false;
};

class ConfigHandle {
 public:
  ConfigHandle() = default;
  ~ConfigHandle() { ff_config_free(cfg_); }
  ConfigHandle(const ConfigHandle&) = delete;
  ConfigHandle& operator=(const ConfigHandle&) = delete;

  // File first, then --set overrides, then dedicated flags.
  ff_status build(const Common& c) {
    if (ff_status s = ff_config_new(&cfg_); s != FF_OK) return s;
    if (!c.config_file.empty()) {
      if (ff_status s = ff_config_load_file(cfg_, c.config_file.c_str()); s != FF_OK) return s;
    }
    for (const auto& kv : c.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "error: --set expects KEY=VALUE, got '%s'\n", kv.c_str());
        return FF_ERR_USAGE;
      }
      const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
      if (ff_status s = ff_config_set(cfg_, key.c_str(), value.c_str()); s != FF_OK) return s;
    }
    for (const auto& [k, v] : c.flags) {
      if (ff_status s = ff_config_set(cfg_, k.c_str(), v.c_str()); s != FF_OK) return s;
    }
    if (c.force) return ff_config_set(cfg_, "force", "true");
    return FF_OK;
  }

  const ff_config* get() const { return cfg_; }

 private:
  ff_config* cfg_ = nullptr;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_file, "key = value configuration file")
      ->check(CLI::ExistingFile);
  sub->add_option("--set", c.overrides, "override one configuration key (KEY=VALUE)");
  sub->add_flag("--force", c.force, "overwrite existing outputs");
}

// A flag that writes straight into a configuration key when given.
void add_key(CLI::App* sub, Common& c, const std::string& flag, const std::string& key,
             const std::string& help) {
  sub->add_option_function<std::string>(
      flag, [&c, key](const std::string& v) { c.flags[key] = v; }, help);
}

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-focus image fusion toolkit"};
  app.set_version_flag("--version", std::string(ff_version()));
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress output");

  Common c;
  std::string src, out, data, bm, gen, pred, truth;
  std::vector<std::string> inputs;
  int n = 0;

  auto* synth = app.add_subcommand("synth", "write synthetic sharp cytology-like images");
  add_common(synth, c);
  synth->add_option("--out", out, "output directory")->required();
  synth->add_option("--n", n, "number of images")->required();
  add_key(synth, c, "--seed", "seed", "random seed");
  add_key(synth, c, "--height", "synth_height", "image height");
  add_key(synth, c, "--width", "synth_width", "image width");

  auto* degrade = app.add_subcommand("degrade", "make blurred/mask pairs for the blur model");
  add_common(degrade, c);
  degrade->add_option("--src", src, "directory of sharp PNG images")->required();
  degrade->add_option("--out", out, "output directory")->required();
  degrade->add_option("--n", n, "number of pairs")->required();
  add_key(degrade, c, "--seed", "seed", "random seed");

  auto* fusion_data = app.add_subcommand("make-fusion-data", "make a synthetic fusion dataset");
  add_common(fusion_data, c);
  fusion_data->add_option("--src", src, "directory of sharp PNG images")->required();
  fusion_data->add_option("--out", out, "dataset root")->required();
  add_key(fusion_data, c, "--k", "k", "focus layers per sample (1 or 3)");
  add_key(fusion_data, c, "--seed", "seed", "random seed");

  auto* train_bm = app.add_subcommand("train-bm", "train the blur recognition model");
  add_common(train_bm, c);
  train_bm->add_option("--data", data, "directory written by degrade")->required();
  train_bm->add_option("--out", out, "output checkpoint")->required();
  add_key(train_bm, c, "--epochs", "epochs", "number of epochs");
  add_key(train_bm, c, "--iterations", "iterations", "total iterations (overrides epochs)");
  add_key(train_bm, c, "--seed", "seed", "random seed");

  auto* train_fusion = app.add_subcommand("train-fusion", "train the fusion generator and discriminator");
  add_common(train_fusion, c);
  train_fusion->add_option("--data", data, "fusion dataset root")->required();
  train_fusion->add_option("--bm", bm, "trained blur model checkpoint")->required();
  train_fusion->add_option("--out", out, "output checkpoint")->required();
  add_key(train_fusion, c, "--k", "k", "focus layers per sample (1 or 3)");
  add_key(train_fusion, c, "--epochs", "epochs", "number of epochs");
  add_key(train_fusion, c, "--iterations", "iterations", "total iterations (overrides epochs)");
  add_key(train_fusion, c, "--seed", "seed", "random seed");

  auto* fuse = app.add_subcommand("fuse", "fuse one to three focus layers into one image");
  add_common(fuse, c);
  fuse->add_option("--input", inputs, "focus layer PNG(s), comma separated")
      ->required()
      ->delimiter(',');
  fuse->add_option("--bm", bm, "blur model checkpoint")->required();
  fuse->add_option("--gen", gen, "generator checkpoint")->required();
  fuse->add_option("--out", out, "output PNG")->required();

  auto* wsi = app.add_subcommand("wsi-fuse", "fuse a whole-slide image tile by tile");
  add_common(wsi, c);
  wsi->add_option("--input", inputs, "aligned big image(s), comma separated")
      ->required()
      ->delimiter(',');
  wsi->add_option("--bm", bm, "blur model checkpoint")->required();
  wsi->add_option("--gen", gen, "generator checkpoint")->required();
  wsi->add_option("--out", out, "output image (.png, or .tif for tiled BigTIFF)")->required();
  add_key(wsi, c, "--tile", "tile", "tile size");
  add_key(wsi, c, "--overlap", "overlap", "tile overlap");

  auto* evaluate = app.add_subcommand("evaluate", "score fused images against ground truth");
  add_common(evaluate, c);
  evaluate->add_option("--pred", pred, "directory of fused images")->required();
  evaluate->add_option("--truth", truth, "directory of ground-truth images")->required();
  evaluate->add_option("--out", out, "metrics CSV")->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "run the finite-difference gradient suite");
  add_common(gradcheck, c);
  add_key(gradcheck, c, "--seed", "seed", "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (!quiet) ff_set_log_callback(print_line, nullptr);
  ConfigHandle cfg;
  if (ff_status s = cfg.build(c); s != FF_OK) return exit_code(s);

  if (*synth) return exit_code(ff_synth(cfg.get(), out.c_str(), n));
  if (*degrade) return exit_code(ff_degrade(cfg.get(), src.c_str(), out.c_str(), n));
  if (*fusion_data) return exit_code(ff_make_fusion_data(cfg.get(), src.c_str(), out.c_str()));
  if (*train_bm) return exit_code(ff_train_bm(cfg.get(), data.c_str(), out.c_str(), nullptr));
  if (*train_fusion) {
    return exit_code(ff_train_fusion(cfg.get(), data.c_str(), bm.c_str(), out.c_str(), nullptr));
  }
  if (*fuse || *wsi) {
    ff_fuser* fuser = nullptr;
    if (ff_status s = ff_fuser_open(bm.c_str(), gen.c_str(), &fuser); s != FF_OK) {
      return exit_code(s);
    }
    const auto paths = c_strings(inputs);
    const int n_in = static_cast<int>(paths.size());
    const ff_status s = *fuse ? ff_fuse(fuser, cfg.get(), paths.data(), n_in, out.c_str())
                              : ff_wsi_fuse(fuser, cfg.get(), paths.data(), n_in, out.c_str(),
                                            nullptr);
    ff_fuser_free(fuser);
    return exit_code(s);
  }
  if (*evaluate) {
    return exit_code(ff_evaluate(cfg.get(), pred.c_str(), truth.c_str(), out.c_str(), nullptr));
  }
  return exit_code(ff_gradcheck(cfg.get()));
}
