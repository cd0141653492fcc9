#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "focusfuse_test_cli";

// Runs the CLI inside `dir` and returns its exit status.
int run(const fs::path& dir, const std::string& args) {
  const std::string cmd =
      "cd '" + dir.string() + "' && '" FOCUSFUSE_CLI "' --quiet " + args + " 2>stderr.txt";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kSmall =
    "--set bm_encoder_widths=4,8,8 --set bm_aspp_width=8 --set gen_base_width=4 "
    "--set gen_growth_rate=4 --set disc_widths=4,4,8,8,8,8,8,8";

// The full command chain with relative paths, so two runs in different
// directories must agree byte for byte, manifests included.
void pipeline(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string small = kSmall;
  REQUIRE(run(dir, "synth --out src --n 3 --height 64 --width 64 --seed 5") == 0);
  REQUIRE(run(dir, "degrade --src src --out bmd --n 6 --seed 6") == 0);
  REQUIRE(run(dir, "make-fusion-data --src src --out fd --k 1 --seed 7") == 0);
  REQUIRE(run(dir, "train-bm --data bmd --out bm.ffc --iterations 3 " + small) == 0);
  REQUIRE(run(dir, "train-fusion --data fd --bm bm.ffc --out g.ffc --k 1 --iterations 3 " +
                       small) == 0);
  REQUIRE(run(dir, "fuse --input fd/layer_0/001.png --bm bm.ffc --gen g.ffc --out fused.png") == 0);
  REQUIRE(run(dir, "wsi-fuse --input src/0000.png --bm bm.ffc --gen g.ffc --out wsi.tif "
                   "--tile 64 --overlap 16") == 0);
  REQUIRE(run(dir, "evaluate --pred fd/layer_0 --truth fd/target --out eval.csv") == 0);
}

}  // namespace

TEST_CASE("every command is byte-identical when repeated") {
  const fs::path a = kRoot / "a", b = kRoot / "b";
  pipeline(a);
  pipeline(b);
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    INFO(rel.string());
    REQUIRE(fs::exists(b / rel));
    CHECK(slurp(e.path()) == slurp(b / rel));
    ++files;
  }
  CHECK(files > 30);
  CHECK(slurp(a / "g.history.csv").rfind("iteration,epoch,l_content,l_adv,l_d,lr_g,lr_d\n", 0) == 0);
  CHECK(slurp(a / "g.run.json").find("\"lambda_adv\": \"0.001\"") != std::string::npos);
}

TEST_CASE("exit codes and messages") {
  const fs::path dir = kRoot / "errors";
  fs::remove_all(dir);
  fs::create_directories(dir);
  CHECK(run(dir, "synth --out src --n 2 --height 64 --width 64") == 0);

  CHECK(run(dir, "degrade --src src --out d --n 0") == 1);
  CHECK(slurp(dir / "stderr.txt") == "error: nothing to generate\n");

  CHECK(run(dir, "synth --out src --n 2 --height 64 --width 64") == 1);
  CHECK(slurp(dir / "stderr.txt").find("--force") != std::string::npos);
  CHECK(run(dir, "synth --out src --n 2 --height 64 --width 64 --force") == 0);

  CHECK(run(dir, "make-fusion-data --src src --out fd --k 3") == 0);
  fs::remove_all(dir / "fd" / "layer_m1");
  fs::remove_all(dir / "fd" / "layer_p1");
  std::ofstream(dir / "bm.ffc") << "not a checkpoint";
  CHECK(run(dir, "train-fusion --data fd --bm bm.ffc --out g.ffc --k 3") == 1);

  CHECK(run(dir, "train-bm --data src --out x.ffc --set nope=1") == 1);
  CHECK(slurp(dir / "stderr.txt").find("nope") != std::string::npos);
  CHECK(run(dir, "train-bm --data src --out x.ffc --set lr_bm") == 1);
  CHECK(run(dir, "no-such-command") == 1);
  CHECK(run(dir, "--help >/dev/null") == 0);
}

TEST_CASE("config file is applied and flags override it") {
  const fs::path dir = kRoot / "config";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "run.cfg") << "# synthetic sizes\nsynth_height = 64\nsynth_width = 96\nseed = 3\n";
  REQUIRE(run(dir, "synth --config run.cfg --out s --n 1 --width 128") == 0);
  const std::string manifest = slurp(dir / "s" / "run.json");
  CHECK(manifest.find("\"synth_height\": \"64\"") != std::string::npos);
  CHECK(manifest.find("\"synth_width\": \"128\"") != std::string::npos);
  CHECK(manifest.find("\"seed\": \"3\"") != std::string::npos);
}
