#include "api/run_config.hpp"

#include <charconv>
#include <fstream>

#include "common/error.hpp"

namespace focusfuse {
namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

RunConfig::RunConfig() {
  const TrainConfig t;
  const DegradeConfig d;
  const MetricConfig m;
  const GeneratorConfig g;
  const DiscriminatorConfig disc;
  const BlurModelConfig bm;
  values_ = {
      {"lambda_adv", num(t.lambda_adv)},
      {"lr_g", num(t.lr_g)},
      {"lr_d", num(t.lr_d)},
      {"lr_bm", num(t.lr_bm)},
      {"lr_decay", num(t.lr_decay)},
      {"batch_bm", std::to_string(t.batch_bm)},
      {"batch_fusion", std::to_string(t.batch_fusion)},
      {"adam_beta1", num(t.adam_beta1)},
      {"adam_beta2", num(t.adam_beta2)},
      {"adam_eps", num(t.adam_eps)},
      {"epochs", std::to_string(t.epochs)},
      {"iterations_per_epoch", std::to_string(t.iterations_per_epoch)},
      {"iterations", "0"},
      {"seed", "0"},
      {"update_discriminator", "true"},
      {"use_masks", "true"},
      {"min_regions", std::to_string(d.min_regions)},
      {"max_regions", std::to_string(d.max_regions)},
      {"min_area", num(d.min_area)},
      {"max_area", num(d.max_area)},
      {"min_sigma", num(d.min_sigma)},
      {"max_sigma", num(d.max_sigma)},
      {"feather", std::to_string(d.feather)},
      {"k1", num(m.k1)},
      {"k2", num(m.k2)},
      {"metric_range", num(m.range)},
      {"bins", std::to_string(m.bins)},
      {"k", std::to_string(g.k_layers)},
      {"gen_base_width", std::to_string(g.base_width)},
      {"gen_growth_rate", std::to_string(g.growth_rate)},
      {"gen_scales", std::to_string(g.n_scales)},
      {"gen_dense_layers", std::to_string(g.dense_layers_per_block)},
      {"gen_blocks", std::to_string(g.blocks_per_stage)},
      {"disc_widths", join(disc.widths)},
      {"bm_encoder_widths", join(bm.encoder_widths)},
      {"bm_aspp_rates", join(bm.aspp_rates)},
      {"bm_aspp_width", std::to_string(bm.aspp_width)},
      {"tile", "512"},
      {"overlap", "128"},
      {"synth_height", "512"},
      {"synth_width", "512"},
      {"cell_spacing", "28"},
      {"grad_seeds", "5"},
      {"grad_coords", "10"},
      {"log_every", "50"},
      {"force", "false"},
  };
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown configuration key '" + key + "'");
  it->second = trim(value);
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown configuration key '" + key + "'");
  return it->second;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    set(trim(t.substr(0, eq)), t.substr(eq + 1));
  }
}

int RunConfig::get_int(const std::string& key) const {
  const std::string& s = get(key);
  int v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw UsageError("'" + key + "' must be an integer, got '" + s + "'");
  }
  return v;
}

uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& s = get(key);
  uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw UsageError("'" + key + "' must be a non-negative integer, got '" + s + "'");
  }
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& s = get(key);
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw UsageError("'" + key + "' must be a number, got '" + s + "'");
  }
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw UsageError("'" + key + "' must be true or false, got '" + s + "'");
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  const std::string& s = get(key);
  std::vector<int> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t end = s.find(',', start);
    if (end == std::string::npos) end = s.size();
    const std::string item = trim(s.substr(start, end - start));
    int v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || p != item.data() + item.size()) {
      throw UsageError("'" + key + "' must be a comma-separated integer list, got '" + s + "'");
    }
    out.push_back(v);
    start = end + 1;
  }
  return out;
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.lambda_adv = get_double("lambda_adv");
  t.lr_g = get_double("lr_g");
  t.lr_d = get_double("lr_d");
  t.lr_bm = get_double("lr_bm");
  t.lr_decay = get_double("lr_decay");
  t.batch_bm = get_int("batch_bm");
  t.batch_fusion = get_int("batch_fusion");
  t.adam_beta1 = get_double("adam_beta1");
  t.adam_beta2 = get_double("adam_beta2");
  t.adam_eps = get_double("adam_eps");
  t.epochs = get_int("epochs");
  t.iterations_per_epoch = get_int("iterations_per_epoch");
  t.seed = get_u64("seed");
  t.update_discriminator = get_bool("update_discriminator");
  t.use_masks = get_bool("use_masks");
  t.validate();
  return t;
}

DegradeConfig RunConfig::degrade() const {
  DegradeConfig d;
  d.min_regions = get_int("min_regions");
  d.max_regions = get_int("max_regions");
  d.min_area = get_double("min_area");
  d.max_area = get_double("max_area");
  d.min_sigma = get_double("min_sigma");
  d.max_sigma = get_double("max_sigma");
  d.feather = get_int("feather");
  d.validate();
  return d;
}

MetricConfig RunConfig::metrics() const {
  MetricConfig m;
  m.k1 = get_double("k1");
  m.k2 = get_double("k2");
  m.range = get_double("metric_range");
  m.bins = get_int("bins");
  m.validate();
  return m;
}

GeneratorConfig RunConfig::generator() const {
  GeneratorConfig g;
  g.k_layers = get_int("k");
  if (g.k_layers != 1 && g.k_layers != 3) throw UsageError("k must be 1 or 3");
  g.base_width = get_int("gen_base_width");
  g.growth_rate = get_int("gen_growth_rate");
  g.n_scales = get_int("gen_scales");
  g.dense_layers_per_block = get_int("gen_dense_layers");
  g.blocks_per_stage = get_int("gen_blocks");
  g.validate();
  return g;
}

DiscriminatorConfig RunConfig::discriminator() const {
  DiscriminatorConfig d;
  d.widths = get_int_list("disc_widths");
  d.validate();
  return d;
}

BlurModelConfig RunConfig::blur_model() const {
  BlurModelConfig b;
  b.encoder_widths = get_int_list("bm_encoder_widths");
  b.aspp_rates = get_int_list("bm_aspp_rates");
  b.aspp_width = get_int("bm_aspp_width");
  b.validate();
  return b;
}

}  // namespace focusfuse
