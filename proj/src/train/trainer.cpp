#include "train/trainer.hpp"

#include <cmath>
#include <cstdio>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "tensor/ops.hpp"
#include "train/checkpoint.hpp"
#include "train/losses.hpp"

namespace focusfuse {
namespace {

constexpr uint64_t kGenStream = 0x67656e;
constexpr uint64_t kDiscStream = 0x646973;
constexpr uint64_t kBmStream = 0x626d;
constexpr uint64_t kShuffleStream = 0x73687566;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string fmt_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require_finite(double v, const char* what, int64_t iteration) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string(what) + " is not finite at iteration " +
                         std::to_string(iteration));
  }
}

std::vector<size_t> batch_indices(uint64_t seed, int64_t iteration, int64_t per_epoch, int batch,
                                  size_t n) {
  const int epoch = static_cast<int>(iteration / per_epoch);
  const int64_t slot = iteration % per_epoch;
  const std::vector<size_t> order = epoch_order(seed, epoch, n);
  std::vector<size_t> out;
  for (int j = 0; j < batch; ++j) {
    out.push_back(order[static_cast<size_t>((slot * batch + j) % static_cast<int64_t>(n))]);
  }
  return out;
}

int64_t per_epoch(int configured, size_t n, int batch) {
  if (configured > 0) return configured;
  return static_cast<int64_t>((n + static_cast<size_t>(batch) - 1) / static_cast<size_t>(batch));
}

void check_sample(const SamplePair& s, size_t k, bool need_masks) {
  if (s.layers.size() != k) throw UsageError("sample has " + std::to_string(s.layers.size()) +
                                             " layers, expected " + std::to_string(k));
  for (const Image& l : s.layers) {
    if (l.channels != 3 || l.height != s.target.height || l.width != s.target.width) {
      throw ShapeError("focus layer " + l.shape_str() + " does not match target " +
                       s.target.shape_str());
    }
  }
  if (need_masks) {
    if (s.masks.size() != k) throw UsageError("sample is missing blur masks");
    for (const Image& m : s.masks) {
      if (m.channels != 1 || m.height != s.target.height || m.width != s.target.width) {
        throw ShapeError("blur mask " + m.shape_str() + " does not match target " +
                         s.target.shape_str());
      }
    }
  }
}

std::vector<CheckpointRecord> records_of(const NetworkParams& p, const std::string& prefix) {
  std::vector<CheckpointRecord> out;
  for (const auto& [name, t] : p) out.push_back({prefix + name, t});
  return out;
}

void load_records(NetworkParams& p, const std::vector<CheckpointRecord>& records,
                  const std::string& prefix) {
  size_t found = 0;
  for (const auto& r : records) {
    if (r.name.compare(0, prefix.size(), prefix) != 0) continue;
    const std::string name = r.name.substr(prefix.size());
    if (!p.contains(name)) throw FormatError("checkpoint has unknown parameter '" + r.name + "'");
    Tensor& dst = p.at(name);
    if (dst.shape() != r.value.shape()) {
      throw FormatError("checkpoint parameter '" + r.name + "' has shape " +
                        r.value.shape().str() + ", expected " + dst.shape().str());
    }
    std::copy(r.value.data().begin(), r.value.data().end(), dst.data().begin());
    ++found;
  }
  if (found != p.size()) {
    throw FormatError("checkpoint holds " + std::to_string(found) + " of " +
                      std::to_string(p.size()) + " parameters for '" + prefix + "'");
  }
}

AdamSection adam_section(const std::string& label, const AdamState& state,
                         const NetworkParams& p) {
  AdamSection s{label, static_cast<uint64_t>(state.steps()), {}};
  size_t i = 0;
  for (const auto& [name, t] : p) {
    s.records.push_back({"m/" + name, state.first_moments()[i]});
    s.records.push_back({"v/" + name, state.second_moments()[i]});
    ++i;
  }
  return s;
}

void restore_adam(AdamState& state, const Checkpoint& ckpt, const std::string& label,
                  const NetworkParams& p) {
  for (const auto& s : ckpt.adam) {
    if (s.label != label) continue;
    if (s.records.size() != 2 * p.size()) throw FormatError("Adam section '" + label + "' is incomplete");
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    size_t i = 0;
    for (const auto& [name, t] : p) {
      if (s.records[2 * i].name != "m/" + name || s.records[2 * i + 1].name != "v/" + name) {
        throw FormatError("Adam section '" + label + "' does not match parameter '" + name + "'");
      }
      m.push_back(s.records[2 * i].value);
      v.push_back(s.records[2 * i + 1].value);
      ++i;
    }
    state.restore(static_cast<int64_t>(s.step), std::move(m), std::move(v));
    return;
  }
  throw FormatError("checkpoint has no Adam section '" + label + "'");
}

std::pair<std::string, std::string> split_fusion_fingerprint(const std::string& fp) {
  const size_t bar = fp.find('|');
  if (bar == std::string::npos) throw FormatError("not a fusion checkpoint fingerprint: " + fp);
  return {fp.substr(0, bar), fp.substr(bar + 1)};
}

int64_t meta_int(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw FormatError("checkpoint metadata lacks '" + key + "'");
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw FormatError("checkpoint metadata '" + key + "' is not an integer");
  }
}

void require_kind(const Checkpoint& ckpt, const std::string& kind, const std::string& path) {
  auto it = ckpt.metadata.find("kind");
  if (it == ckpt.metadata.end() || it->second != kind) {
    throw FormatError("'" + path + "' is not a " + kind + " checkpoint");
  }
}

}  // namespace

const char* const kHistoryHeader = "iteration,epoch,l_content,l_adv,l_d,lr_g,lr_d";

std::string history_csv(const std::vector<HistoryRow>& rows) {
  std::string out = std::string(kHistoryHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.iteration) + "," + std::to_string(r.epoch) + "," + fmt(r.l_content) +
           "," + fmt(r.l_adv) + "," + fmt(r.l_d) + "," + fmt(r.lr_g) + "," + fmt(r.lr_d) + "\n";
  }
  return out;
}

std::string bm_history_csv(const std::vector<BmHistoryRow>& rows) {
  std::string out = "iteration,epoch,loss,accuracy,lr\n";
  for (const auto& r : rows) {
    out += std::to_string(r.iteration) + "," + std::to_string(r.epoch) + "," + fmt(r.loss) + "," +
           fmt(r.accuracy) + "," + fmt(r.lr) + "\n";
  }
  return out;
}

Tensor stack_images(const std::vector<const Image*>& images) {
  if (images.empty()) throw UsageError("stack_images of an empty batch");
  const Image& first = *images.front();
  Tensor t(Shape{static_cast<int64_t>(images.size()), first.channels, first.height, first.width});
  float* dst = t.ptr();
  for (const Image* img : images) {
    if (!img->same_shape(first)) {
      throw ShapeError("batch mixes image shapes " + first.shape_str() + " and " +
                       img->shape_str());
    }
    dst = std::copy(img->data.begin(), img->data.end(), dst);
  }
  return t;
}

Image tensor_to_image(const Tensor& t, int64_t n) {
  const Shape s = t.shape();
  if (n < 0 || n >= s.n) throw UsageError("tensor_to_image: batch index out of range");
  Image img(static_cast<int>(s.c), static_cast<int>(s.h), static_cast<int>(s.w));
  const float* src = t.ptr() + n * s.c * s.plane();
  std::copy(src, src + img.data.size(), img.data.begin());
  return img;
}

Tensor fusion_input(const std::vector<const SamplePair*>& batch, bool use_masks) {
  if (batch.empty()) throw UsageError("fusion_input of an empty batch");
  const SamplePair& first = *batch.front();
  const size_t k = first.layers.size();
  const int h = first.target.height;
  const int w = first.target.width;
  Tensor t(Shape{static_cast<int64_t>(batch.size()), static_cast<int64_t>(4 * k), h, w});
  const int64_t plane = int64_t{h} * w;
  float* dst = t.ptr();
  for (const SamplePair* s : batch) {
    check_sample(*s, k, use_masks);
    if (s->target.height != h || s->target.width != w) throw ShapeError("batch mixes sizes");
    for (size_t l = 0; l < k; ++l) {
      dst = std::copy(s->layers[l].data.begin(), s->layers[l].data.end(), dst);
      if (use_masks) {
        dst = std::copy(s->masks[l].data.begin(), s->masks[l].data.end(), dst);
      } else {
        dst = std::fill_n(dst, plane, 0.0f);
      }
    }
  }
  return t;
}

Image predict_mask(const NetworkParams& bm, const BlurModelConfig& cfg, const Image& image) {
  const Tensor logits = blur_model_forward(bm, cfg, stack_images({&image}));
  return tensor_to_image(binarize_mask(logits), 0);
}

void compute_masks(const NetworkParams& bm, const BlurModelConfig& cfg,
                   std::vector<SamplePair>& samples) {
  for (SamplePair& s : samples) {
    s.masks.clear();
    for (const Image& layer : s.layers) s.masks.push_back(predict_mask(bm, cfg, layer));
  }
}

std::map<std::string, std::string> train_config_to_kv(const TrainConfig& c) {
  return {
      {"lambda_adv", fmt_exact(c.lambda_adv)},
      {"lr_g", fmt_exact(c.lr_g)},
      {"lr_d", fmt_exact(c.lr_d)},
      {"lr_bm", fmt_exact(c.lr_bm)},
      {"lr_decay", fmt_exact(c.lr_decay)},
      {"batch_bm", std::to_string(c.batch_bm)},
      {"batch_fusion", std::to_string(c.batch_fusion)},
      {"adam_beta1", fmt_exact(c.adam_beta1)},
      {"adam_beta2", fmt_exact(c.adam_beta2)},
      {"adam_eps", fmt_exact(c.adam_eps)},
      {"epochs", std::to_string(c.epochs)},
      {"iterations_per_epoch", std::to_string(c.iterations_per_epoch)},
      {"seed", std::to_string(c.seed)},
      {"update_discriminator", c.update_discriminator ? "1" : "0"},
      {"use_masks", c.use_masks ? "1" : "0"},
  };
}

TrainConfig train_config_from_kv(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  try {
    if (auto v = get("lambda_adv")) c.lambda_adv = std::stod(*v);
    if (auto v = get("lr_g")) c.lr_g = std::stod(*v);
    if (auto v = get("lr_d")) c.lr_d = std::stod(*v);
    if (auto v = get("lr_bm")) c.lr_bm = std::stod(*v);
    if (auto v = get("lr_decay")) c.lr_decay = std::stod(*v);
    if (auto v = get("batch_bm")) c.batch_bm = std::stoi(*v);
    if (auto v = get("batch_fusion")) c.batch_fusion = std::stoi(*v);
    if (auto v = get("adam_beta1")) c.adam_beta1 = std::stod(*v);
    if (auto v = get("adam_beta2")) c.adam_beta2 = std::stod(*v);
    if (auto v = get("adam_eps")) c.adam_eps = std::stod(*v);
    if (auto v = get("epochs")) c.epochs = std::stoi(*v);
    if (auto v = get("iterations_per_epoch")) c.iterations_per_epoch = std::stoi(*v);
    if (auto v = get("seed")) c.seed = std::stoull(*v);
    if (auto v = get("update_discriminator")) c.update_discriminator = *v == "1";
    if (auto v = get("use_masks")) c.use_masks = *v == "1";
  } catch (const std::exception&) {
    throw FormatError("malformed training configuration value");
  }
  c.validate();
  return c;
}

std::vector<size_t> epoch_order(uint64_t seed, int epoch, size_t n) {
  Rng rng(mix_seed(mix_seed(seed, kShuffleStream), static_cast<uint64_t>(epoch)));
  return rng.permutation(n);
}

// ---------------------------------------------------------------------------

BmTrainer::BmTrainer(std::vector<BmSample> data, BlurModelConfig model, TrainConfig cfg)
    : data_(std::move(data)), model_(std::move(model)), cfg_(cfg) {
  cfg_.validate();
  if (data_.empty()) throw UsageError("blur model training needs at least one sample");
  for (const BmSample& s : data_) {
    if (s.image.channels != 3 || s.mask.channels != 1 || s.image.height != s.mask.height ||
        s.image.width != s.mask.width) {
      throw ShapeError("blur model sample " + s.image.shape_str() + " / mask " +
                       s.mask.shape_str() + " is malformed");
    }
  }
  params_ = build_blur_model(model_, mix_seed(cfg_.seed, kBmStream));
  adam_ = AdamState(params_, AdamConfig{cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps});
}

int64_t BmTrainer::iterations_per_epoch() const {
  return per_epoch(cfg_.iterations_per_epoch, data_.size(), cfg_.batch_bm);
}

BmHistoryRow BmTrainer::step() {
  const int64_t ipe = iterations_per_epoch();
  const auto idx = batch_indices(cfg_.seed, iteration_, ipe, cfg_.batch_bm, data_.size());
  std::vector<const Image*> images;
  std::vector<const Image*> masks;
  for (size_t i : idx) {
    images.push_back(&data_[i].image);
    masks.push_back(&data_[i].mask);
  }
  const Tensor x = stack_images(images);
  const Tensor truth = stack_images(masks);

  BmHistoryRow row;
  row.iteration = iteration_;
  row.epoch = static_cast<int>(iteration_ / ipe);
  row.lr = cfg_.lr_bm;
  params_.set_trainable(true);
  {
    Tape tape;
    Tape::Scope scope(tape);
    const Tensor logits = blur_model_forward(params_, model_, x);
    const Tensor loss = bm_loss(logits, truth);
    row.loss = loss.item();
    row.accuracy = pixel_accuracy(logits, truth);
    require_finite(row.loss, "blur model loss", iteration_);
    tape.backward(loss);
  }
  adam_.step(params_, cfg_.lr_bm);
  params_.set_trainable(false);
  ++iteration_;
  history_.push_back(row);
  return row;
}

void BmTrainer::run(int64_t iterations) {
  for (int64_t i = 0; i < iterations; ++i) step();
}

double BmTrainer::training_accuracy() const {
  int64_t hits = 0;
  int64_t total = 0;
  for (const BmSample& s : data_) {
    const Image pred = predict_mask(params_, model_, s.image);
    for (size_t i = 0; i < pred.data.size(); ++i) hits += pred.data[i] == s.mask.data[i];
    total += static_cast<int64_t>(pred.data.size());
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

void BmTrainer::save(const std::string& path) const {
  Checkpoint ckpt;
  ckpt.fingerprint = params_.fingerprint();
  ckpt.records = records_of(params_, "");
  ckpt.adam.push_back(adam_section("bm", adam_, params_));
  ckpt.metadata = train_config_to_kv(cfg_);
  ckpt.metadata["kind"] = "blur_model";
  ckpt.metadata["iteration"] = std::to_string(iteration_);
  write_checkpoint(path, ckpt);
}

BmTrainer BmTrainer::resume(const std::string& path, std::vector<BmSample> data) {
  const Checkpoint ckpt = read_checkpoint(path);
  require_kind(ckpt, "blur_model", path);
  BmTrainer t(std::move(data), blur_model_config_from_fingerprint(ckpt.fingerprint),
              train_config_from_kv(ckpt.metadata));
  require_fingerprint(ckpt, t.params_.fingerprint());
  load_records(t.params_, ckpt.records, "");
  restore_adam(t.adam_, ckpt, "bm", t.params_);
  t.iteration_ = meta_int(ckpt.metadata, "iteration");
  return t;
}

// ---------------------------------------------------------------------------

FusionTrainer::FusionTrainer(std::vector<SamplePair> data, GeneratorConfig gen,
                             DiscriminatorConfig disc, TrainConfig cfg)
    : data_(std::move(data)), gen_cfg_(gen), disc_cfg_(std::move(disc)), cfg_(cfg) {
  cfg_.validate();
  if (data_.empty()) throw UsageError("fusion training needs at least one sample");
  for (const SamplePair& s : data_) {
    check_sample(s, static_cast<size_t>(gen_cfg_.k_layers), cfg_.use_masks);
  }
  gen_ = build_generator(gen_cfg_, mix_seed(cfg_.seed, kGenStream));
  disc_ = build_discriminator(disc_cfg_, mix_seed(cfg_.seed, kDiscStream));
  const AdamConfig adam{cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps};
  adam_g_ = AdamState(gen_, adam);
  adam_d_ = AdamState(disc_, adam);
}

int64_t FusionTrainer::iterations_per_epoch() const {
  return per_epoch(cfg_.iterations_per_epoch, data_.size(), cfg_.batch_fusion);
}

std::vector<const SamplePair*> FusionTrainer::batch_at(int64_t iteration) const {
  std::vector<const SamplePair*> out;
  for (size_t i : batch_indices(cfg_.seed, iteration, iterations_per_epoch(), cfg_.batch_fusion,
                                data_.size())) {
    out.push_back(&data_[i]);
  }
  return out;
}

HistoryRow FusionTrainer::step() {
  const auto batch = batch_at(iteration_);
  const Tensor input = fusion_input(batch, cfg_.use_masks);
  std::vector<const Image*> targets;
  for (const SamplePair* s : batch) targets.push_back(&s->target);
  const Tensor real = stack_images(targets);

  HistoryRow row;
  row.iteration = iteration_;
  row.epoch = static_cast<int>(iteration_ / iterations_per_epoch());
  std::tie(row.lr_g, row.lr_d) = decay_lr(cfg_, row.epoch);

  // Generator step, discriminator fixed.
  gen_.set_trainable(true);
  disc_.set_trainable(false);
  Tensor d_fake_g;
  {
    Tape tape;
    Tape::Scope scope(tape);
    const Tensor fake = generator_forward(gen_, gen_cfg_, input);
    d_fake_g = discriminator_forward(disc_, disc_cfg_, fake);
    const Tensor content = content_loss(fake, real);
    const Tensor adv = adversarial_loss(d_fake_g);
    const Tensor total = ops::add(content, ops::scale(adv, static_cast<float>(cfg_.lambda_adv)));
    row.l_content = content.item();
    row.l_adv = adv.item();
    require_finite(total.item(), "generator loss", iteration_);
    tape.backward(total);
  }
  adam_g_.step(gen_, row.lr_g);
  gen_.set_trainable(false);

  // Discriminator step on fakes from the updated generator, G fixed.
  if (cfg_.update_discriminator) {
    const Tensor fake = generator_forward(gen_, gen_cfg_, input);
    disc_.set_trainable(true);
    {
      Tape tape;
      Tape::Scope scope(tape);
      const Tensor d_real = discriminator_forward(disc_, disc_cfg_, real);
      const Tensor d_fake = discriminator_forward(disc_, disc_cfg_, fake);
      const Tensor loss = discriminator_loss(d_real, d_fake);
      row.l_d = loss.item();
      require_finite(row.l_d, "discriminator loss", iteration_);
      tape.backward(loss);
    }
    adam_d_.step(disc_, row.lr_d);
    disc_.set_trainable(false);
  } else {
    const Tensor d_real = discriminator_forward(disc_, disc_cfg_, real);
    row.l_d = discriminator_loss(d_real, d_fake_g.detach()).item();
  }

  ++iteration_;
  history_.push_back(row);
  return row;
}

void FusionTrainer::run(int64_t iterations) {
  for (int64_t i = 0; i < iterations; ++i) step();
}

double FusionTrainer::dataset_content_loss() const {
  double acc = 0.0;
  for (const SamplePair& s : data_) {
    const Tensor fake = generator_forward(gen_, gen_cfg_, fusion_input({&s}, cfg_.use_masks));
    acc += content_loss(fake, stack_images({&s.target})).item();
  }
  return acc / static_cast<double>(data_.size());
}

void FusionTrainer::save(const std::string& path) const {
  Checkpoint ckpt;
  ckpt.fingerprint = gen_.fingerprint() + "|" + disc_.fingerprint();
  ckpt.records = records_of(gen_, "gen/");
  for (auto& r : records_of(disc_, "disc/")) ckpt.records.push_back(std::move(r));
  ckpt.adam.push_back(adam_section("gen", adam_g_, gen_));
  ckpt.adam.push_back(adam_section("disc", adam_d_, disc_));
  ckpt.metadata = train_config_to_kv(cfg_);
  ckpt.metadata["kind"] = "fusion";
  ckpt.metadata["iteration"] = std::to_string(iteration_);
  write_checkpoint(path, ckpt);
}

FusionTrainer FusionTrainer::resume(const std::string& path, std::vector<SamplePair> data) {
  const Checkpoint ckpt = read_checkpoint(path);
  require_kind(ckpt, "fusion", path);
  const auto [gen_fp, disc_fp] = split_fusion_fingerprint(ckpt.fingerprint);
  FusionTrainer t(std::move(data), generator_config_from_fingerprint(gen_fp),
                  discriminator_config_from_fingerprint(disc_fp),
                  train_config_from_kv(ckpt.metadata));
  load_records(t.gen_, ckpt.records, "gen/");
  load_records(t.disc_, ckpt.records, "disc/");
  restore_adam(t.adam_g_, ckpt, "gen", t.gen_);
  restore_adam(t.adam_d_, ckpt, "disc", t.disc_);
  t.iteration_ = meta_int(ckpt.metadata, "iteration");
  return t;
}

MaeRun train_mae_reference(const std::vector<SamplePair>& data, const GeneratorConfig& gen,
                           const TrainConfig& cfg, int64_t iterations) {
  cfg.validate();
  if (data.empty()) throw UsageError("MAE regression needs at least one sample");
  MaeRun run{build_generator(gen, mix_seed(cfg.seed, kGenStream)), {}};
  AdamState adam(run.generator, AdamConfig{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
  const int64_t ipe = per_epoch(cfg.iterations_per_epoch, data.size(), cfg.batch_fusion);
  for (int64_t it = 0; it < iterations; ++it) {
    std::vector<const SamplePair*> batch;
    std::vector<const Image*> targets;
    for (size_t i : batch_indices(cfg.seed, it, ipe, cfg.batch_fusion, data.size())) {
      batch.push_back(&data[i]);
      targets.push_back(&data[i].target);
    }
    HistoryRow row;
    row.iteration = it;
    row.epoch = static_cast<int>(it / ipe);
    std::tie(row.lr_g, row.lr_d) = decay_lr(cfg, row.epoch);
    run.generator.set_trainable(true);
    {
      Tape tape;
      Tape::Scope scope(tape);
      const Tensor fake = generator_forward(run.generator, gen, fusion_input(batch, cfg.use_masks));
      const Tensor loss = content_loss(fake, stack_images(targets));
      row.l_content = loss.item();
      require_finite(row.l_content, "content loss", it);
      tape.backward(loss);
    }
    adam.step(run.generator, row.lr_g);
    run.generator.set_trainable(false);
    run.history.push_back(row);
  }
  return run;
}

LoadedGenerator load_generator(const std::string& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  require_kind(ckpt, "fusion", path);
  const auto [gen_fp, disc_fp] = split_fusion_fingerprint(ckpt.fingerprint);
  LoadedGenerator out;
  out.config = generator_config_from_fingerprint(gen_fp);
  out.params = build_generator(out.config, 0);
  load_records(out.params, ckpt.records, "gen/");
  out.use_masks = train_config_from_kv(ckpt.metadata).use_masks;
  return out;
}

LoadedBlurModel load_blur_model(const std::string& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  require_kind(ckpt, "blur_model", path);
  LoadedBlurModel out;
  out.config = blur_model_config_from_fingerprint(ckpt.fingerprint);
  out.params = build_blur_model(out.config, 0);
  require_fingerprint(ckpt, out.params.fingerprint());
  load_records(out.params, ckpt.records, "");
  return out;
}

Image fuse_sample(const NetworkParams& gen, const GeneratorConfig& cfg, const SamplePair& sample,
                  bool use_masks) {
  return tensor_to_image(generator_forward(gen, cfg, fusion_input({&sample}, use_masks)), 0);
}

}  // namespace focusfuse
