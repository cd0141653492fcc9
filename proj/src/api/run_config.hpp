#pragma once

#include <map>
#include <string>
#include <vector>

#include "degrade/degrade.hpp"
#include "metrics/metrics.hpp"
#include "nets/networks.hpp"
#include "train/config.hpp"

namespace focusfuse {

// Flat key=value configuration shared by every command. Every key has a
// default; unknown keys are rejected so typos never pass silently.
class RunConfig {
 public:
  RunConfig();

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const { return values_.contains(key); }

  // Reads `key = value` lines; blank lines and lines starting with # are
  // skipped.
  void load_file(const std::string& path);

  // Every key with its effective value, sorted by key.
  const std::map<std::string, std::string>& values() const { return values_; }

  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  TrainConfig train() const;
  DegradeConfig degrade() const;
  MetricConfig metrics() const;
  GeneratorConfig generator() const;
  DiscriminatorConfig discriminator() const;
  BlurModelConfig blur_model() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace focusfuse
