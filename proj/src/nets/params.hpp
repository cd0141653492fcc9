#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tensor/tensor.hpp"

namespace focusfuse::FOCUSFUSE_PRECISION {

// Named parameter tensors of one network, in creation order.
//
// The fingerprint is a `kind;key=value;...` string identifying the
// architecture; checkpoints embed it and refuse to load into a different one.
class NetworkParams {
 public:
  using Entry = std::pair<std::string, Tensor>;

  NetworkParams() = default;
  explicit NetworkParams(std::string fingerprint) : fingerprint_(std::move(fingerprint)) {}

  void add(std::string name, Tensor value);

  bool contains(std::string_view name) const { return index_.find(name) != index_.end(); }
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  size_t size() const { return entries_.size(); }
  int64_t parameter_count() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  const std::string& fingerprint() const { return fingerprint_; }
  void set_fingerprint(std::string fp) { fingerprint_ = std::move(fp); }

  // Toggles requires_grad on every parameter.
  void set_trainable(bool on);
  void zero_grad();

  // Deep copy (values only, no gradients).
  NetworkParams clone() const;
  // Same names, shapes and bit patterns.
  bool bit_equal(const NetworkParams& other) const;

  // Copies values from `other`, which must have identical names and shapes.
  void assign_values(const NetworkParams& other);

 private:
  std::string fingerprint_;
  std::vector<Entry> entries_;
  std::map<std::string, size_t, std::less<>> index_;
};

// Parses the key=value pairs of a fingerprint; the leading kind is returned
// under the key "kind".
std::map<std::string, std::string> parse_fingerprint(std::string_view fingerprint);

}  // namespace focusfuse::FOCUSFUSE_PRECISION
