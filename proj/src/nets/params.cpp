#include "nets/params.hpp"

#include <cstring>

#include "common/error.hpp"

namespace focusfuse::FOCUSFUSE_PRECISION {

void NetworkParams::add(std::string name, Tensor value) {
  if (contains(name)) throw UsageError("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(value));
}

const Tensor& NetworkParams::at(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].second;
}

Tensor& NetworkParams::at(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].second;
}

int64_t NetworkParams::parameter_count() const {
  int64_t total = 0;
  for (const auto& [name, t] : entries_) total += t.numel();
  return total;
}

void NetworkParams::set_trainable(bool on) {
  for (auto& [name, t] : entries_) t.set_requires_grad(on);
}

void NetworkParams::zero_grad() {
  for (auto& [name, t] : entries_) t.clear_grad();
}

NetworkParams NetworkParams::clone() const {
  NetworkParams copy(fingerprint_);
  for (const auto& [name, t] : entries_) copy.add(name, t.clone());
  return copy;
}

bool NetworkParams::bit_equal(const NetworkParams& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& [na, ta] = entries_[i];
    const auto& [nb, tb] = other.entries_[i];
    if (na != nb || ta.shape() != tb.shape()) return false;
    if (std::memcmp(ta.ptr(), tb.ptr(), sizeof(real) * static_cast<size_t>(ta.numel())) != 0) {
      return false;
    }
  }
  return true;
}

void NetworkParams::assign_values(const NetworkParams& other) {
  if (other.size() != size()) throw UsageError("assign_values: parameter count mismatch");
  for (size_t i = 0; i < entries_.size(); ++i) {
    auto& [name, dst] = entries_[i];
    const auto& [other_name, src] = other.entries_[i];
    if (name != other_name || dst.shape() != src.shape()) {
      throw UsageError("assign_values: parameter '" + name + "' does not match '" + other_name +
                       "'");
    }
    std::copy(src.data().begin(), src.data().end(), dst.data().begin());
  }
}

std::map<std::string, std::string> parse_fingerprint(std::string_view fingerprint) {
  std::map<std::string, std::string> out;
  size_t start = 0;
  bool first = true;
  while (start <= fingerprint.size()) {
    size_t end = fingerprint.find(';', start);
    if (end == std::string_view::npos) end = fingerprint.size();
    const std::string_view field = fingerprint.substr(start, end - start);
    if (first) {
      out["kind"] = std::string(field);
      first = false;
    } else if (!field.empty()) {
      const size_t eq = field.find('=');
      if (eq == std::string_view::npos) {
        throw FormatError("malformed fingerprint field '" + std::string(field) + "'");
      }
      out[std::string(field.substr(0, eq))] = std::string(field.substr(eq + 1));
    }
    start = end + 1;
  }
  return out;
}

}  // namespace focusfuse::FOCUSFUSE_PRECISION
