#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tensor/tensor.hpp"

namespace focusfuse {

// On-disk layout, all integers little-endian:
//   "FFCG"  u32 version
//   str fingerprint
//   u32 count, then count records
//   u32 count, then count Adam sections: str label, u64 step, u32 n, n records
//   str metadata (key=value lines)
// where str = u32 byte length + UTF-8 bytes and a record is
// str name, 4 x u32 shape, raw float32 values.
struct CheckpointRecord {
  std::string name;
  Tensor value;
};

struct AdamSection {
  std::string label;
  uint64_t step = 0;
  std::vector<CheckpointRecord> records;
};

struct Checkpoint {
  std::string fingerprint;
  std::vector<CheckpointRecord> records;
  std::vector<AdamSection> adam;
  std::map<std::string, std::string> metadata;
};

constexpr uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

// Throws FormatError unless the stored fingerprint equals `expected`.
void require_fingerprint(const Checkpoint& ckpt, const std::string& expected);

}  // namespace focusfuse
