#include "train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace focusfuse {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

constexpr char kMagic[4] = {'F', 'F', 'C', 'G'};
// Guards against absurd allocations when a corrupt length field is read.
constexpr uint64_t kMaxString = 1u << 20;

class Writer {
 public:
  void bytes(const void* p, size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u32(uint32_t v) { bytes(&v, 4); }
  void u64(uint64_t v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void record(const CheckpointRecord& r) {
    str(r.name);
    const Shape s = r.value.shape();
    for (int64_t d : {s.n, s.c, s.h, s.w}) u32(static_cast<uint32_t>(d));
    bytes(r.value.ptr(), sizeof(float) * static_cast<size_t>(r.value.numel()));
  }
  const std::string& data() const { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  void bytes(void* p, size_t n) {
    if (n > data_.size() - pos_) {
      throw FormatError("checkpoint '" + path_ + "' is truncated at byte " + std::to_string(pos_));
    }
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  uint32_t u32() {
    uint32_t v;
    bytes(&v, 4);
    return v;
  }
  uint64_t u64() {
    uint64_t v;
    bytes(&v, 8);
    return v;
  }
  std::string str() {
    const uint32_t n = u32();
    if (n > kMaxString) throw FormatError("checkpoint '" + path_ + "': implausible string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  CheckpointRecord record() {
    CheckpointRecord r;
    r.name = str();
    Shape s;
    s.n = u32();
    s.c = u32();
    s.h = u32();
    s.w = u32();
    const uint64_t bytes_needed = static_cast<uint64_t>(s.numel()) * sizeof(float);
    if (bytes_needed > data_.size() - pos_) {
      throw FormatError("checkpoint '" + path_ + "' is truncated in tensor '" + r.name + "'");
    }
    r.value = Tensor(s);
    bytes(r.value.ptr(), bytes_needed);
    return r;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::string path_;
  size_t pos_ = 0;
};

std::string encode_metadata(const std::map<std::string, std::string>& meta) {
  std::string out;
  for (const auto& [k, v] : meta) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw UsageError("checkpoint metadata key/value may not contain '=' or newlines: " + k);
    }
    out += k + "=" + v + "\n";
  }
  return out;
}

std::map<std::string, std::string> decode_metadata(const std::string& text, const std::string& path) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint '" + path + "': bad metadata line");
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.str(ckpt.fingerprint);
  w.u32(static_cast<uint32_t>(ckpt.records.size()));
  for (const auto& r : ckpt.records) w.record(r);
  w.u32(static_cast<uint32_t>(ckpt.adam.size()));
  for (const auto& section : ckpt.adam) {
    w.str(section.label);
    w.u64(section.step);
    w.u32(static_cast<uint32_t>(section.records.size()));
    for (const auto& r : section.records) w.record(r);
  }
  w.str(encode_metadata(ckpt.metadata));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint '" + path + "' for writing");
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  out.flush();
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  Reader r(buf.str(), path);

  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("'" + path + "' is not a checkpoint (bad magic)");
  }
  const uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint '" + path + "' has unsupported version " +
                      std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.fingerprint = r.str();
  const uint32_t n = r.u32();
  for (uint32_t i = 0; i < n; ++i) ckpt.records.push_back(r.record());
  const uint32_t sections = r.u32();
  for (uint32_t i = 0; i < sections; ++i) {
    AdamSection s;
    s.label = r.str();
    s.step = r.u64();
    const uint32_t count = r.u32();
    for (uint32_t k = 0; k < count; ++k) s.records.push_back(r.record());
    ckpt.adam.push_back(std::move(s));
  }
  ckpt.metadata = decode_metadata(r.str(), path);
  if (!r.at_end()) throw FormatError("checkpoint '" + path + "' has trailing bytes");
  return ckpt;
}

void require_fingerprint(const Checkpoint& ckpt, const std::string& expected) {
  if (ckpt.fingerprint != expected) {
    throw FormatError("checkpoint architecture '" + ckpt.fingerprint +
                      "' does not match expected '" + expected + "'");
  }
}

}  // namespace focusfuse
