#include "metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "common/error.hpp"
#include "degrade/dataset.hpp"
#include "image/png_io.hpp"

namespace focusfuse {
namespace {

void require_pair(const Image& x, const Image& y, const char* what) {
  if (!x.same_shape(y)) {
    throw ShapeError(std::string(what) + ": shapes " + x.shape_str() + " and " + y.shape_str() +
                     " differ");
  }
  if (x.empty()) throw ShapeError(std::string(what) + " of empty images");
}

struct Moments {
  double mx = 0.0;
  double my = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double cxy = 0.0;
};

Moments moments(const float* x, const float* y, int64_t n) {
  Moments m;
  for (int64_t i = 0; i < n; ++i) {
    m.mx += x[i];
    m.my += y[i];
  }
  m.mx /= static_cast<double>(n);
  m.my /= static_cast<double>(n);
  for (int64_t i = 0; i < n; ++i) {
    const double dx = x[i] - m.mx;
    const double dy = y[i] - m.my;
    m.vx += dx * dx;
    m.vy += dy * dy;
    m.cxy += dx * dy;
  }
  m.vx /= static_cast<double>(n);
  m.vy /= static_cast<double>(n);
  m.cxy /= static_cast<double>(n);
  return m;
}

std::vector<int> quantize(const float* x, int64_t n, const MetricConfig& cfg) {
  std::vector<int> out(static_cast<size_t>(n));
  const double scale = (cfg.bins - 1) / cfg.range;
  for (int64_t i = 0; i < n; ++i) {
    const long q = std::lround(static_cast<double>(x[i]) * scale);
    out[static_cast<size_t>(i)] = static_cast<int>(std::clamp<long>(q, 0, cfg.bins - 1));
  }
  return out;
}

double entropy_of(const std::vector<int>& q, int bins) {
  std::vector<int64_t> hist(static_cast<size_t>(bins));
  for (int v : q) ++hist[static_cast<size_t>(v)];
  const double n = static_cast<double>(q.size());
  double h = 0.0;
  for (int64_t c : hist) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double mi_of(const std::vector<int>& qx, const std::vector<int>& qy, int bins) {
  const auto b = static_cast<size_t>(bins);
  std::vector<int64_t> joint(b * b);
  std::vector<int64_t> hx(b);
  std::vector<int64_t> hy(b);
  for (size_t i = 0; i < qx.size(); ++i) {
    ++joint[static_cast<size_t>(qx[i]) * b + static_cast<size_t>(qy[i])];
    ++hx[static_cast<size_t>(qx[i])];
    ++hy[static_cast<size_t>(qy[i])];
  }
  const double n = static_cast<double>(qx.size());
  double mi = 0.0;
  for (size_t i = 0; i < b; ++i) {
    for (size_t j = 0; j < b; ++j) {
      const int64_t c = joint[i * b + j];
      if (c == 0) continue;
      // p(x,y) log2(p(x,y) / (p(x) p(y)))
      mi += (static_cast<double>(c) / n) *
            std::log2(static_cast<double>(c) * n / (static_cast<double>(hx[i]) * hy[j]));
    }
  }
  return mi;
}

std::string field(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", *v);
  return buf;
}

std::optional<double> mean_of(const std::vector<EvalRow>& rows,
                              std::optional<double> EvalRow::*member, int& excluded) {
  double acc = 0.0;
  int count = 0;
  excluded = 0;
  for (const auto& r : rows) {
    if (r.*member) {
      acc += *(r.*member);
      ++count;
    } else {
      ++excluded;
    }
  }
  if (count == 0) return std::nullopt;
  return acc / count;
}

}  // namespace

void MetricConfig::validate() const {
  if (!(k1 > 0.0) || !(k2 > 0.0) || !(range > 0.0)) {
    throw UsageError("metric constants k1, k2 and range must be positive");
  }
  if (bins < 2) throw UsageError("metric histogram needs at least 2 bins");
}

double ssim(const Image& x, const Image& y, const MetricConfig& cfg) {
  cfg.validate();
  require_pair(x, y, "ssim");
  const double c1 = (cfg.k1 * cfg.range) * (cfg.k1 * cfg.range);
  const double c2 = (cfg.k2 * cfg.range) * (cfg.k2 * cfg.range);
  double acc = 0.0;
  for (int c = 0; c < x.channels; ++c) {
    const Moments m = moments(x.channel(c), y.channel(c), x.plane());
    acc += (2 * m.mx * m.my + c1) * (2 * m.cxy + c2) /
           ((m.mx * m.mx + m.my * m.my + c1) * (m.vx + m.vy + c2));
  }
  return acc / x.channels;
}

std::optional<double> cc(const Image& x, const Image& y) {
  require_pair(x, y, "cc");
  double acc = 0.0;
  for (int c = 0; c < x.channels; ++c) {
    const Moments m = moments(x.channel(c), y.channel(c), x.plane());
    if (m.vx <= 0.0 || m.vy <= 0.0) return std::nullopt;
    acc += std::clamp(m.cxy / std::sqrt(m.vx * m.vy), -1.0, 1.0);
  }
  return acc / x.channels;
}

double entropy(const Image& x, const MetricConfig& cfg) {
  cfg.validate();
  if (x.empty()) throw ShapeError("entropy of an empty image");
  double acc = 0.0;
  for (int c = 0; c < x.channels; ++c) acc += entropy_of(quantize(x.channel(c), x.plane(), cfg), cfg.bins);
  return acc / x.channels;
}

double mutual_information(const Image& x, const Image& y, const MetricConfig& cfg) {
  cfg.validate();
  require_pair(x, y, "mutual_information");
  double acc = 0.0;
  for (int c = 0; c < x.channels; ++c) {
    acc += mi_of(quantize(x.channel(c), x.plane(), cfg), quantize(y.channel(c), y.plane(), cfg),
                 cfg.bins);
  }
  return acc / x.channels;
}

std::optional<double> qmi(const Image& x, const Image& y, const MetricConfig& cfg) {
  cfg.validate();
  require_pair(x, y, "qmi");
  double acc = 0.0;
  for (int c = 0; c < x.channels; ++c) {
    const auto qx = quantize(x.channel(c), x.plane(), cfg);
    const auto qy = quantize(y.channel(c), y.plane(), cfg);
    const double hsum = entropy_of(qx, cfg.bins) + entropy_of(qy, cfg.bins);
    if (hsum <= 0.0) return std::nullopt;
    acc += std::clamp(2.0 * mi_of(qx, qy, cfg.bins) / hsum, 0.0, 1.0);
  }
  return acc / x.channels;
}

EvalReport evaluate_set(const std::vector<EvalPair>& pairs, const MetricConfig& cfg) {
  if (pairs.empty()) throw UsageError("evaluate_set needs at least one pair");
  EvalReport report;
  for (const auto& p : pairs) {
    report.rows.push_back({p.id, ssim(p.generated, p.truth, cfg), cc(p.generated, p.truth),
                           qmi(p.generated, p.truth, cfg)});
  }
  report.mean_ssim = mean_of(report.rows, &EvalRow::ssim, report.excluded_ssim);
  report.mean_cc = mean_of(report.rows, &EvalRow::cc, report.excluded_cc);
  report.mean_qmi = mean_of(report.rows, &EvalRow::qmi, report.excluded_qmi);
  return report;
}

std::string report_csv(const EvalReport& r) {
  std::string out = "image_id,ssim,cc,qmi\n";
  for (const auto& row : r.rows) {
    out += row.id + "," + field(row.ssim) + "," + field(row.cc) + "," + field(row.qmi) + "\n";
  }
  out += "mean," + field(r.mean_ssim) + "," + field(r.mean_cc) + "," + field(r.mean_qmi) + "\n";
  out += "excluded," + std::to_string(r.excluded_ssim) + "," + std::to_string(r.excluded_cc) + "," +
         std::to_string(r.excluded_qmi) + "\n";
  return out;
}

std::string report_table(const EvalReport& r) {
  size_t width = 8;
  for (const auto& row : r.rows) width = std::max(width, row.id.size());
  auto cell = [](const std::optional<double>& v) {
    char buf[32];
    if (v) {
      std::snprintf(buf, sizeof(buf), "%10.4f", *v);
    } else {
      std::snprintf(buf, sizeof(buf), "%10s", "undef");
    }
    return std::string(buf);
  };
  auto line = [&](const std::string& id, const std::string& a, const std::string& b,
                  const std::string& c) {
    std::string s = id;
    s.resize(width, ' ');
    return s + "  " + a + "  " + b + "  " + c + "\n";
  };
  char head[3][16];
  std::snprintf(head[0], sizeof(head[0]), "%10s", "SSIM");
  std::snprintf(head[1], sizeof(head[1]), "%10s", "CC");
  std::snprintf(head[2], sizeof(head[2]), "%10s", "QMI");
  std::string out = line("image", head[0], head[1], head[2]);
  for (const auto& row : r.rows) out += line(row.id, cell(row.ssim), cell(row.cc), cell(row.qmi));
  out += line("mean", cell(r.mean_ssim), cell(r.mean_cc), cell(r.mean_qmi));
  return out;
}

EvalReport evaluate_dirs(const std::string& pred_dir, const std::string& truth_dir,
                         const MetricConfig& cfg) {
  namespace fs = std::filesystem;
  std::map<std::string, std::string> pred;
  std::map<std::string, std::string> truth;
  for (const auto& p : list_pngs(pred_dir)) pred[fs::path(p).filename().string()] = p;
  for (const auto& p : list_pngs(truth_dir)) truth[fs::path(p).filename().string()] = p;
  std::string unmatched;
  for (const auto& [name, path] : pred) {
    if (!truth.contains(name)) unmatched += " " + name + " (no truth)";
  }
  for (const auto& [name, path] : truth) {
    if (!pred.contains(name)) unmatched += " " + name + " (no prediction)";
  }
  if (!unmatched.empty()) throw IoError("unmatched files:" + unmatched);
  if (pred.empty()) throw IoError("no PNG images in '" + pred_dir + "'");
  std::vector<EvalPair> pairs;
  for (const auto& [name, path] : pred) {
    pairs.push_back({name, read_png(path, 3), read_png(truth.at(name), 3)});
  }
  return evaluate_set(pairs, cfg);
}

}  // namespace focusfuse
