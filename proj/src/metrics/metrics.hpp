#pragma once

#include <optional>
#include <string>
#include <vector>

#include "image/image.hpp"

namespace focusfuse {

struct MetricConfig {
  double k1 = 0.01;
  double k2 = 0.03;
  // Dynamic range of the pixel values: 1.0 for unit images, 255 for 8-bit.
  double range = 1.0;
  int bins = 256;

  void validate() const;
};

// Every metric is computed per channel on whole-image statistics and then
// averaged over channels. An empty optional means the value is undefined.

// (2 mx my + c1)(2 sxy + c2) / ((mx^2 + my^2 + c1)(sx^2 + sy^2 + c2)) with
// c1 = (k1 L)^2, c2 = (k2 L)^2 and population (1/N) moments.
double ssim(const Image& x, const Image& y, const MetricConfig& cfg = {});

// Pearson correlation; undefined when any channel of x or y is constant.
std::optional<double> cc(const Image& x, const Image& y);

// Values are quantized to `bins` levels over [0, range] first. Bits.
double entropy(const Image& x, const MetricConfig& cfg = {});
double mutual_information(const Image& x, const Image& y, const MetricConfig& cfg = {});

// 2 I(X,Y) / (H(X) + H(Y)); undefined when both are constant in a channel.
std::optional<double> qmi(const Image& x, const Image& y, const MetricConfig& cfg = {});

struct EvalRow {
  std::string id;
  std::optional<double> ssim;
  std::optional<double> cc;
  std::optional<double> qmi;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  // Means over defined values and the number of undefined values left out.
  std::optional<double> mean_ssim;
  std::optional<double> mean_cc;
  std::optional<double> mean_qmi;
  int excluded_ssim = 0;
  int excluded_cc = 0;
  int excluded_qmi = 0;
};

struct EvalPair {
  std::string id;
  Image generated;
  Image truth;
};

EvalReport evaluate_set(const std::vector<EvalPair>& pairs, const MetricConfig& cfg = {});

// image_id,ssim,cc,qmi rows, then "mean" and "excluded" rows. Undefined
// values are empty fields.
std::string report_csv(const EvalReport& report);
// Same content as a fixed-width text table.
std::string report_table(const EvalReport& report);

// Pairs pred_dir/NAME.png with truth_dir/NAME.png; unmatched names on either
// side are an error listing them. Images are evaluated in unit range.
EvalReport evaluate_dirs(const std::string& pred_dir, const std::string& truth_dir,
                         const MetricConfig& cfg = {});

}  // namespace focusfuse
