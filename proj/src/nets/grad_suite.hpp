#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Finite-difference gradient suite shared by the CLI and the test binaries.
//
// Single ops are checked in the single-precision engine. Whole networks are
// checked in the double-precision build of the same code: PReLU and max-pool
// kinks are dense enough that any step large enough to rise above float
// rounding crosses some of them, so single precision cannot give a usable
// reference for deep compositions.
namespace focusfuse {

struct GradSuiteLine {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  int64_t coords_checked = 0;
  bool passed() const { return max_rel_error < tolerance; }
};

struct GradSuiteOptions {
  int seeds = 5;
  int64_t coords_per_tensor = 10;
  uint64_t seed = 0;
  int image_size = 64;
  // Widths of the generator under test; the default-width generator costs
  // minutes per sweep at 64x64.
  int generator_base_width = 4;
  int generator_growth_rate = 4;
};

std::vector<GradSuiteLine> run_op_gradchecks(const GradSuiteOptions& options);
std::vector<GradSuiteLine> run_network_gradchecks(const GradSuiteOptions& options);
std::vector<GradSuiteLine> run_gradient_suite(const GradSuiteOptions& options);

}  // namespace focusfuse
