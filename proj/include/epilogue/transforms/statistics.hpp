#pragma once

#include <optional>
#include <string_view>

#include "epilogue/core/stream.hpp"
#include "epilogue/transforms/windows.hpp"

namespace epilogue::transforms {

struct FieldStatistics {
  std::uint64_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
};

/// Single pass, all in f64. The mean comes from a compensated (Neumaier) sum
/// so it stays accurate when values cancel; the variance uses Welford's
/// update.
class StatsAccumulator {
 public:
  void add(double x);
  void add(const Tensor& tensor);  // every element; bool counts as 0/1
  FieldStatistics result() const;

 private:
  std::uint64_t n_ = 0;
  double sum_ = 0.0;
  double compensation_ = 0.0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double min_ = 0.0;
  double max_ = 0.0;
};

/// Resolves a selector such as "reward", "observation/agent" or
/// "metadata/tag:placed" against a step. The first component names a step
/// field (observation, action, reward, discount, metadata); the rest is a
/// path inside it. UNKNOWN_FIELD unless it ends on a leaf, UNSUPPORTED_DTYPE
/// for bytes leaves.
const Tensor& select_field(const StepRecord& step, std::string_view selector);

// Whether the field named by the selector's first component holds a real
// value at this step under the alignment.
bool selector_defined(const StepRecord& step, std::string_view selector, Alignment alignment);

/// Statistics over every element of the selected leaf at every step where it
/// is defined. Undefined action/reward/discount are skipped by the alignment
/// rule, not by value.
FieldStatistics field_statistics(Stream<EpisodeRecord> dataset, std::string_view selector,
                                 Alignment alignment = Alignment::sar);

/// Sum of defined rewards over the steps, optionally stopping after the first
/// step satisfying truncate. Each reward leaf contributes all its elements.
double episode_return(Stream<StepRecord> steps, const std::optional<StepPredicate>& truncate = {},
                      Alignment alignment = Alignment::sar);

/// Element-wise f64 sum of the selected leaf over the steps where it is
/// defined. INVALID_ARGUMENT if shapes differ between steps; an empty input
/// gives an empty f64 vector.
Tensor sum_field(Stream<StepRecord> steps, std::string_view selector,
                 Alignment alignment = Alignment::sar);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::uint64_t count = 0;
};

/// Equal-width bins over [lo, hi]; the last bin is closed. Defaults to the
/// data range. Values outside the range are not counted.
std::vector<HistogramBin> histogram(const std::vector<double>& values, std::size_t bins,
                                    std::optional<std::pair<double, double>> range = {});

}  // namespace epilogue::transforms
