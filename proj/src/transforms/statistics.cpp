#include "epilogue/transforms/statistics.hpp"

#include <algorithm>
#include <cmath>

#include "epilogue/transforms/mapping.hpp"

namespace epilogue::transforms {

void StatsAccumulator::add(double x) {
  ++n_;
  if (n_ == 1) {
    min_ = max_ = x;
  } else {
    min_ = std::min(min_, x);
    max_ = std::max(max_, x);
  }
  const double t = sum_ + x;
  compensation_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
  sum_ = t;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void StatsAccumulator::add(const Tensor& tensor) {
  for (std::size_t i = 0; i < tensor.size(); ++i) add(tensor.as_double(i));
}

FieldStatistics StatsAccumulator::result() const {
  FieldStatistics out;
  out.count = n_;
  if (n_ == 0) return out;
  // All-equal input keeps its value exactly; otherwise the compensated sum.
  out.mean = min_ == max_ ? min_
                          : std::clamp((sum_ + compensation_) / static_cast<double>(n_), min_, max_);
  out.std = std::sqrt(std::max(0.0, m2_ / static_cast<double>(n_)));
  out.min = min_;
  out.max = max_;
  return out;
}

namespace {

std::pair<std::string_view, std::string_view> split_selector(std::string_view selector) {
  auto slash = selector.find('/');
  if (slash == std::string_view::npos) return {selector, {}};
  return {selector.substr(0, slash), selector.substr(slash + 1)};
}

const Nested& step_field(const StepRecord& step, std::string_view name) {
  if (name == "observation") return step.observation;
  if (name == "action") return step.action;
  if (name == "reward") return step.reward;
  if (name == "discount") return step.discount;
  if (name == "metadata" || name == "step_metadata") return step.metadata;
  fail(ErrorCode::unknown_field, "unknown step field '" + std::string(name) + "'");
}

}  // namespace

const Tensor& select_field(const StepRecord& step, std::string_view selector) {
  auto [head, rest] = split_selector(selector);
  const Nested& root = step_field(step, head);
  const Nested* node = rest.empty() ? &root : root.find_path(rest);
  if (node == nullptr || !node->is_leaf()) {
    fail(ErrorCode::unknown_field, "selector '" + std::string(selector) + "' does not name a leaf");
  }
  if (node->leaf().dtype() == DType::bytes) {
    fail(ErrorCode::unsupported_dtype, "selector '" + std::string(selector) + "' names a bytes leaf");
  }
  return node->leaf();
}

bool selector_defined(const StepRecord& step, std::string_view selector, Alignment alignment) {
  auto head = split_selector(selector).first;
  const DefinedFields defined = defined_fields(step, alignment);
  if (head == "action") return defined.action;
  if (head == "reward") return defined.reward;
  if (head == "discount") return defined.discount;
  return true;
}

FieldStatistics field_statistics(Stream<EpisodeRecord> dataset, std::string_view selector,
                                 Alignment alignment) {
  step_field(StepRecord{}, split_selector(selector).first);
  StatsAccumulator acc;
  auto steps = steps_of(std::move(dataset));
  while (auto step = steps.next()) {
    if (!selector_defined(*step, selector, alignment)) continue;
    acc.add(select_field(*step, selector));
  }
  return acc.result();
}

double episode_return(Stream<StepRecord> steps, const std::optional<StepPredicate>& truncate,
                      Alignment alignment) {
  if (truncate) steps = truncate_after_condition(std::move(steps), *truncate);
  double total = 0.0;
  while (auto step = steps.next()) {
    if (!defined_fields(*step, alignment).reward) continue;
    const Tensor& r = select_field(*step, "reward");
    for (std::size_t i = 0; i < r.size(); ++i) total += r.as_double(i);
  }
  return total;
}

Tensor sum_field(Stream<StepRecord> steps, std::string_view selector, Alignment alignment) {
  step_field(StepRecord{}, split_selector(selector).first);
  std::optional<Shape> shape;
  std::vector<double> sums;
  while (auto step = steps.next()) {
    if (!selector_defined(*step, selector, alignment)) continue;
    const Tensor& t = select_field(*step, selector);
    if (!shape) {
      shape = t.shape();
      sums.assign(t.size(), 0.0);
    } else if (*shape != t.shape()) {
      fail(ErrorCode::invalid_argument, "sum_field: shape " + shape_string(t.shape()) +
                                            " differs from " + shape_string(*shape));
    }
    for (std::size_t i = 0; i < t.size(); ++i) sums[i] += t.as_double(i);
  }
  if (!shape) return Tensor::vector<double>({});
  return Tensor::from_values<double>(*shape, sums);
}

std::vector<HistogramBin> histogram(const std::vector<double>& values, std::size_t bins,
                                    std::optional<std::pair<double, double>> range) {
  if (bins == 0) fail(ErrorCode::invalid_argument, "histogram needs at least one bin");
  double lo = 0.0;
  double hi = 0.0;
  if (range) {
    std::tie(lo, hi) = *range;
  } else if (!values.empty()) {
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
  }
  if (!(hi >= lo)) fail(ErrorCode::invalid_argument, "histogram range is empty");
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    out[i].left = lo + width * static_cast<double>(i);
    out[i].right = i + 1 == bins ? hi : lo + width * static_cast<double>(i + 1);
  }
  for (double v : values) {
    if (!(v >= lo && v <= hi)) continue;
    auto i = static_cast<std::size_t>((v - lo) / width);
    out[std::min(i, bins - 1)].count += 1;
  }
  return out;
}

}  // namespace epilogue::transforms
