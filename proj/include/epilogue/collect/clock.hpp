#pragma once

#include <atomic>
#include <chrono>

namespace epilogue::collect {

/// Monotonic time source, injectable so timers and async stepping can be
/// driven deterministically in tests.
class Clock {
 public:
  using duration = std::chrono::nanoseconds;
  using time_point = std::chrono::time_point<std::chrono::steady_clock, duration>;

  virtual ~Clock() = default;
  virtual time_point now() const = 0;
};

class SteadyClock final : public Clock {
 public:
  time_point now() const override { return std::chrono::steady_clock::now(); }
};

class FakeClock final : public Clock {
 public:
  time_point now() const override { return time_point(duration(ns_.load())); }
  void advance(duration d) { ns_ += d.count(); }
  void set(time_point t) { ns_ = t.time_since_epoch().count(); }

 private:
  std::atomic<std::int64_t> ns_{0};
};

}  // namespace epilogue::collect
