#pragma once

#include <string_view>
#include <vector>

#include "epilogue/core/schema.hpp"

namespace epilogue {

enum class Alignment { sar, rsa };

std::string_view alignment_name(Alignment alignment);
std::optional<Alignment> parse_alignment(std::string_view name);

struct StepRecord {
  Nested observation;
  Nested action;
  Nested reward;
  Nested discount;
  bool is_first = false;
  bool is_last = false;
  bool is_terminal = false;
  Nested metadata;

  bool operator==(const StepRecord&) const = default;
};

struct EpisodeRecord {
  std::vector<StepRecord> steps;
  Nested metadata;

  bool operator==(const EpisodeRecord&) const = default;
};

// Which of action/reward/discount hold real values at a step. Observation and
// step metadata are always defined.
struct DefinedFields {
  bool action = true;
  bool reward = true;
  bool discount = true;
};

// Definedness follows from the flags and the alignment:
// SAR: the last step's action, reward and discount are undefined.
// RSA: the first step's reward and discount, and the last step's action.
DefinedFields defined_fields(bool is_first, bool is_last, Alignment alignment);
inline DefinedFields defined_fields(const StepRecord& step, Alignment alignment) {
  return defined_fields(step.is_first, step.is_last, alignment);
}

/// Receives a stream of steps grouped into episodes. Implemented by the file
/// writer and by in-memory buffers.
class EpisodeSink {
 public:
  virtual ~EpisodeSink() = default;
  virtual const DatasetSchema& schema() const = 0;
  virtual void append_step(const StepRecord& step) = 0;
  virtual void end_episode(const Nested& metadata) = 0;
};

/// Collects episodes in memory.
class EpisodeBuffer : public EpisodeSink {
 public:
  explicit EpisodeBuffer(DatasetSchema schema) : schema_(std::move(schema)) {}

  const DatasetSchema& schema() const override { return schema_; }
  void append_step(const StepRecord& step) override { pending_.push_back(step); }
  void end_episode(const Nested& metadata) override {
    episodes_.push_back(EpisodeRecord{std::move(pending_), metadata});
    pending_.clear();
  }

  const std::vector<StepRecord>& pending_steps() const { return pending_; }
  std::vector<EpisodeRecord>& episodes() { return episodes_; }
  const std::vector<EpisodeRecord>& episodes() const { return episodes_; }
  void clear() {
    pending_.clear();
    episodes_.clear();
  }

 private:
  DatasetSchema schema_;
  std::vector<StepRecord> pending_;
  std::vector<EpisodeRecord> episodes_;
};

}  // namespace epilogue
