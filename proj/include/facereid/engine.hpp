#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "facereid/similarity.hpp"
#include "facereid/tracker.hpp"
#include "facereid/types.hpp"

namespace facereid {

// One frame as delivered by a source. `embeddings` is either empty or
// parallel to `detections` (precomputed by simulators and replay).
struct Frame {
  FrameIndex index = 0;
  std::vector<FaceDetection> detections;
  std::vector<std::optional<FaceEmbedding>> embeddings;
  std::filesystem::path image_path;
};

// Raised by sources and providers for recoverable I/O or model failures.
class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SourceInfo {
  std::optional<double> fps;
  std::optional<std::int64_t> frame_width;
  std::optional<std::int64_t> frame_height;
};

// Single-consumer, in-order frame stream.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  // nullopt at end of stream. Throws ProviderError on a broken stream.
  virtual std::optional<Frame> next() = 0;
  virtual std::string descriptor() const = 0;
  virtual SourceInfo info() const { return {}; }
  virtual std::vector<std::string> warnings() const { return {}; }
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  // Embedding for frame.detections[detection]. Throws on failure; the engine
  // drops that detection and records the failure.
  virtual FaceEmbedding embed(const Frame& frame, std::size_t detection) = 0;
};

// Serves the embeddings already carried by the frame.
class PrecomputedEmbedder final : public EmbeddingProvider {
 public:
  FaceEmbedding embed(const Frame& frame, std::size_t detection) override;
};

enum class Outcome { RejectedLowScore, Matched, Enrolled, SuppressedByTracker };

std::string_view to_string(Outcome o);
Outcome outcome_from_string(std::string_view s);

struct FrameObservation {
  FrameIndex frame_index = 0;
  std::size_t detection_index = 0;  // position in the source frame
  FaceDetection detection;
  Outcome outcome = Outcome::RejectedLowScore;
  std::optional<IdentityId> identity_id;  // Matched / Enrolled
  // Nearest gallery distance when matching ran against a non-empty candidate set.
  std::optional<double> distance;
  std::optional<IdentityState> state_at_emit;  // Held or Active, for Matched / Enrolled
  std::optional<FaceEmbedding> embedding;      // absent for gated detections
  std::optional<IdentityId> tracker_nearest_id;
  std::optional<double> tracker_iou;
};

enum class LifecycleEvent { Enrolled, Activated, Discarded };

std::string_view to_string(LifecycleEvent e);
LifecycleEvent lifecycle_event_from_string(std::string_view s);

struct IdentityEvent {
  IdentityId id = 0;
  LifecycleEvent event = LifecycleEvent::Enrolled;
  FrameIndex frame = 0;
  bool operator==(const IdentityEvent&) const = default;
};

using Emission = std::variant<FrameObservation, IdentityEvent>;

struct ProviderFailure {
  std::size_t detection_index = 0;
  std::string message;
};

struct FrameReport {
  FrameIndex frame_index = 0;
  std::size_t detection_count = 0;
  // Observations and lifecycle events in emission order. An identity's
  // enrolled event always precedes its first observation.
  std::vector<Emission> emissions;
  std::vector<ProviderFailure> failures;

  std::vector<FrameObservation> observations() const;
  std::vector<IdentityEvent> events() const;
};

struct HoldEntry {
  IdentityId id = 0;
  FrameIndex deadline = 0;
};

// Owns the gallery, hold queue and recent-box registry of one stream and
// runs the per-frame re-identification loop. Not thread safe; use one engine
// per stream.
class Engine {
 public:
  explicit Engine(EngineParams params);

  // Gate, embed, match, validate, enroll, then expire holds due this frame.
  // Frames must arrive with strictly increasing indices.
  FrameReport process_frame(const Frame& frame, EmbeddingProvider& embedder);

  const EngineParams& params() const { return params_; }
  const Gallery& gallery() const { return gallery_; }
  const std::vector<HoldEntry>& hold_queue() const { return hold_queue_; }
  const RecentBoxes& recent_boxes() const { return recent_boxes_; }
  std::optional<FrameIndex> last_frame() const { return last_frame_; }

 private:
  void expire_holds(FrameIndex frame, FrameReport& report);

  EngineParams params_;
  Gallery gallery_;
  std::vector<HoldEntry> hold_queue_;
  RecentBoxes recent_boxes_;
  std::optional<FrameIndex> last_frame_;
};

struct OutcomeCounts {
  std::int64_t rejected_low_score = 0;
  std::int64_t matched = 0;
  std::int64_t enrolled = 0;
  std::int64_t suppressed_by_tracker = 0;
  bool operator==(const OutcomeCounts&) const = default;
};

struct GalleryCensus {
  std::int64_t held = 0;
  std::int64_t active = 0;
  std::int64_t discarded = 0;
  bool operator==(const GalleryCensus&) const = default;
};

GalleryCensus census(const Gallery& gallery);

struct RunHeader {
  std::string run_id;
  EngineParams params;
  std::string provider;
  bool deterministic = false;
  SourceInfo source;
  std::optional<std::string> started_at;  // wall clock, omitted when deterministic
};

struct RunSummary {
  std::int64_t frames = 0;
  OutcomeCounts outcomes;
  std::int64_t provider_failures = 0;
  GalleryCensus gallery;
  bool truncated = false;
  std::string truncation_reason;
  std::vector<std::string> warnings;
  std::optional<double> wall_ms;  // omitted when deterministic
};

class RunSink {
 public:
  virtual ~RunSink() = default;
  virtual void begin(const RunHeader& header) = 0;
  virtual void frame(const FrameReport& report) = 0;
  virtual void end(const RunSummary& summary) = 0;
};

struct RunOptions {
  bool deterministic = false;
  std::optional<std::string> run_id;
};

struct RunResult {
  RunSummary summary;
  Gallery gallery;
};

// Drives `source` through a fresh engine. A source failure ends the run
// cleanly with the summary marked truncated.
RunResult run(FrameSource& source, EmbeddingProvider& embedder, const EngineParams& params,
              RunSink& sink, const RunOptions& options = {});

// Discards everything; handy for benchmarks and ablation counting.
class NullSink final : public RunSink {
 public:
  void begin(const RunHeader&) override {}
  void frame(const FrameReport&) override {}
  void end(const RunSummary&) override {}
};

}  // namespace facereid
