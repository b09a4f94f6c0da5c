#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "facereid/engine.hpp"
#include "facereid/types.hpp"

namespace facereid {

inline constexpr int kLogFormatVersion = 1;

// Analysis log: one JSON object per line, discriminated by "type".
//
//   header    run parameters and provenance; always the first line
//   frame     marks the start of a processed frame
//   obs       one detection and what the engine did with it
//   identity  lifecycle event (enrolled / activated / discarded)
//   summary   run totals; always the last line
//
// The log holds boxes, scores, landmarks and (optionally) embeddings, never
// pixels. See docs/log-format.md for the field list.

struct HeaderRecord {
  int format_version = kLogFormatVersion;
  std::string run_id;
  EngineParams params;
  std::int64_t embedding_dim = 0;
  std::string provider;
  bool deterministic = false;
  bool embeddings_included = false;
  std::optional<double> fps;
  std::optional<std::int64_t> frame_width;
  std::optional<std::int64_t> frame_height;
  std::optional<std::string> started_at;
  bool operator==(const HeaderRecord&) const = default;
};

struct FrameRecord {
  FrameIndex frame = 0;
  std::int64_t detections = 0;
  std::int64_t failures = 0;
  bool operator==(const FrameRecord&) const = default;
};

struct ObsRecord {
  FrameIndex frame = 0;
  std::int64_t detection_index = 0;
  Outcome outcome = Outcome::RejectedLowScore;
  std::optional<IdentityId> identity_id;
  std::optional<IdentityState> state;
  BoundingBox box{0, 0, 1, 1};
  double score = 0.0;
  std::optional<double> distance;
  std::optional<Landmarks> landmarks;
  std::optional<std::vector<double>> embedding;
  std::optional<IdentityId> tracker_nearest_id;
  std::optional<double> tracker_iou;
  bool operator==(const ObsRecord&) const = default;
};

using IdentityEventRecord = IdentityEvent;

struct SummaryRecord {
  std::int64_t frames = 0;
  OutcomeCounts outcomes;
  std::int64_t provider_failures = 0;
  GalleryCensus gallery;
  bool truncated = false;
  std::string truncation_reason;
  std::vector<std::string> warnings;
  std::optional<double> wall_ms;
  bool operator==(const SummaryRecord&) const = default;
};

using LogRecord =
    std::variant<HeaderRecord, FrameRecord, ObsRecord, IdentityEventRecord, SummaryRecord>;

// Schema or ordering violation, tagged with the 1-based line number.
class LogError : public InvalidArgument {
 public:
  LogError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::string to_json_line(const LogRecord& record);
// Parses one line. Returns nullopt for a well-formed record of unknown type.
std::optional<LogRecord> parse_json_line(std::string_view line, std::size_t line_no);

void write_log(const std::vector<LogRecord>& records, std::ostream& out);
void write_log(const std::vector<LogRecord>& records, const std::filesystem::path& path);

struct ParsedLog {
  std::vector<LogRecord> records;
  std::vector<std::size_t> lines;  // source line of each record
  std::vector<std::string> warnings;

  const HeaderRecord& header() const;
  const SummaryRecord& summary() const;
};

// Reads and validates a complete log: header first, summary last, frames
// strictly increasing, observations inside their frame, identities enrolled
// before use, at most one terminal event per identity. Unknown record types
// are skipped with a warning.
ParsedLog read_log(std::istream& in);
ParsedLog read_log(const std::filesystem::path& path);

struct LogWriterOptions {
  bool embed_embeddings = false;
};

// RunSink that streams records to `out` as they are produced.
class LogWriter final : public RunSink {
 public:
  explicit LogWriter(std::ostream& out, LogWriterOptions options = {});

  void begin(const RunHeader& header) override;
  void frame(const FrameReport& report) override;
  void end(const RunSummary& summary) override;

 private:
  void emit(const LogRecord& record);
  std::ostream& out_;
  LogWriterOptions options_;
};

// Converts what the engine produced into log records.
HeaderRecord make_header_record(const RunHeader& header, bool embeddings_included);
ObsRecord make_obs_record(const FrameObservation& obs, bool include_embedding);
SummaryRecord make_summary_record(const RunSummary& summary);

// Collects records in memory; used by tests and the replay path.
class RecordingSink final : public RunSink {
 public:
  explicit RecordingSink(LogWriterOptions options = {}) : options_(options) {}
  void begin(const RunHeader& header) override;
  void frame(const FrameReport& report) override;
  void end(const RunSummary& summary) override;
  const std::vector<LogRecord>& records() const { return records_; }

 private:
  LogWriterOptions options_;
  std::vector<LogRecord> records_;
};

}  // namespace facereid
