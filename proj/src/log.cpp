#include "facereid/log.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include <json.hpp>

namespace facereid {

using Json = nlohmann::ordered_json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Json box_json(const BoundingBox& b) { return Json::array({b.x1(), b.y1(), b.x2(), b.y2()}); }

BoundingBox box_from(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw InvalidArgument("box must be [x1, y1, x2, y2]");
  return BoundingBox(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                     j[3].get<double>());
}

Json params_json(const EngineParams& p) {
  return Json{
      {"sigma_h", p.sigma_h},
      {"tau_d", p.tau_d},
      {"tau_iou", p.tau_iou},
      {"t_min", p.t_min},
      {"min_hold_appearances", p.min_hold_appearances},
      {"embedding_dim", p.embedding_dim},
      {"validation_policy", std::string(to_string(p.validation_policy))},
      {"exclusive_match", p.exclusive_match},
      {"t_lookback", p.t_lookback},
  };
}

EngineParams params_from(const Json& j) {
  EngineParams p;
  p.sigma_h = j.at("sigma_h").get<double>();
  p.tau_d = j.at("tau_d").get<double>();
  p.tau_iou = j.at("tau_iou").get<double>();
  p.t_min = j.at("t_min").get<std::int64_t>();
  p.min_hold_appearances = j.at("min_hold_appearances").get<std::int64_t>();
  p.embedding_dim = j.at("embedding_dim").get<std::int64_t>();
  p.validation_policy = validation_policy_from_string(j.at("validation_policy").get<std::string>());
  p.exclusive_match = j.at("exclusive_match").get<bool>();
  p.t_lookback = j.value("t_lookback", std::int64_t{1});
  return validate_params(p);
}

template <class T>
std::optional<T> opt(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

Json header_json(const HeaderRecord& h) {
  Json j{{"type", "header"},
         {"format_version", h.format_version},
         {"run_id", h.run_id},
         {"params", params_json(h.params)},
         {"embedding_dim", h.embedding_dim},
         {"provider", h.provider},
         {"deterministic", h.deterministic},
         {"embeddings_included", h.embeddings_included}};
  if (h.fps) j["fps"] = *h.fps;
  if (h.frame_width) j["frame_width"] = *h.frame_width;
  if (h.frame_height) j["frame_height"] = *h.frame_height;
  if (h.started_at) j["started_at"] = *h.started_at;
  return j;
}

HeaderRecord header_from(const Json& j) {
  HeaderRecord h;
  h.format_version = j.at("format_version").get<int>();
  h.run_id = j.at("run_id").get<std::string>();
  h.params = params_from(j.at("params"));
  h.embedding_dim = j.at("embedding_dim").get<std::int64_t>();
  h.provider = j.at("provider").get<std::string>();
  h.deterministic = j.at("deterministic").get<bool>();
  h.embeddings_included = j.at("embeddings_included").get<bool>();
  h.fps = opt<double>(j, "fps");
  h.frame_width = opt<std::int64_t>(j, "frame_width");
  h.frame_height = opt<std::int64_t>(j, "frame_height");
  h.started_at = opt<std::string>(j, "started_at");
  return h;
}

Json obs_json(const ObsRecord& o) {
  Json j{{"type", "obs"},
         {"frame", o.frame},
         {"det", o.detection_index},
         {"outcome", std::string(to_string(o.outcome))}};
  if (o.identity_id) j["identity_id"] = *o.identity_id;
  if (o.state) j["state"] = std::string(to_string(*o.state));
  j["box"] = box_json(o.box);
  j["score"] = o.score;
  if (o.distance) j["distance"] = *o.distance;
  if (o.tracker_nearest_id) j["tracker_nearest_id"] = *o.tracker_nearest_id;
  if (o.tracker_iou) j["tracker_iou"] = *o.tracker_iou;
  if (o.landmarks) {
    Json pts = Json::array();
    for (const auto& p : *o.landmarks) pts.push_back(Json::array({p.x, p.y}));
    j["landmarks"] = std::move(pts);
  }
  if (o.embedding) j["embedding"] = *o.embedding;
  return j;
}

ObsRecord obs_from(const Json& j) {
  ObsRecord o;
  o.frame = j.at("frame").get<FrameIndex>();
  o.detection_index = j.at("det").get<std::int64_t>();
  o.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  o.identity_id = opt<IdentityId>(j, "identity_id");
  if (auto s = opt<std::string>(j, "state")) o.state = identity_state_from_string(*s);
  o.box = box_from(j.at("box"));
  o.score = j.at("score").get<double>();
  o.distance = opt<double>(j, "distance");
  o.tracker_nearest_id = opt<IdentityId>(j, "tracker_nearest_id");
  o.tracker_iou = opt<double>(j, "tracker_iou");
  if (j.contains("landmarks")) {
    const auto& pts = j.at("landmarks");
    if (!pts.is_array() || pts.size() != 5) throw InvalidArgument("landmarks must hold 5 points");
    Landmarks lm;
    for (std::size_t i = 0; i < 5; ++i) {
      if (!pts[i].is_array() || pts[i].size() != 2) {
        throw InvalidArgument("landmark must be [x, y]");
      }
      lm[i] = {pts[i][0].get<double>(), pts[i][1].get<double>()};
    }
    o.landmarks = lm;
  }
  if (j.contains("embedding")) o.embedding = j.at("embedding").get<std::vector<double>>();
  if (o.score < 0.0 || o.score > 1.0) throw InvalidArgument("score outside [0, 1]");
  const bool needs_identity = o.outcome == Outcome::Matched || o.outcome == Outcome::Enrolled;
  if (needs_identity != o.identity_id.has_value()) {
    throw InvalidArgument(fmt::format("outcome {} {} an identity_id", to_string(o.outcome),
                                      needs_identity ? "requires" : "must not carry"));
  }
  return o;
}

Json event_json(const IdentityEventRecord& e) {
  return Json{{"type", "identity"},
              {"id", e.id},
              {"event", std::string(to_string(e.event))},
              {"frame", e.frame}};
}

IdentityEventRecord event_from(const Json& j) {
  return {j.at("id").get<IdentityId>(),
          lifecycle_event_from_string(j.at("event").get<std::string>()),
          j.at("frame").get<FrameIndex>()};
}

Json summary_json(const SummaryRecord& s) {
  Json j{{"type", "summary"},
         {"frames", s.frames},
         {"outcomes",
          Json{{"rejected_low_score", s.outcomes.rejected_low_score},
               {"matched", s.outcomes.matched},
               {"enrolled", s.outcomes.enrolled},
               {"suppressed_by_tracker", s.outcomes.suppressed_by_tracker}}},
         {"provider_failures", s.provider_failures},
         {"gallery",
          Json{{"held", s.gallery.held},
               {"active", s.gallery.active},
               {"discarded", s.gallery.discarded}}},
         {"truncated", s.truncated}};
  if (s.truncated) j["truncation_reason"] = s.truncation_reason;
  if (!s.warnings.empty()) j["warnings"] = s.warnings;
  if (s.wall_ms) j["wall_ms"] = *s.wall_ms;
  return j;
}

SummaryRecord summary_from(const Json& j) {
  SummaryRecord s;
  s.frames = j.at("frames").get<std::int64_t>();
  const auto& o = j.at("outcomes");
  s.outcomes.rejected_low_score = o.at("rejected_low_score").get<std::int64_t>();
  s.outcomes.matched = o.at("matched").get<std::int64_t>();
  s.outcomes.enrolled = o.at("enrolled").get<std::int64_t>();
  s.outcomes.suppressed_by_tracker = o.at("suppressed_by_tracker").get<std::int64_t>();
  s.provider_failures = j.at("provider_failures").get<std::int64_t>();
  const auto& g = j.at("gallery");
  s.gallery.held = g.at("held").get<std::int64_t>();
  s.gallery.active = g.at("active").get<std::int64_t>();
  s.gallery.discarded = g.at("discarded").get<std::int64_t>();
  s.truncated = j.at("truncated").get<bool>();
  s.truncation_reason = j.value("truncation_reason", std::string{});
  if (j.contains("warnings")) s.warnings = j.at("warnings").get<std::vector<std::string>>();
  s.wall_ms = opt<double>(j, "wall_ms");
  return s;
}

// Ordering rules applied while reading.
class LogValidator {
 public:
  void check(const LogRecord& rec, std::size_t line) {
    if (done_) throw LogError(line, "record after summary");
    std::visit(Overloaded{
                   [&](const HeaderRecord& h) {
                     if (header_) throw LogError(line, "duplicate header");
                     if (h.format_version > kLogFormatVersion) {
                       throw LogError(line, fmt::format("unsupported format_version {}",
                                                        h.format_version));
                     }
                     header_ = true;
                   },
                   [&](const FrameRecord& f) {
                     require_header(line);
                     if (frame_ && f.frame <= *frame_) {
                       throw LogError(line, fmt::format("frame {} does not follow frame {}",
                                                        f.frame, *frame_));
                     }
                     frame_ = f.frame;
                   },
                   [&](const ObsRecord& o) {
                     require_header(line);
                     if (!frame_ || o.frame != *frame_) {
                       throw LogError(line, fmt::format("observation for frame {} outside its "
                                                        "frame record",
                                                        o.frame));
                     }
                     if (o.identity_id && !states_.contains(*o.identity_id)) {
                       throw LogError(line, fmt::format("observation references identity {} "
                                                        "before its enrolled event",
                                                        *o.identity_id));
                     }
                   },
                   [&](const IdentityEventRecord& e) {
                     require_header(line);
                     if (!frame_ || e.frame != *frame_) {
                       throw LogError(line, "identity event outside its frame");
                     }
                     auto it = states_.find(e.id);
                     if (e.event == LifecycleEvent::Enrolled) {
                       if (it != states_.end() || e.id != static_cast<IdentityId>(states_.size())) {
                         throw LogError(line, fmt::format("identity {} enrolled out of order",
                                                          e.id));
                       }
                       states_.emplace(e.id, IdentityState::Held);
                       return;
                     }
                     if (it == states_.end()) {
                       throw LogError(line, fmt::format("identity {} {} before enrollment", e.id,
                                                        to_string(e.event)));
                     }
                     if (it->second != IdentityState::Held) {
                       throw LogError(line, fmt::format("identity {} already {}", e.id,
                                                        to_string(it->second)));
                     }
                     it->second = e.event == LifecycleEvent::Activated ? IdentityState::Active
                                                                        : IdentityState::Discarded;
                   },
                   [&](const SummaryRecord&) {
                     require_header(line);
                     done_ = true;
                   },
               },
               rec);
  }

  void finish(std::size_t last_line) const {
    if (!header_) throw LogError(1, "log has no header");
    if (!done_) {
      throw LogError(last_line + 1, "log truncated: missing summary record");
    }
  }

 private:
  void require_header(std::size_t line) const {
    if (!header_) throw LogError(line, "first record must be the header");
  }

  bool header_ = false;
  bool done_ = false;
  std::optional<FrameIndex> frame_;
  std::map<IdentityId, IdentityState> states_;
};

}  // namespace

LogError::LogError(std::size_t line, const std::string& message)
    : InvalidArgument(fmt::format("log line {}: {}", line, message)), line_(line) {}

std::string to_json_line(const LogRecord& record) {
  const Json j = std::visit(Overloaded{
                                [](const HeaderRecord& h) { return header_json(h); },
                                [](const FrameRecord& f) {
                                  return Json{{"type", "frame"},
                                              {"frame", f.frame},
                                              {"detections", f.detections},
                                              {"failures", f.failures}};
                                },
                                [](const ObsRecord& o) { return obs_json(o); },
                                [](const IdentityEventRecord& e) { return event_json(e); },
                                [](const SummaryRecord& s) { return summary_json(s); },
                            },
                            record);
  return j.dump();
}

std::optional<LogRecord> parse_json_line(std::string_view line, std::size_t line_no) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw LogError(line_no, fmt::format("malformed record: {}", e.what()));
  }
  try {
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
      throw InvalidArgument("record has no string 'type' field");
    }
    const auto type = j.at("type").get<std::string>();
    if (type == "header") return header_from(j);
    if (type == "frame") {
      return FrameRecord{j.at("frame").get<FrameIndex>(), j.at("detections").get<std::int64_t>(),
                         j.value("failures", std::int64_t{0})};
    }
    if (type == "obs") return obs_from(j);
    if (type == "identity") return event_from(j);
    if (type == "summary") return summary_from(j);
    return std::nullopt;
  } catch (const LogError&) {
    throw;
  } catch (const std::exception& e) {
    throw LogError(line_no, e.what());
  }
}

void write_log(const std::vector<LogRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
  out.flush();
}

void write_log(const std::vector<LogRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument(fmt::format("cannot write log '{}'", path.string()));
  write_log(records, out);
}

const HeaderRecord& ParsedLog::header() const { return std::get<HeaderRecord>(records.front()); }

const SummaryRecord& ParsedLog::summary() const {
  return std::get<SummaryRecord>(records.back());
}

ParsedLog read_log(std::istream& in) {
  ParsedLog log;
  LogValidator validator;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto rec = parse_json_line(line, line_no);
    if (!rec) {
      log.warnings.push_back(fmt::format("line {}: skipped record of unknown type", line_no));
      continue;
    }
    if (log.records.empty() && !std::holds_alternative<HeaderRecord>(*rec)) {
      throw LogError(line_no, "first record must be the header");
    }
    validator.check(*rec, line_no);
    log.records.push_back(std::move(*rec));
    log.lines.push_back(line_no);
  }
  validator.finish(line_no);
  return log;
}

ParsedLog read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument(fmt::format("cannot open log '{}'", path.string()));
  return read_log(in);
}

HeaderRecord make_header_record(const RunHeader& header, bool embeddings_included) {
  HeaderRecord h;
  h.run_id = header.run_id;
  h.params = header.params;
  h.embedding_dim = header.params.embedding_dim;
  h.provider = header.provider;
  h.deterministic = header.deterministic;
  h.embeddings_included = embeddings_included;
  h.fps = header.source.fps;
  h.frame_width = header.source.frame_width;
  h.frame_height = header.source.frame_height;
  if (!header.deterministic) h.started_at = header.started_at;
  return h;
}

ObsRecord make_obs_record(const FrameObservation& obs, bool include_embedding) {
  ObsRecord o;
  o.frame = obs.frame_index;
  o.detection_index = static_cast<std::int64_t>(obs.detection_index);
  o.outcome = obs.outcome;
  o.identity_id = obs.identity_id;
  o.state = obs.state_at_emit;
  o.box = obs.detection.box;
  o.score = obs.detection.score;
  o.distance = obs.distance;
  o.landmarks = obs.detection.landmarks;
  if (include_embedding && obs.embedding) {
    const auto v = obs.embedding->values();
    o.embedding = std::vector<double>(v.begin(), v.end());
  }
  o.tracker_nearest_id = obs.tracker_nearest_id;
  o.tracker_iou = obs.tracker_iou;
  return o;
}

SummaryRecord make_summary_record(const RunSummary& summary) {
  return {summary.frames,     summary.outcomes,          summary.provider_failures,
          summary.gallery,    summary.truncated,         summary.truncation_reason,
          summary.warnings,   summary.wall_ms};
}

namespace {

template <class Emit>
void frame_records(const FrameReport& report, bool include_embeddings, Emit&& emit) {
  emit(FrameRecord{report.frame_index, static_cast<std::int64_t>(report.detection_count),
                   static_cast<std::int64_t>(report.failures.size())});
  for (const auto& e : report.emissions) {
    if (const auto* obs = std::get_if<FrameObservation>(&e)) {
      emit(make_obs_record(*obs, include_embeddings));
    } else {
      emit(std::get<IdentityEvent>(e));
    }
  }
}

}  // namespace

LogWriter::LogWriter(std::ostream& out, LogWriterOptions options)
    : out_(out), options_(options) {}

void LogWriter::emit(const LogRecord& record) { out_ << to_json_line(record) << '\n'; }

void LogWriter::begin(const RunHeader& header) {
  emit(make_header_record(header, options_.embed_embeddings));
}

void LogWriter::frame(const FrameReport& report) {
  frame_records(report, options_.embed_embeddings, [&](LogRecord r) { emit(r); });
}

void LogWriter::end(const RunSummary& summary) {
  emit(make_summary_record(summary));
  out_.flush();
}

void RecordingSink::begin(const RunHeader& header) {
  records_.emplace_back(make_header_record(header, options_.embed_embeddings));
}

void RecordingSink::frame(const FrameReport& report) {
  frame_records(report, options_.embed_embeddings,
                [&](LogRecord r) { records_.push_back(std::move(r)); });
}

void RecordingSink::end(const RunSummary& summary) {
  records_.emplace_back(make_summary_record(summary));
}

}  // namespace facereid
