#include "facereid/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>

#include <fmt/format.h>

namespace facereid {

FaceEmbedding PrecomputedEmbedder::embed(const Frame& frame, std::size_t detection) {
  if (detection >= frame.embeddings.size() || !frame.embeddings[detection]) {
    throw ProviderError(fmt::format("frame {} detection {} carries no embedding", frame.index,
                                    detection));
  }
  return *frame.embeddings[detection];
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::RejectedLowScore: return "rejected_low_score";
    case Outcome::Matched: return "matched";
    case Outcome::Enrolled: return "enrolled";
    case Outcome::SuppressedByTracker: return "suppressed_by_tracker";
  }
  return "unknown";
}

Outcome outcome_from_string(std::string_view s) {
  if (s == "rejected_low_score") return Outcome::RejectedLowScore;
  if (s == "matched") return Outcome::Matched;
  if (s == "enrolled") return Outcome::Enrolled;
  if (s == "suppressed_by_tracker") return Outcome::SuppressedByTracker;
  throw InvalidArgument(fmt::format("unknown outcome '{}'", s));
}

std::string_view to_string(LifecycleEvent e) {
  switch (e) {
    case LifecycleEvent::Enrolled: return "enrolled";
    case LifecycleEvent::Activated: return "activated";
    case LifecycleEvent::Discarded: return "discarded";
  }
  return "unknown";
}

LifecycleEvent lifecycle_event_from_string(std::string_view s) {
  if (s == "enrolled") return LifecycleEvent::Enrolled;
  if (s == "activated") return LifecycleEvent::Activated;
  if (s == "discarded") return LifecycleEvent::Discarded;
  throw InvalidArgument(fmt::format("unknown identity event '{}'", s));
}

std::vector<FrameObservation> FrameReport::observations() const {
  std::vector<FrameObservation> out;
  for (const auto& e : emissions) {
    if (const auto* obs = std::get_if<FrameObservation>(&e)) out.push_back(*obs);
  }
  return out;
}

std::vector<IdentityEvent> FrameReport::events() const {
  std::vector<IdentityEvent> out;
  for (const auto& e : emissions) {
    if (const auto* ev = std::get_if<IdentityEvent>(&e)) out.push_back(*ev);
  }
  return out;
}

Engine::Engine(EngineParams params) : params_(validate_params(params)) {}

FrameReport Engine::process_frame(const Frame& frame, EmbeddingProvider& embedder) {
  if (last_frame_ && frame.index <= *last_frame_) {
    throw InvalidArgument(fmt::format("frame index {} does not follow {}", frame.index,
                                      *last_frame_));
  }
  for (const auto& det : frame.detections) {
    validate_detection(det);
    if (det.frame_index != frame.index) {
      throw InvalidArgument(fmt::format("detection tagged with frame {} delivered in frame {}",
                                        det.frame_index, frame.index));
    }
  }
  last_frame_ = frame.index;

  FrameReport report;
  report.frame_index = frame.index;
  report.detection_count = frame.detections.size();

  struct Survivor {
    std::size_t index;
    FaceEmbedding embedding;
  };
  std::vector<Survivor> survivors;

  // Gate on detector confidence, then embed what is left.
  for (std::size_t i = 0; i < frame.detections.size(); ++i) {
    const auto& det = frame.detections[i];
    if (det.score < params_.sigma_h) {
      report.emissions.emplace_back(FrameObservation{
          .frame_index = frame.index,
          .detection_index = i,
          .detection = det,
          .outcome = Outcome::RejectedLowScore,
      });
      continue;
    }
    try {
      auto emb = embedder.embed(frame, i);
      if (static_cast<std::int64_t>(emb.dim()) != params_.embedding_dim) {
        throw ProviderError(fmt::format("embedding has dimension {}, engine expects {}",
                                        emb.dim(), params_.embedding_dim));
      }
      survivors.push_back({i, std::move(emb)});
    } catch (const std::exception& e) {
      report.failures.push_back({i, e.what()});
    }
  }

  std::stable_sort(survivors.begin(), survivors.end(), [&](const Survivor& a, const Survivor& b) {
    return frame.detections[a.index].score > frame.detections[b.index].score;
  });

  static const std::set<IdentityId> kNoClaims;
  std::set<IdentityId> claimed;
  std::vector<std::pair<IdentityId, BoundingBox>> seen;

  for (auto& s : survivors) {
    const auto& det = frame.detections[s.index];
    const auto match = match_identity(s.embedding, gallery_, params_.tau_d,
                                      params_.exclusive_match ? claimed : kNoClaims);
    std::optional<double> nearest;
    if (std::isfinite(match.distance)) nearest = match.distance;

    if (match.matched) {
      auto& rec = gallery_.at(*match.identity_id);
      rec.last_seen_frame = frame.index;
      rec.last_box = det.box;
      ++rec.total_appearances;
      if (rec.state == IdentityState::Held && frame.index > rec.enrolled_frame) {
        ++rec.hold_appearances;
      }
      claimed.insert(rec.id);
      seen.emplace_back(rec.id, det.box);
      report.emissions.emplace_back(FrameObservation{
          .frame_index = frame.index,
          .detection_index = s.index,
          .detection = det,
          .outcome = Outcome::Matched,
          .identity_id = rec.id,
          .distance = match.distance,
          .state_at_emit = rec.state,
          .embedding = std::move(s.embedding),
      });
      continue;
    }

    const auto verdict = validate_candidate(det, gallery_, params_, recent_boxes_, frame.index);
    std::optional<double> tracker_iou;
    if (verdict.nearest_id) tracker_iou = verdict.iou;

    if (!verdict.valid) {
      report.emissions.emplace_back(FrameObservation{
          .frame_index = frame.index,
          .detection_index = s.index,
          .detection = det,
          .outcome = Outcome::SuppressedByTracker,
          .distance = nearest,
          .embedding = std::move(s.embedding),
          .tracker_nearest_id = verdict.nearest_id,
          .tracker_iou = tracker_iou,
      });
      continue;
    }

    const auto initial = params_.t_min > 0 ? IdentityState::Held : IdentityState::Active;
    const auto& rec = gallery_.enroll(s.embedding, det.box, frame.index, initial);
    const IdentityId id = rec.id;
    report.emissions.emplace_back(IdentityEvent{id, LifecycleEvent::Enrolled, frame.index});
    if (initial == IdentityState::Active) {
      report.emissions.emplace_back(IdentityEvent{id, LifecycleEvent::Activated, frame.index});
    } else {
      hold_queue_.push_back({id, frame.index + params_.t_min});
    }
    claimed.insert(id);
    seen.emplace_back(id, det.box);
    report.emissions.emplace_back(FrameObservation{
        .frame_index = frame.index,
        .detection_index = s.index,
        .detection = det,
        .outcome = Outcome::Enrolled,
        .identity_id = id,
        .distance = nearest,
        .state_at_emit = initial,
        .embedding = std::move(s.embedding),
        .tracker_nearest_id = verdict.nearest_id,
        .tracker_iou = tracker_iou,
    });
  }

  expire_holds(frame.index, report);

  for (const auto& [id, box] : seen) {
    if (gallery_.at(id).state == IdentityState::Discarded) continue;
    recent_boxes_.insert_or_assign(id, RecentBox{box, frame.index});
  }
  // Entries older than this can never be inside the lookback window again.
  const FrameIndex keep_from = frame.index + 1 - params_.t_lookback;
  std::erase_if(recent_boxes_, [&](const auto& kv) {
    return kv.second.frame < keep_from ||
           gallery_.at(kv.first).state == IdentityState::Discarded;
  });

  return report;
}

void Engine::expire_holds(FrameIndex frame, FrameReport& report) {
  std::vector<HoldEntry> pending;
  for (const auto& entry : hold_queue_) {
    if (entry.deadline > frame) {
      pending.push_back(entry);
      continue;
    }
    const auto& rec = gallery_.at(entry.id);
    const bool confirmed = rec.hold_appearances >= params_.min_hold_appearances;
    gallery_.transition(entry.id, confirmed ? IdentityState::Active : IdentityState::Discarded);
    report.emissions.emplace_back(IdentityEvent{
        entry.id, confirmed ? LifecycleEvent::Activated : LifecycleEvent::Discarded, frame});
  }
  hold_queue_ = std::move(pending);
}

GalleryCensus census(const Gallery& gallery) {
  return {
      .held = static_cast<std::int64_t>(gallery.count(IdentityState::Held)),
      .active = static_cast<std::int64_t>(gallery.count(IdentityState::Active)),
      .discarded = static_cast<std::int64_t>(gallery.count(IdentityState::Discarded)),
  };
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunResult run(FrameSource& source, EmbeddingProvider& embedder, const EngineParams& params,
              RunSink& sink, const RunOptions& options) {
  Engine engine(params);
  const auto wall_start = std::chrono::steady_clock::now();

  RunHeader header;
  header.params = engine.params();
  header.provider = source.descriptor();
  header.deterministic = options.deterministic;
  header.source = source.info();
  if (options.run_id) {
    header.run_id = *options.run_id;
  } else if (options.deterministic) {
    const auto& p = engine.params();
    header.run_id = fmt::format(
        "{:016x}", fnv1a(fmt::format("{}|{}|{}|{}|{}|{}|{}|{}|{}|{}", header.provider, p.sigma_h,
                                     p.tau_d, p.tau_iou, p.t_min, p.min_hold_appearances,
                                     p.embedding_dim, to_string(p.validation_policy),
                                     p.exclusive_match, p.t_lookback)));
  } else {
    const auto now = std::chrono::system_clock::now();
    header.run_id = fmt::format(
        "run-{}", std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch())
                      .count());
    header.started_at = utc_timestamp(now);
  }
  sink.begin(header);

  RunSummary summary;
  while (true) {
    std::optional<Frame> frame;
    try {
      frame = source.next();
    } catch (const std::exception& e) {
      summary.truncated = true;
      summary.truncation_reason = e.what();
      break;
    }
    if (!frame) break;

    auto report = engine.process_frame(*frame, embedder);
    ++summary.frames;
    summary.provider_failures += static_cast<std::int64_t>(report.failures.size());
    for (const auto& e : report.emissions) {
      const auto* obs = std::get_if<FrameObservation>(&e);
      if (!obs) continue;
      switch (obs->outcome) {
        case Outcome::RejectedLowScore: ++summary.outcomes.rejected_low_score; break;
        case Outcome::Matched: ++summary.outcomes.matched; break;
        case Outcome::Enrolled: ++summary.outcomes.enrolled; break;
        case Outcome::SuppressedByTracker: ++summary.outcomes.suppressed_by_tracker; break;
      }
    }
    sink.frame(report);
  }

  summary.gallery = census(engine.gallery());
  summary.warnings = source.warnings();
  if (!options.deterministic) {
    summary.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - wall_start)
                          .count();
  }
  sink.end(summary);
  return {summary, engine.gallery()};
}

}  // namespace facereid
