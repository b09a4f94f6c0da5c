#include "facereid/types.hpp"

#include <cmath>

#include <fmt/format.h>

namespace facereid {

BoundingBox::BoundingBox(double x1, double y1, double x2, double y2)
    : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) || !std::isfinite(y2)) {
    throw InvalidArgument("bounding box coordinates must be finite");
  }
  if (!(x1 < x2) || !(y1 < y2)) {
    throw InvalidArgument(
        fmt::format("degenerate bounding box ({}, {}, {}, {})", x1, y1, x2, y2));
  }
}

void validate_detection(const FaceDetection& det) {
  if (!(det.score >= 0.0 && det.score <= 1.0)) {
    throw InvalidArgument(fmt::format("detection score {} outside [0, 1]", det.score));
  }
  if (det.frame_index < 0) {
    throw InvalidArgument("detection frame_index must be non-negative");
  }
  if (det.landmarks) {
    for (const auto& p : *det.landmarks) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw InvalidArgument("landmark coordinates must be finite");
      }
    }
  }
}

FaceEmbedding FaceEmbedding::from_raw(std::span<const double> raw) {
  if (raw.empty()) throw InvalidArgument("embedding must have at least one component");
  double sq = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v)) throw InvalidArgument("embedding components must be finite");
    sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw InvalidArgument("embedding must have a finite nonzero norm");
  }
  std::vector<double> values(raw.begin(), raw.end());
  for (double& v : values) v /= norm;
  return FaceEmbedding(std::move(values));
}

FaceEmbedding FaceEmbedding::from_normalized(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("embedding must have at least one component");
  double sq = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("embedding components must be finite");
    sq += v * v;
  }
  if (std::abs(std::sqrt(sq) - 1.0) > kNormTolerance) {
    throw InvalidArgument(fmt::format("embedding norm {} is not 1", std::sqrt(sq)));
  }
  return FaceEmbedding(std::move(values));
}

std::string_view to_string(IdentityState s) {
  switch (s) {
    case IdentityState::Held: return "held";
    case IdentityState::Active: return "active";
    case IdentityState::Discarded: return "discarded";
  }
  return "unknown";
}

IdentityState identity_state_from_string(std::string_view s) {
  if (s == "held") return IdentityState::Held;
  if (s == "active") return IdentityState::Active;
  if (s == "discarded") return IdentityState::Discarded;
  throw InvalidArgument(fmt::format("unknown identity state '{}'", s));
}

bool Gallery::contains(IdentityId id) const {
  return id >= 0 && id < static_cast<IdentityId>(records_.size());
}

const IdentityRecord& Gallery::at(IdentityId id) const {
  if (!contains(id)) throw InvalidArgument(fmt::format("unknown identity id {}", id));
  return records_[static_cast<std::size_t>(id)];
}

IdentityRecord& Gallery::at(IdentityId id) {
  if (!contains(id)) throw InvalidArgument(fmt::format("unknown identity id {}", id));
  return records_[static_cast<std::size_t>(id)];
}

std::size_t Gallery::live_count() const {
  return records_.size() - count(IdentityState::Discarded);
}

std::size_t Gallery::count(IdentityState s) const {
  std::size_t n = 0;
  for (const auto& r : records_) n += (r.state == s) ? 1 : 0;
  return n;
}

IdentityRecord& Gallery::enroll(FaceEmbedding embedding, const BoundingBox& box, FrameIndex frame,
                                IdentityState initial) {
  if (initial == IdentityState::Discarded) {
    throw InvalidArgument("cannot enroll an identity as discarded");
  }
  records_.push_back(IdentityRecord{
      .id = next_id(),
      .embedding = std::move(embedding),
      .state = initial,
      .enrolled_frame = frame,
      .last_seen_frame = frame,
      .last_box = box,
      .hold_appearances = 0,
      .total_appearances = 1,
  });
  return records_.back();
}

void Gallery::transition(IdentityId id, IdentityState to) {
  auto& rec = at(id);
  if (rec.state != IdentityState::Held || to == IdentityState::Held) {
    throw std::logic_error(fmt::format("illegal identity transition {} -> {} for id {}",
                                       to_string(rec.state), to_string(to), id));
  }
  rec.state = to;
}

std::string_view to_string(ValidationPolicy p) {
  switch (p) {
    case ValidationPolicy::OverlapReject: return "overlap_reject";
    case ValidationPolicy::ContinuityConfirm: return "continuity_confirm";
    case ValidationPolicy::Off: return "off";
  }
  return "unknown";
}

ValidationPolicy validation_policy_from_string(std::string_view s) {
  if (s == "overlap_reject") return ValidationPolicy::OverlapReject;
  if (s == "continuity_confirm") return ValidationPolicy::ContinuityConfirm;
  if (s == "off") return ValidationPolicy::Off;
  throw InvalidArgument(fmt::format(
      "validation_policy: unknown value '{}' (expected overlap_reject, continuity_confirm or off)",
      s));
}

const EngineParams& validate_params(const EngineParams& p) {
  auto in_range = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  if (!in_range(p.sigma_h, 0.0, 1.0)) {
    throw InvalidArgument(fmt::format("sigma_h must be in [0, 1], got {}", p.sigma_h));
  }
  if (!in_range(p.tau_d, 0.0, 2.0)) {
    throw InvalidArgument(fmt::format("tau_d must be in [0, 2], got {}", p.tau_d));
  }
  if (!in_range(p.tau_iou, 0.0, 1.0)) {
    throw InvalidArgument(fmt::format("tau_iou must be in [0, 1], got {}", p.tau_iou));
  }
  if (p.t_min < 0) {
    throw InvalidArgument(fmt::format("t_min must be >= 0, got {}", p.t_min));
  }
  if (p.min_hold_appearances < 1) {
    throw InvalidArgument(
        fmt::format("min_hold_appearances must be >= 1, got {}", p.min_hold_appearances));
  }
  if (p.embedding_dim < 1) {
    throw InvalidArgument(fmt::format("embedding_dim must be >= 1, got {}", p.embedding_dim));
  }
  if (p.t_lookback < 1) {
    throw InvalidArgument(fmt::format("t_lookback must be >= 1, got {}", p.t_lookback));
  }
  return p;
}

}  // namespace facereid
