#include "facereid/tracker.hpp"

#include <algorithm>
#include <cmath>

namespace facereid {

double iou(const BoundingBox& a, const BoundingBox& b) {
  if (a == b) return 1.0;
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  // Distinct boxes never reach exactly 1, even when rounding says otherwise.
  return std::clamp(inter / uni, 0.0, std::nextafter(1.0, 0.0));
}

CandidateVerdict validate_candidate(const FaceDetection& candidate, const Gallery& gallery,
                                    const EngineParams& params, const RecentBoxes& recent_boxes,
                                    FrameIndex current_frame) {
  CandidateVerdict verdict;
  verdict.policy = params.validation_policy;

  if (params.validation_policy == ValidationPolicy::Off || gallery.empty()) {
    verdict.valid = true;
    return verdict;
  }

  const FrameIndex oldest = current_frame - params.t_lookback;
  double best = -1.0;
  for (const auto& [id, recent] : recent_boxes) {
    if (recent.frame < oldest || recent.frame >= current_frame) continue;
    if (!gallery.contains(id) || gallery.at(id).state == IdentityState::Discarded) continue;
    const double v = iou(candidate.box, recent.box);
    if (v > best) {
      best = v;
      verdict.nearest_id = id;
    }
  }

  if (!verdict.nearest_id) {
    verdict.valid = params.validation_policy == ValidationPolicy::OverlapReject;
    return verdict;
  }

  verdict.iou = best;
  if (params.validation_policy == ValidationPolicy::OverlapReject) {
    verdict.valid = best < params.tau_iou;
  } else {
    verdict.valid = best >= params.tau_iou;
  }
  return verdict;
}

}  // namespace facereid
