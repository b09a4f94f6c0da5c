#pragma once

#include <map>
#include <optional>

#include "facereid/types.hpp"

namespace facereid {

// Intersection area over union area; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

struct RecentBox {
  BoundingBox box;
  FrameIndex frame;
};

// Last box of each identity that was seen recently. Owned by the engine;
// validate_candidate only reads it.
using RecentBoxes = std::map<IdentityId, RecentBox>;

struct CandidateVerdict {
  bool valid = false;
  ValidationPolicy policy = ValidationPolicy::OverlapReject;
  std::optional<IdentityId> nearest_id;  // spatially closest recent identity
  double iou = 0.0;
};

// Decides whether an unmatched detection may be enrolled as a new identity.
//
// The nearest identity is chosen spatially: the non-Discarded identity
// whose box was seen within [current_frame - t_lookback, current_frame - 1]
// and has maximal IoU with the candidate (lowest id on ties).
//
//   Off                -> always valid.
//   OverlapReject      -> valid iff IoU(candidate, nearest) < tau_iou. A new face
//                         sitting on top of a face from the previous frame is
//                         taken to be that person with a drifted embedding.
//   ContinuityConfirm  -> valid iff IoU(candidate, nearest) >= tau_iou.
//
// With no recent box, OverlapReject accepts and ContinuityConfirm rejects.
// An empty gallery (no non-Discarded records) accepts under every policy.
CandidateVerdict validate_candidate(const FaceDetection& candidate, const Gallery& gallery,
                                    const EngineParams& params, const RecentBoxes& recent_boxes,
                                    FrameIndex current_frame);

}  // namespace facereid
