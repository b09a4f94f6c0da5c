#pragma once

#include <limits>
#include <optional>
#include <set>

#include "facereid/types.hpp"

namespace facereid {

struct MatchResult {
  bool matched = false;
  std::optional<IdentityId> identity_id;  // the argmin identity when matched
  double distance = std::numeric_limits<double>::infinity();
};

// d(a, b) = 1 - cos(a, b). Both embeddings are unit norm, so this is
// 1 - a.b. Throws InvalidArgument on dimension mismatch.
double cosine_distance(const FaceEmbedding& a, const FaceEmbedding& b);

// Nearest non-Discarded, non-claimed identity by cosine distance. Held
// identities are candidates. Ties go to the lowest id. An empty candidate set
// yields matched = false with an infinite distance.
MatchResult match_identity(const FaceEmbedding& query, const Gallery& gallery, double tau_d,
                           const std::set<IdentityId>& claimed = {});

}  // namespace facereid
