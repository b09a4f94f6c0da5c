#include "facereid/similarity.hpp"

#include <fmt/format.h>

namespace facereid {

double cosine_distance(const FaceEmbedding& a, const FaceEmbedding& b) {
  if (a.dim() != b.dim()) {
    throw InvalidArgument(
        fmt::format("embedding dimension mismatch: {} vs {}", a.dim(), b.dim()));
  }
  const auto av = a.values();
  const auto bv = b.values();
  double dot = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) dot += av[i] * bv[i];
  return 1.0 - dot;
}

MatchResult match_identity(const FaceEmbedding& query, const Gallery& gallery, double tau_d,
                           const std::set<IdentityId>& claimed) {
  MatchResult best;
  std::optional<IdentityId> best_id;
  for (const auto& rec : gallery.records()) {
    if (rec.state == IdentityState::Discarded || claimed.contains(rec.id)) continue;
    const double d = cosine_distance(query, rec.embedding);
    // Records are in ascending id order; strict '<' keeps the lowest id on ties.
    if (!best_id || d < best.distance) {
      best.distance = d;
      best_id = rec.id;
    }
  }
  if (best_id && best.distance < tau_d) {
    best.matched = true;
    best.identity_id = best_id;
  }
  return best;
}

}  // namespace facereid
