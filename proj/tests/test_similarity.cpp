#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "facereid/similarity.hpp"
#include "test_support.hpp"

namespace facereid {
namespace {

using testing::axis;
using testing::unit;

TEST(CosineDistance, IdentityOrthogonalAntipodal) {
  const auto a = axis(3, 0);
  EXPECT_NEAR(cosine_distance(a, a), 0.0, 1e-12);
  EXPECT_NEAR(cosine_distance(a, axis(3, 1)), 1.0, 1e-12);
  EXPECT_NEAR(cosine_distance(a, axis(3, 0, -1.0)), 2.0, 1e-12);
}

TEST(CosineDistance, DimensionMismatchThrows) {
  EXPECT_THROW(cosine_distance(axis(3, 0), axis(4, 0)), InvalidArgument);
}

TEST(CosineDistance, SymmetricAndScaleInvariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int i = 0; i < 500; ++i) {
    auto ra = testing::random_raw(rng, 32);
    auto rb = testing::random_raw(rng, 32);
    const auto a = FaceEmbedding::from_raw(ra);
    const auto b = FaceEmbedding::from_raw(rb);
    EXPECT_NEAR(cosine_distance(a, b), cosine_distance(b, a), 1e-12);

    const double s = scale(rng);
    for (auto& v : ra) v *= s;
    EXPECT_NEAR(cosine_distance(FaceEmbedding::from_raw(ra), b), cosine_distance(a, b), 1e-9);
  }
}

Gallery two_axis_gallery() {
  Gallery g;
  const BoundingBox box(0, 0, 10, 10);
  g.enroll(unit({1, 0, 0}), box, 0, IdentityState::Active);
  g.enroll(unit({0, 1, 0}), box, 0, IdentityState::Active);
  return g;
}

TEST(MatchIdentity, EmptyGalleryNeverMatches) {
  const Gallery g;
  const auto r = match_identity(axis(3, 0), g, 0.6);
  EXPECT_FALSE(r.matched);
  EXPECT_FALSE(r.identity_id.has_value());
  EXPECT_TRUE(std::isinf(r.distance));
}

TEST(MatchIdentity, NearestBelowThresholdMatches) {
  const auto g = two_axis_gallery();
  const auto r = match_identity(unit({0.8, 0.6, 0}), g, 0.6);
  ASSERT_TRUE(r.matched);
  EXPECT_EQ(r.identity_id, 0);
  EXPECT_NEAR(r.distance, 0.2, 1e-12);
}

TEST(MatchIdentity, EquidistantAboveThresholdDoesNotMatch) {
  const auto g = two_axis_gallery();
  const auto r = match_identity(unit({1, 1, std::sqrt(2.0)}), g, 0.3);
  EXPECT_FALSE(r.matched);
  EXPECT_FALSE(r.identity_id.has_value());
  EXPECT_NEAR(r.distance, 0.5, 1e-12);
}

TEST(MatchIdentity, TiesGoToLowestId) {
  const auto g = two_axis_gallery();
  const auto r = match_identity(unit({1, 1, std::sqrt(2.0)}), g, 0.6);
  ASSERT_TRUE(r.matched);
  EXPECT_EQ(r.identity_id, 0);
}

TEST(MatchIdentity, SkipsDiscardedAndClaimed) {
  Gallery g;
  const BoundingBox box(0, 0, 10, 10);
  g.enroll(unit({1, 0, 0}), box, 0, IdentityState::Held);
  g.enroll(unit({0.9, 0.1, 0}), box, 0, IdentityState::Active);
  g.enroll(unit({0.8, 0.2, 0}), box, 0, IdentityState::Held);
  g.transition(0, IdentityState::Discarded);

  const auto q = unit({1, 0, 0});
  EXPECT_EQ(match_identity(q, g, 0.6).identity_id, 1);
  EXPECT_EQ(match_identity(q, g, 0.6, {1}).identity_id, 2);
  EXPECT_FALSE(match_identity(q, g, 0.6, {1, 2}).matched);
}

TEST(MatchIdentity, HeldIdentitiesAreCandidates) {
  Gallery g;
  g.enroll(unit({1, 0}), BoundingBox(0, 0, 1, 1), 0, IdentityState::Held);
  EXPECT_TRUE(match_identity(unit({1, 0}), g, 0.1).matched);
}

TEST(MatchIdentity, ThresholdIsStrict) {
  const auto g = two_axis_gallery();
  // distance exactly 1 to both axes
  const auto r = match_identity(unit({0, 0, 1}), g, 1.0);
  EXPECT_FALSE(r.matched);
  EXPECT_NEAR(r.distance, 1.0, 1e-15);
}

TEST(MatchIdentity, DimensionMismatchThrows) {
  const auto g = two_axis_gallery();
  EXPECT_THROW(match_identity(axis(4, 0), g, 0.6), InvalidArgument);
}

// Brute-force scan over raw vectors, independent of the unit-norm fast path.
TEST(MatchIdentity, AgreesWithBruteForceScan) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(0, 50);
  std::uniform_int_distribution<int> dim_pick(2, 64);
  std::uniform_real_distribution<double> tau(0.0, 2.0);
  std::bernoulli_distribution discard(0.15);
  for (int inst = 0; inst < 1000; ++inst) {
    const auto dim = static_cast<std::size_t>(dim_pick(rng));
    const int k = size(rng);
    Gallery g;
    std::vector<std::vector<double>> raws;
    for (int j = 0; j < k; ++j) {
      raws.push_back(testing::random_raw(rng, dim));
      g.enroll(FaceEmbedding::from_raw(raws.back()), BoundingBox(0, 0, 1, 1), 0,
               IdentityState::Held);
      if (discard(rng)) g.transition(j, IdentityState::Discarded);
    }
    const auto qraw = testing::random_raw(rng, dim);
    const double t = tau(rng);
    const auto r = match_identity(FaceEmbedding::from_raw(qraw), g, t);

    std::optional<IdentityId> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) {
      if (g.at(j).state == IdentityState::Discarded) continue;
      const double d = testing::oracle_cosine_distance(qraw, raws[j]);
      if (d < best_d - 1e-12) {
        best_d = d;
        best = j;
      }
    }
    if (!best) {
      EXPECT_FALSE(r.matched);
      EXPECT_TRUE(std::isinf(r.distance));
      continue;
    }
    EXPECT_NEAR(r.distance, best_d, 1e-9) << "instance " << inst;
    EXPECT_EQ(r.matched, best_d < t) << "instance " << inst;
    if (r.matched) {
      EXPECT_EQ(r.identity_id, best) << "instance " << inst;
    }
  }
}

}  // namespace
}  // namespace facereid
