#include <random>

#include <gtest/gtest.h>

#include "facereid/tracker.hpp"
#include "test_support.hpp"

namespace facereid {
namespace {

TEST(Iou, Examples) {
  const BoundingBox a(0, 0, 10, 10);
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, BoundingBox(20, 20, 30, 30)), 0.0);
  EXPECT_NEAR(iou(a, BoundingBox(5, 0, 15, 10)), 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(iou(a, BoundingBox(5, 0, 15, 10)), testing::oracle_iou_grid(0, 0, 10, 10, 5, 0, 15, 10),
              1e-12);
  EXPECT_EQ(iou(a, BoundingBox(10, 0, 20, 10)), 0.0);  // touching edge
}

TEST(Iou, MatchesPixelGridAndIsSymmetric) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> c(0, 40);
  std::uniform_int_distribution<int> s(1, 20);
  for (int i = 0; i < 500; ++i) {
    const int ax = c(rng), ay = c(rng), aw = s(rng), ah = s(rng);
    const int bx = c(rng), by = c(rng), bw = s(rng), bh = s(rng);
    const BoundingBox a(ax, ay, ax + aw, ay + ah), b(bx, by, bx + bw, by + bh);
    const double v = iou(a, b);
    EXPECT_NEAR(v, testing::oracle_iou_grid(ax, ay, ax + aw, ay + ah, bx, by, bx + bw, by + bh),
                1e-12);
    EXPECT_EQ(v, iou(b, a));
    EXPECT_EQ(v == 1.0, a == b);
  }
}

TEST(Iou, NearlyIdenticalBoxesStayBelowOne) {
  const BoundingBox a(0, 0, 1000, 1000), b(0, 0, 1000, 1000 + 1e-9);
  EXPECT_LT(iou(a, b), 1.0);
}

struct Fixture {
  Gallery gallery;
  RecentBoxes recent;
  EngineParams params;

  Fixture() {
    gallery.enroll(testing::axis(4, 0), BoundingBox(0, 0, 10, 10), 0, IdentityState::Active);
    recent.emplace(0, RecentBox{BoundingBox(0, 0, 10, 10), 4});
  }
};

TEST(ValidateCandidate, EmptyGalleryAlwaysValid) {
  const Gallery g;
  for (auto policy : {ValidationPolicy::OverlapReject, ValidationPolicy::ContinuityConfirm,
                      ValidationPolicy::Off}) {
    EngineParams p;
    p.validation_policy = policy;
    EXPECT_TRUE(validate_candidate(testing::det(0, 0, 10, 10, 0.9, 5), g, p, {}, 5).valid);
  }
}

TEST(ValidateCandidate, OverlapRejectSuppressesDuplicateBox) {
  Fixture f;
  const auto v = validate_candidate(testing::det(0, 0, 10, 10, 0.9, 5), f.gallery, f.params,
                                    f.recent, 5);
  EXPECT_FALSE(v.valid);
  EXPECT_EQ(v.nearest_id, 0);
  EXPECT_EQ(v.iou, 1.0);
  EXPECT_EQ(v.policy, ValidationPolicy::OverlapReject);
}

TEST(ValidateCandidate, OverlapRejectAcceptsDisjointBox) {
  Fixture f;
  const auto v = validate_candidate(testing::det(50, 50, 60, 60, 0.9, 5), f.gallery, f.params,
                                    f.recent, 5);
  EXPECT_TRUE(v.valid);
  EXPECT_EQ(v.iou, 0.0);
}

TEST(ValidateCandidate, ContinuityConfirmIsTheReverse) {
  Fixture f;
  f.params.validation_policy = ValidationPolicy::ContinuityConfirm;
  EXPECT_TRUE(validate_candidate(testing::det(0, 0, 10, 10, 0.9, 5), f.gallery, f.params,
                                 f.recent, 5).valid);
  EXPECT_FALSE(validate_candidate(testing::det(50, 50, 60, 60, 0.9, 5), f.gallery, f.params,
                                  f.recent, 5).valid);
}

TEST(ValidateCandidate, StaleBoxesAreIgnored) {
  Fixture f;
  // Box from frame 4 is outside a one-frame lookback at frame 6.
  const auto over = validate_candidate(testing::det(0, 0, 10, 10, 0.9, 6), f.gallery, f.params,
                                       f.recent, 6);
  EXPECT_TRUE(over.valid);
  EXPECT_FALSE(over.nearest_id.has_value());

  f.params.validation_policy = ValidationPolicy::ContinuityConfirm;
  EXPECT_FALSE(validate_candidate(testing::det(0, 0, 10, 10, 0.9, 6), f.gallery, f.params,
                                  f.recent, 6).valid);

  f.params.t_lookback = 2;
  EXPECT_TRUE(validate_candidate(testing::det(0, 0, 10, 10, 0.9, 6), f.gallery, f.params,
                                 f.recent, 6).valid);
}

TEST(ValidateCandidate, DiscardedIdentitiesAreIgnored) {
  Fixture f;
  f.gallery.enroll(testing::axis(4, 1), BoundingBox(50, 50, 60, 60), 2, IdentityState::Held);
  f.recent.emplace(1, RecentBox{BoundingBox(50, 50, 60, 60), 4});
  f.gallery.transition(1, IdentityState::Discarded);
  const auto v = validate_candidate(testing::det(50, 50, 60, 60, 0.9, 5), f.gallery, f.params,
                                    f.recent, 5);
  EXPECT_TRUE(v.valid);
  EXPECT_EQ(v.nearest_id, 0);
}

TEST(ValidateCandidate, OffAlwaysValid) {
  Fixture f;
  f.params.validation_policy = ValidationPolicy::Off;
  EXPECT_TRUE(validate_candidate(testing::det(0, 0, 10, 10, 0.9, 5), f.gallery, f.params,
                                 f.recent, 5).valid);
}

TEST(ValidateCandidate, PoliciesAreComplementsAndGalleryUntouched) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> pos(0, 200), size(5, 60), tau(0.05, 0.95);
  std::uniform_int_distribution<int> count(1, 8);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    Gallery g;
    RecentBoxes recent;
    const int k = count(rng);
    for (int j = 0; j < k; ++j) {
      const double x = pos(rng), y = pos(rng);
      const BoundingBox b(x, y, x + size(rng), y + size(rng));
      g.enroll(testing::axis(4, j % 4), b, 0, IdentityState::Active);
      recent.emplace(j, RecentBox{b, 9});
    }
    const double x = pos(rng), y = pos(rng);
    const auto cand = testing::det(x, y, x + size(rng), y + size(rng), 0.9, 10);
    EngineParams p;
    p.tau_iou = tau(rng);
    const auto before = g.records().size();

    p.validation_policy = ValidationPolicy::OverlapReject;
    const auto a = validate_candidate(cand, g, p, recent, 10);
    p.validation_policy = ValidationPolicy::ContinuityConfirm;
    const auto b = validate_candidate(cand, g, p, recent, 10);
    EXPECT_EQ(g.records().size(), before);
    ASSERT_TRUE(a.nearest_id.has_value());
    EXPECT_EQ(a.nearest_id, b.nearest_id);
    if (a.iou == p.tau_iou) continue;
    EXPECT_NE(a.valid, b.valid) << "configuration " << i;
    ++checked;
  }
  EXPECT_GT(checked, 990);
}

}  // namespace
}  // namespace facereid
