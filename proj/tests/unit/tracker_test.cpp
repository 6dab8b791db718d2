#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "awarenav/error.hpp"
#include "awarenav/rng.hpp"
#include "awarenav/tracker.hpp"
#include "oracles.hpp"

using namespace awarenav;

TEST(Kalman, SteadyStateMatchesRiccatiFixedPoint) {
  const KalmanParams kp;
  const double dt = 0.5;
  TrackState t;
  t.p = Matrix4::Identity() * 5.0;
  Matrix4 prior;
  for (int k = 0; k < 4000; ++k) {
    t = kf_predict(t, dt, kp);
    prior = t.p;
    t = kf_update(t, {0.0, 0.0}, kp);
  }
  const Matrix4 expected = oracle::riccati_prior(KalmanParams::transition(dt), KalmanParams::observation(), kp.q, kp.r);
  EXPECT_LT((prior - expected).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Kalman, UpdateKeepsCovarianceSymmetricPositive) {
  const KalmanParams kp;
  Rng rng(4);
  TrackState t;
  t.p = Matrix4::Identity();
  for (int k = 0; k < 200; ++k) {
    t = kf_predict(t, 0.1 + rng.uniform(), kp);
    t = kf_update(t, {rng.normal(0, 1), rng.normal(0, 1)}, kp);
    EXPECT_LT((t.p - t.p.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    Eigen::SelfAdjointEigenSolver<Matrix4> es(t.p);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Kalman, UpdateMovesTowardMeasurement) {
  const KalmanParams kp;
  TrackState t;
  t.p = Matrix4::Identity();
  const TrackState u = kf_update(t, {1.0, -2.0}, kp);
  EXPECT_GT(u.x(0), 0.0);
  EXPECT_LT(u.x(1), 0.0);
  EXPECT_LT(u.p(0, 0), t.p(0, 0));
}

TEST(Kalman, SingularInnovationThrows) {
  KalmanParams kp;
  kp.r = Matrix2::Zero();
  TrackState t;  // zero covariance
  try {
    kf_update(t, {0.0, 0.0}, kp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingularInnovation);
  }
  EXPECT_THROW(kf_predict(t, 0.0, kp), Error);
}

TEST(Kalman, PositionNeesIsChiSquareTwo) {
  const KalmanParams kp;
  const double dt = 0.5;
  const Matrix4 a = KalmanParams::transition(dt);
  const Eigen::LLT<Matrix4> q_chol(kp.q);
  const double r_sigma = std::sqrt(kp.r(0, 0));
  Rng rng(2024);
  double sum = 0.0;
  const int tracks = 1000;
  for (int n = 0; n < tracks; ++n) {
    Vector4 truth(rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 0.5), rng.normal(0, 0.5));
    TrackState est;
    est.x << truth(0) + rng.normal(0, r_sigma), truth(1) + rng.normal(0, r_sigma), 0.0, 0.0;
    est.p = Matrix4::Zero();
    est.p.topLeftCorner<2, 2>() = kp.r;
    est.p(2, 2) = est.p(3, 3) = 0.25;
    for (int k = 0; k < 30; ++k) {
      const Vector4 w = q_chol.matrixL() * Vector4(rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1));
      truth = a * truth + w;
      est = kf_predict(est, dt, kp);
      est = kf_update(est, {truth(0) + rng.normal(0, r_sigma), truth(1) + rng.normal(0, r_sigma)}, kp);
    }
    const Eigen::Vector2d e = truth.head<2>() - est.x.head<2>();
    sum += e.dot(est.p.topLeftCorner<2, 2>().inverse() * e);
  }
  const double mean = sum / tracks;
  EXPECT_GE(mean, 1.5);
  EXPECT_LE(mean, 2.5);
}

TEST(Gaze, LatchesStrictlyAfterThreshold) {
  GazeAccumulator g;
  for (int k = 0; k < 50; ++k) g = gaze_step(g, true, 0.1);
  EXPECT_EQ(g.integral_ns, 5'000'000'000);
  EXPECT_FALSE(g.latched);
  EXPECT_EQ(g.awareness(), -1);
  g = gaze_step(g, true, 0.1);
  EXPECT_TRUE(g.latched);
  EXPECT_EQ(g.awareness(), 1);
}

TEST(Gaze, NonContiguousGazeAccumulates) {
  GazeAccumulator g;
  for (int k = 0; k < 12; ++k) g = gaze_step(g, k % 2 == 0, 1.0);
  EXPECT_DOUBLE_EQ(g.integral_s(), 6.0);
  EXPECT_TRUE(g.latched);
}

TEST(Gaze, LatchNeverReleases) {
  Rng rng(99);
  for (int seq = 0; seq < 2000; ++seq) {
    GazeAccumulator g;
    bool was = false;
    for (int k = 0; k < 40; ++k) {
      g = gaze_step(g, rng.bernoulli(0.5), 0.05 + rng.uniform());
      if (was) ASSERT_TRUE(g.latched);
      was = g.latched;
    }
  }
}

TEST(Gaze, CenterRegionIsInclusiveBox) {
  const CenterRegion c{80.0, 60.0};
  EXPECT_TRUE(c.contains(0, 0));
  EXPECT_TRUE(c.contains(40, 30));
  EXPECT_TRUE(c.contains(-40, -30));
  EXPECT_FALSE(c.contains(40.01, 0));
  EXPECT_FALSE(c.contains(0, -30.01));
}

namespace {

// All partial injections rows -> columns within the gate, by recursion over
// columns rather than rows.
void enumerate(const std::vector<std::vector<double>>& d, double gate, std::size_t col, std::vector<int>& cur,
               int& best_pairs, double& best_cost) {
  const std::size_t cols = d.front().size();
  if (col == cols) {
    int pairs = 0;
    double cost = 0.0;
    for (std::size_t r = 0; r < cur.size(); ++r) {
      if (cur[r] >= 0) {
        ++pairs;
        cost += d[r][static_cast<std::size_t>(cur[r])];
      }
    }
    if (pairs > best_pairs || (pairs == best_pairs && cost < best_cost - 1e-12)) {
      best_pairs = pairs;
      best_cost = cost;
    }
    return;
  }
  enumerate(d, gate, col + 1, cur, best_pairs, best_cost);
  for (std::size_t r = 0; r < cur.size(); ++r) {
    if (cur[r] >= 0 || d[r][col] > gate) continue;
    cur[r] = static_cast<int>(col);
    enumerate(d, gate, col + 1, cur, best_pairs, best_cost);
    cur[r] = -1;
  }
}

}  // namespace

TEST(Association, ExhaustiveMatchesBruteForce) {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t rows = 1 + rng.index(5);
    const std::size_t cols = 1 + rng.index(5);
    std::vector<std::vector<double>> d(rows, std::vector<double>(cols));
    for (auto& row : d) {
      for (double& x : row) x = 2.0 * rng.uniform();
    }
    const double gate = 1.0;
    const std::vector<int> got = gated_assignment(d, gate);
    int pairs = 0;
    double cost = 0.0;
    std::vector<bool> used(cols, false);
    for (std::size_t r = 0; r < rows; ++r) {
      if (got[r] < 0) continue;
      ASSERT_FALSE(used[static_cast<std::size_t>(got[r])]);
      used[static_cast<std::size_t>(got[r])] = true;
      ASSERT_LE(d[r][static_cast<std::size_t>(got[r])], gate);
      ++pairs;
      cost += d[r][static_cast<std::size_t>(got[r])];
    }
    int best_pairs = -1;
    double best_cost = 0.0;
    std::vector<int> cur(rows, -1);
    enumerate(d, gate, 0, cur, best_pairs, best_cost);
    EXPECT_EQ(pairs, best_pairs);
    EXPECT_NEAR(cost, best_cost, 1e-9);
  }
}

TEST(Association, LargeInputsStayOneToOne) {
  Rng rng(5);
  std::vector<std::vector<double>> d(12, std::vector<double>(10));
  for (auto& row : d) {
    for (double& x : row) x = rng.uniform();
  }
  const std::vector<int> got = gated_assignment(d, 0.5);
  std::vector<int> cols;
  for (int c : got) {
    if (c >= 0) cols.push_back(c);
  }
  std::sort(cols.begin(), cols.end());
  EXPECT_EQ(std::adjacent_find(cols.begin(), cols.end()), cols.end());
}

TEST(Fusion, LaserPositionCarriesVisionGaze) {
  Detection v{DetectionSource::Vision, {1.0, 1.0}, 0.0, 0.7, true};
  Detection l{DetectionSource::Laser, {1.1, 1.0}, 0.0, 0.9, false};
  Detection far{DetectionSource::Laser, {5.0, 5.0}, 0.0, 1.0, false};
  const auto fused = fuse_detections({v}, {far, l}, 0.5);
  ASSERT_EQ(fused.size(), 1u);
  EXPECT_DOUBLE_EQ(fused[0].pos.x, 1.1);
  EXPECT_TRUE(fused[0].gaze);
  EXPECT_TRUE(fuse_detections({}, {l}, 0.5).empty());
  const auto alone = fuse_detections({v}, {far}, 0.5);
  EXPECT_DOUBLE_EQ(alone[0].pos.x, 1.0);
}

TEST(TrackerBank, BirthTrackAndDrop) {
  TrackerParams p;
  p.miss_limit = 2;
  TrackerBank bank(p);
  auto det = [](double x, double y, bool gaze = false) {
    return Detection{DetectionSource::Vision, {x, y}, 0.0, 1.0, gaze};
  };
  bank.step({det(0, 0), det(5, 5)}, {}, 0.0);
  ASSERT_EQ(bank.tracks().size(), 2u);
  EXPECT_EQ(bank.tracks()[0].id, 0);
  EXPECT_EQ(bank.tracks()[1].id, 1);

  // The first pedestrian walks east; the second disappears.
  for (int k = 1; k <= 3; ++k) bank.step({det(0.5 * k, 0)}, {}, 1.0 * k);
  ASSERT_EQ(bank.tracks().size(), 1u);
  EXPECT_EQ(bank.tracks()[0].id, 0);
  EXPECT_TRUE(bank.tracks()[0].observed);
  EXPECT_GT(bank.tracks()[0].state.x(2), 0.1);

  EXPECT_THROW(bank.step({}, {}, 0.5), Error);
}

TEST(TrackerBank, GazeLatchesThroughTheBank) {
  TrackerBank bank;
  const Detection d{DetectionSource::Vision, {1.0, 1.0}, 0.0, 1.0, true};
  double t = 0.0;
  bank.step({d}, {}, t);
  // 0.75 s per tick: 6 ticks give 4.5 s, the 7th 5.25 s.
  for (int k = 0; k < 6; ++k) bank.step({d}, {}, t += 0.75);
  EXPECT_FALSE(bank.tracks()[0].gaze.latched);
  bank.step({d}, {}, t += 0.75);
  EXPECT_TRUE(bank.tracks()[0].gaze.latched);
  Detection away = d;
  away.gaze = false;
  for (int k = 0; k < 4; ++k) bank.step({away}, {}, t += 0.75);
  EXPECT_EQ(bank.tracks()[0].awareness(), 1);
}
