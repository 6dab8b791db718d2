#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "awarenav/grid.hpp"

namespace awarenav {

enum class DetectionSource : std::uint8_t { Vision, Laser };

struct Detection {
  DetectionSource source = DetectionSource::Vision;
  Vec2 pos;
  double timestamp = 0.0;
  double confidence = 1.0;
  /// Per-tick eye-contact indicator. Only vision detections carry a face, so
  /// fused detections inherit it from their vision partner.
  bool gaze = false;
};

using Vector4 = Eigen::Vector4d;
using Matrix4 = Eigen::Matrix4d;
using Matrix2 = Eigen::Matrix2d;
using Matrix24 = Eigen::Matrix<double, 2, 4>;

/// Constant-velocity pedestrian model. There is no control input, so the
/// input matrix is identically zero and omitted.
struct KalmanParams {
  Matrix4 q = Eigen::Vector4d(0.01, 0.01, 0.1, 0.1).asDiagonal();
  Matrix2 r = Matrix2::Identity() * (0.1 * 0.1);

  static Matrix4 transition(double dt);
  static Matrix24 observation();
};

struct TrackState {
  Vector4 x = Vector4::Zero();  // (x, y, vx, vy)
  Matrix4 p = Matrix4::Zero();

  Vec2 position() const noexcept { return {x(0), x(1)}; }
};

/// x' = A x, P' = A P A^T + Q. Requires dt > 0.
TrackState kf_predict(const TrackState& track, double dt, const KalmanParams& params);

/// Joseph-form correction with a position measurement; the posterior
/// covariance is symmetrized. Throws SingularInnovation when S = HPH^T + R
/// cannot be inverted.
TrackState kf_update(const TrackState& track, Vec2 z, const KalmanParams& params);

/// Integral of the binary gaze indicator with a permanent latch. Time is
/// accumulated in integer nanoseconds so the "> threshold" test is exact for
/// decimal tick lengths.
struct GazeAccumulator {
  std::int64_t integral_ns = 0;
  double threshold_s = 5.0;
  bool latched = false;

  double integral_s() const noexcept { return static_cast<double>(integral_ns) * 1e-9; }
  /// G in {-1, +1}.
  int awareness() const noexcept { return latched ? 1 : -1; }
};

GazeAccumulator gaze_step(GazeAccumulator acc, bool gaze_in_center, double dt);

/// Center rectangle of the camera image; gaze counts when the eye-center
/// estimate falls inside it. Offsets are pixels from the principal point.
struct CenterRegion {
  double w = 80.0;
  double h = 60.0;

  bool contains(double dx, double dy) const noexcept { return 2.0 * dx <= w && 2.0 * dx >= -w && 2.0 * dy <= h && 2.0 * dy >= -h; }
};

struct Track {
  int id = 0;
  TrackState state;
  GazeAccumulator gaze;
  double last_update = 0.0;
  int misses = 0;
  /// True when the track was corrected by a detection on the latest step.
  bool observed = false;

  int awareness() const noexcept { return gaze.awareness(); }
};

/// One-to-one pairing of rows to columns under a distance gate. Maximizes
/// the number of pairs first, then minimizes total distance; exhaustive for
/// small inputs and greedy nearest-first beyond that. Result[row] is the
/// matched column or -1.
std::vector<int> gated_assignment(const std::vector<std::vector<double>>& dist, double gate);

/// Keep the laser candidates that pair with vision detections within the
/// gate; unmatched vision detections pass through. Output size equals the
/// vision count, so an empty vision list gates every laser candidate away.
std::vector<Detection> fuse_detections(const std::vector<Detection>& vision, const std::vector<Detection>& laser,
                                       double gate_radius);

struct Association {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (track, detection)
  std::vector<std::size_t> births;                           // unmatched detections
  std::vector<std::size_t> misses;                           // unmatched tracks
};

/// Nearest-neighbor association against the tracks' current mean positions.
Association associate(const std::vector<Track>& tracks, const std::vector<Detection>& detections, double gate_radius);

struct TrackerParams {
  KalmanParams kalman;
  double fusion_gate = 0.5;
  double association_gate = 1.0;
  int miss_limit = 5;
  double birth_velocity_variance = 10.0;
  double gaze_threshold_s = 5.0;
};

/// The per-episode bank of tracks: predict, fuse, associate, correct, birth,
/// drop, and accumulate gaze once per sensing tick.
class TrackerBank {
 public:
  explicit TrackerBank(TrackerParams params = {}) : params_(std::move(params)) {}

  void step(const std::vector<Detection>& vision, const std::vector<Detection>& laser, double timestamp);

  const std::vector<Track>& tracks() const noexcept { return tracks_; }
  const TrackerParams& params() const noexcept { return params_; }

 private:
  TrackerParams params_;
  std::vector<Track> tracks_;
  int next_id_ = 0;
  std::optional<double> last_time_;
};

}  // namespace awarenav
