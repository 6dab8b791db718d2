#include "awarenav/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "awarenav/error.hpp"

namespace awarenav {

Matrix4 KalmanParams::transition(double dt) {
  Matrix4 a = Matrix4::Identity();
  a(0, 2) = dt;
  a(1, 3) = dt;
  return a;
}

Matrix24 KalmanParams::observation() {
  Matrix24 h = Matrix24::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  return h;
}

TrackState kf_predict(const TrackState& track, double dt, const KalmanParams& params) {
  if (!(dt > 0.0)) throw Error(Errc::InvalidArgument, "prediction step needs dt > 0");
  const Matrix4 a = KalmanParams::transition(dt);
  TrackState out;
  out.x = a * track.x;
  out.p = a * track.p * a.transpose() + params.q;
  out.p = 0.5 * (out.p + out.p.transpose());
  return out;
}

TrackState kf_update(const TrackState& track, Vec2 z, const KalmanParams& params) {
  const Matrix24 h = KalmanParams::observation();
  const Matrix2 s = h * track.p * h.transpose() + params.r;
  Eigen::FullPivLU<Matrix2> lu(s);
  if (!lu.isInvertible() || !std::isfinite(s.determinant())) {
    throw Error(Errc::SingularInnovation, "innovation covariance is singular");
  }
  const Eigen::Matrix<double, 4, 2> gain = track.p * h.transpose() * lu.inverse();
  const Eigen::Vector2d innovation = Eigen::Vector2d(z.x, z.y) - h * track.x;

  TrackState out;
  out.x = track.x + gain * innovation;
  const Matrix4 i_kh = Matrix4::Identity() - gain * h;
  out.p = i_kh * track.p * i_kh.transpose() + gain * params.r * gain.transpose();
  out.p = 0.5 * (out.p + out.p.transpose());
  return out;
}

GazeAccumulator gaze_step(GazeAccumulator acc, bool gaze_in_center, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::InvalidArgument, "gaze step needs dt > 0");
  if (gaze_in_center) acc.integral_ns += std::llround(dt * 1e9);
  const auto threshold_ns = std::llround(acc.threshold_s * 1e9);
  acc.latched = acc.latched || acc.integral_ns > threshold_ns;
  return acc;
}

namespace {

constexpr std::size_t kExhaustiveLimit = 7;

struct Best {
  int pairs = -1;
  double cost = std::numeric_limits<double>::infinity();
  std::vector<int> assign;
};

void search(const std::vector<std::vector<double>>& dist, double gate, std::size_t row, std::vector<bool>& used,
            std::vector<int>& cur, int pairs, double cost, Best& best) {
  if (row == dist.size()) {
    if (pairs > best.pairs || (pairs == best.pairs && cost < best.cost)) {
      best.pairs = pairs;
      best.cost = cost;
      best.assign = cur;
    }
    return;
  }
  for (std::size_t c = 0; c < dist[row].size(); ++c) {
    if (used[c] || !(dist[row][c] <= gate)) continue;
    used[c] = true;
    cur[row] = static_cast<int>(c);
    search(dist, gate, row + 1, used, cur, pairs + 1, cost + dist[row][c], best);
    used[c] = false;
  }
  cur[row] = -1;
  search(dist, gate, row + 1, used, cur, pairs, cost, best);
}

}  // namespace

std::vector<int> gated_assignment(const std::vector<std::vector<double>>& dist, double gate) {
  const std::size_t rows = dist.size();
  const std::size_t cols = rows == 0 ? 0 : dist.front().size();
  if (rows == 0) return {};

  if (rows <= kExhaustiveLimit && cols <= kExhaustiveLimit) {
    Best best;
    std::vector<bool> used(cols, false);
    std::vector<int> cur(rows, -1);
    search(dist, gate, 0, used, cur, 0, 0.0, best);
    return best.assign;
  }

  struct Pair {
    double d;
    std::size_t r, c;
  };
  std::vector<Pair> pairs;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (dist[r][c] <= gate) pairs.push_back({dist[r][c], r, c});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.d < b.d; });
  std::vector<int> out(rows, -1);
  std::vector<bool> col_used(cols, false);
  for (const Pair& p : pairs) {
    if (out[p.r] >= 0 || col_used[p.c]) continue;
    out[p.r] = static_cast<int>(p.c);
    col_used[p.c] = true;
  }
  return out;
}

std::vector<Detection> fuse_detections(const std::vector<Detection>& vision, const std::vector<Detection>& laser,
                                       double gate_radius) {
  std::vector<std::vector<double>> dist(vision.size(), std::vector<double>(laser.size()));
  for (std::size_t v = 0; v < vision.size(); ++v) {
    for (std::size_t l = 0; l < laser.size(); ++l) dist[v][l] = distance(vision[v].pos, laser[l].pos);
  }
  const std::vector<int> match = gated_assignment(dist, gate_radius);

  std::vector<Detection> out;
  out.reserve(vision.size());
  for (std::size_t v = 0; v < vision.size(); ++v) {
    if (match[v] < 0) {
      out.push_back(vision[v]);
      continue;
    }
    Detection fused = laser[static_cast<std::size_t>(match[v])];
    fused.gaze = vision[v].gaze;
    fused.confidence = std::max(vision[v].confidence, fused.confidence);
    out.push_back(fused);
  }
  return out;
}

Association associate(const std::vector<Track>& tracks, const std::vector<Detection>& detections, double gate_radius) {
  std::vector<std::vector<double>> dist(tracks.size(), std::vector<double>(detections.size()));
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    for (std::size_t d = 0; d < detections.size(); ++d) {
      dist[t][d] = distance(tracks[t].state.position(), detections[d].pos);
    }
  }
  const std::vector<int> match = gated_assignment(dist, gate_radius);

  Association out;
  std::vector<bool> det_used(detections.size(), false);
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    if (match.empty() || match[t] < 0) {
      out.misses.push_back(t);
    } else {
      out.matches.emplace_back(t, static_cast<std::size_t>(match[t]));
      det_used[static_cast<std::size_t>(match[t])] = true;
    }
  }
  for (std::size_t d = 0; d < detections.size(); ++d) {
    if (!det_used[d]) out.births.push_back(d);
  }
  return out;
}

void TrackerBank::step(const std::vector<Detection>& vision, const std::vector<Detection>& laser, double timestamp) {
  const double dt = last_time_ ? timestamp - *last_time_ : 0.0;
  if (last_time_ && dt < 0.0) throw Error(Errc::InvalidArgument, "tracker timestamps must be non-decreasing");
  last_time_ = timestamp;

  if (dt > 0.0) {
    for (Track& t : tracks_) t.state = kf_predict(t.state, dt, params_.kalman);
  }

  const std::vector<Detection> fused = fuse_detections(vision, laser, params_.fusion_gate);
  const Association assoc = associate(tracks_, fused, params_.association_gate);

  for (auto [ti, di] : assoc.matches) {
    Track& t = tracks_[ti];
    t.state = kf_update(t.state, fused[di].pos, params_.kalman);
    t.last_update = timestamp;
    t.misses = 0;
    t.observed = true;
    if (dt > 0.0) t.gaze = gaze_step(t.gaze, fused[di].gaze, dt);
  }
  for (std::size_t ti : assoc.misses) {
    tracks_[ti].misses += 1;
    tracks_[ti].observed = false;
  }
  for (std::size_t di : assoc.births) {
    Track t;
    t.id = next_id_++;
    t.state.x << fused[di].pos.x, fused[di].pos.y, 0.0, 0.0;
    t.state.p = Matrix4::Zero();
    t.state.p.topLeftCorner<2, 2>() = params_.kalman.r;
    t.state.p(2, 2) = params_.birth_velocity_variance;
    t.state.p(3, 3) = params_.birth_velocity_variance;
    t.gaze.threshold_s = params_.gaze_threshold_s;
    if (dt > 0.0) t.gaze = gaze_step(t.gaze, fused[di].gaze, dt);
    t.last_update = timestamp;
    t.observed = true;
    tracks_.push_back(t);
  }
  std::erase_if(tracks_, [&](const Track& t) { return t.misses > params_.miss_limit; });
}

}  // namespace awarenav
