#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "awarenav/scenario.hpp"
#include "awarenav/simulator.hpp"

namespace awarenav {

struct EpisodeRow {
  int index = 0;
  std::uint64_t seed = 0;
  std::string end_reason;
  bool reached = false;
  bool collided = false;
  int ticks = 0;
  std::optional<int> steps_to_goal;
  std::optional<double> min_distance;
  int replans = 0;
  int wait_count_aware = 0;
  double wait_sum_aware = 0.0;
  int wait_count_nonaware = 0;
  double wait_sum_nonaware = 0.0;
};

/// Aggregates over one batch. Step statistics cover successful episodes
/// only; wait distances pool every Wait tick of every episode.
struct BatchReport {
  std::string scenario;
  std::uint64_t seed_base = 0;
  int n_episodes = 0;
  int n_success = 0;
  double success_rate = 0.0;
  std::optional<double> mean_steps;
  double std_steps = 0.0;  // sample standard deviation, 0 below two samples
  std::optional<double> mean_wait_dist_aware;
  std::optional<double> mean_wait_dist_nonaware;
  std::vector<EpisodeRow> rows;
  std::vector<double> wait_dist_aware;
  std::vector<double> wait_dist_nonaware;
};

BatchReport aggregate(const std::string& scenario, std::uint64_t seed_base, const std::vector<EpisodeLog>& logs);

/// Episodes with seeds seed_base .. seed_base + n - 1.
BatchReport run_batch(const ScenarioConfig& config, int n, std::uint64_t seed_base, unsigned threads = 0);

enum class ReportFormat : std::uint8_t { Json, Csv, PlotData };

std::optional<ReportFormat> parse_report_format(std::string_view s) noexcept;

struct Histogram {
  double lo = 0.0;
  double width = 1.0;
  std::vector<int> counts;
};

/// Fixed-width bins starting at lo; the bin count grows to cover the data.
Histogram histogram(const std::vector<double>& samples, double lo, double width);

std::string render_report(const BatchReport& report, ReportFormat format);

/// Write the rendered report to `path`. Throws Io when the file cannot be
/// written.
void emit_report(const BatchReport& report, ReportFormat format, const std::string& path);

}  // namespace awarenav
