#include "awarenav/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "awarenav/error.hpp"

namespace awarenav {

using nlohmann::json;

BatchReport aggregate(const std::string& scenario, std::uint64_t seed_base, const std::vector<EpisodeLog>& logs) {
  BatchReport rep;
  rep.scenario = scenario;
  rep.seed_base = seed_base;
  rep.n_episodes = static_cast<int>(logs.size());
  std::vector<double> steps;
  for (std::size_t k = 0; k < logs.size(); ++k) {
    const Metrics& m = logs[k].metrics;
    EpisodeRow row;
    row.index = static_cast<int>(k);
    row.seed = logs[k].seed;
    row.end_reason = logs[k].end_reason;
    row.reached = m.reached;
    row.collided = m.collided;
    row.ticks = m.ticks;
    row.steps_to_goal = m.steps_to_goal;
    row.min_distance = m.min_distance;
    row.replans = m.replans;
    row.wait_count_aware = static_cast<int>(m.wait_dist_aware.size());
    row.wait_sum_aware = std::accumulate(m.wait_dist_aware.begin(), m.wait_dist_aware.end(), 0.0);
    row.wait_count_nonaware = static_cast<int>(m.wait_dist_nonaware.size());
    row.wait_sum_nonaware = std::accumulate(m.wait_dist_nonaware.begin(), m.wait_dist_nonaware.end(), 0.0);
    rep.rows.push_back(row);
    rep.wait_dist_aware.insert(rep.wait_dist_aware.end(), m.wait_dist_aware.begin(), m.wait_dist_aware.end());
    rep.wait_dist_nonaware.insert(rep.wait_dist_nonaware.end(), m.wait_dist_nonaware.begin(),
                                  m.wait_dist_nonaware.end());
    if (m.reached && !m.collided && m.steps_to_goal) steps.push_back(*m.steps_to_goal);
  }
  rep.n_success = static_cast<int>(steps.size());
  rep.success_rate = logs.empty() ? 0.0 : static_cast<double>(rep.n_success) / static_cast<double>(logs.size());
  if (!steps.empty()) {
    const double mean = std::accumulate(steps.begin(), steps.end(), 0.0) / static_cast<double>(steps.size());
    rep.mean_steps = mean;
    if (steps.size() > 1) {
      double ss = 0.0;
      for (double s : steps) ss += (s - mean) * (s - mean);
      rep.std_steps = std::sqrt(ss / static_cast<double>(steps.size() - 1));
    }
  }
  // Pooled means from the per-row sums, so they can be recomputed from CSV.
  int na = 0;
  int nn = 0;
  double sa = 0.0;
  double sn = 0.0;
  for (const EpisodeRow& r : rep.rows) {
    na += r.wait_count_aware;
    sa += r.wait_sum_aware;
    nn += r.wait_count_nonaware;
    sn += r.wait_sum_nonaware;
  }
  if (na > 0) rep.mean_wait_dist_aware = sa / na;
  if (nn > 0) rep.mean_wait_dist_nonaware = sn / nn;
  return rep;
}

BatchReport run_batch(const ScenarioConfig& config, int n, std::uint64_t seed_base, unsigned threads) {
  if (n < 0) throw Error(Errc::InvalidArgument, "episode count must be nonnegative");
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
  std::iota(seeds.begin(), seeds.end(), seed_base);
  return aggregate(config.name, seed_base, run_episodes(config, seeds, threads));
}

std::optional<ReportFormat> parse_report_format(std::string_view s) noexcept {
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "plotdata") return ReportFormat::PlotData;
  return std::nullopt;
}

Histogram histogram(const std::vector<double>& samples, double lo, double width) {
  if (!(width > 0.0)) throw Error(Errc::InvalidArgument, "histogram bin width must be positive");
  Histogram h;
  h.lo = lo;
  h.width = width;
  for (double s : samples) {
    const auto bin = static_cast<std::size_t>(std::max(0.0, std::floor((s - lo) / width)));
    if (bin >= h.counts.size()) h.counts.resize(bin + 1, 0);
    ++h.counts[bin];
  }
  return h;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json opt(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json hist_json(const Histogram& h) { return {{"lo", h.lo}, {"width", h.width}, {"counts", h.counts}}; }

}  // namespace

std::string render_report(const BatchReport& rep, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: {
      json rows = json::array();
      for (const EpisodeRow& r : rep.rows) {
        rows.push_back({{"index", r.index},
                        {"seed", r.seed},
                        {"end_reason", r.end_reason},
                        {"reached", r.reached},
                        {"collided", r.collided},
                        {"ticks", r.ticks},
                        {"steps_to_goal", opt(r.steps_to_goal)},
                        {"min_distance", opt(r.min_distance)},
                        {"replans", r.replans},
                        {"wait_count_aware", r.wait_count_aware},
                        {"wait_sum_aware", r.wait_sum_aware},
                        {"wait_count_nonaware", r.wait_count_nonaware},
                        {"wait_sum_nonaware", r.wait_sum_nonaware}});
      }
      const json j = {{"scenario", rep.scenario},
                      {"seed_base", rep.seed_base},
                      {"n_episodes", rep.n_episodes},
                      {"n_success", rep.n_success},
                      {"success_rate", rep.success_rate},
                      {"mean_steps", opt(rep.mean_steps)},
                      {"std_steps", rep.std_steps},
                      {"mean_wait_dist_aware", opt(rep.mean_wait_dist_aware)},
                      {"mean_wait_dist_nonaware", opt(rep.mean_wait_dist_nonaware)},
                      {"episodes", rows}};
      return j.dump(2) + "\n";
    }
    case ReportFormat::Csv: {
      std::string out =
          "index,seed,end_reason,reached,collided,ticks,steps_to_goal,min_distance,replans,"
          "wait_count_aware,wait_sum_aware,wait_count_nonaware,wait_sum_nonaware\n";
      for (const EpisodeRow& r : rep.rows) {
        out += std::to_string(r.index) + ',' + std::to_string(r.seed) + ',' + r.end_reason + ',' +
               (r.reached ? "1" : "0") + ',' + (r.collided ? "1" : "0") + ',' + std::to_string(r.ticks) + ',' +
               (r.steps_to_goal ? std::to_string(*r.steps_to_goal) : "") + ',' +
               (r.min_distance ? num(*r.min_distance) : "") + ',' + std::to_string(r.replans) + ',' +
               std::to_string(r.wait_count_aware) + ',' + num(r.wait_sum_aware) + ',' +
               std::to_string(r.wait_count_nonaware) + ',' + num(r.wait_sum_nonaware) + '\n';
      }
      return out;
    }
    case ReportFormat::PlotData: {
      std::vector<double> steps;
      for (const EpisodeRow& r : rep.rows) {
        if (r.reached && !r.collided && r.steps_to_goal) steps.push_back(*r.steps_to_goal);
      }
      const json j = {{"scenario", rep.scenario},
                      {"steps", hist_json(histogram(steps, 0.0, 1.0))},
                      {"wait_dist_aware", hist_json(histogram(rep.wait_dist_aware, 0.0, 0.25))},
                      {"wait_dist_nonaware", hist_json(histogram(rep.wait_dist_nonaware, 0.0, 0.25))}};
      return j.dump(2) + "\n";
    }
  }
  return {};
}

void emit_report(const BatchReport& report, ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << render_report(report, format);
  out.flush();
  if (!out) throw Error(Errc::Io, "write failed for " + path);
}

}  // namespace awarenav
