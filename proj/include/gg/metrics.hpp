#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gg::metrics {

// One finished episode, indexed by the environment step at which it ended.
struct EpisodeRecord {
  long env_step = 0;
  int success = 0;  // {0,1}
  double ret = 0.0;
  int length = 0;
  double alpha = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
};

struct SuccessTrace {
  std::vector<EpisodeRecord> episodes;  // env_step strictly increasing
};

struct SeriesPoint {
  long env_step = 0;
  double s = 0.0;
};

// S(n): mean of the last min(window, count) episode successes at each logged
// step. Throws on an empty trace.
std::vector<SeriesPoint> rolling_success(const SuccessTrace& trace, int window = 100);

// Smallest logged n with S(n') >= tau for every logged n' in [n, n+w], where
// the log must extend to at least n+w; absence is a value.
std::optional<long> time_to_threshold(const std::vector<SeriesPoint>& series, double tau,
                                      long w);

struct SummaryRow {
  std::string variant;
  std::string seed;  // seed number, or "mean"/"std" for aggregates
  double s_max = 0.0;
  double s_final = 0.0;
  double s_last20 = 0.0;  // mean S over the last 20% of logged steps
  std::optional<double> n_first;      // first crossing (w = 0)
  std::optional<double> n_sustained;  // sustained crossing at the query window
  double mean_final_return = 0.0;     // mean return over the last 20% of episodes

  static std::string header();
  std::string csv() const;  // absent thresholds render as "--"
};

SummaryRow summarize_trace(const std::string& variant, const std::string& seed,
                           const SuccessTrace& trace, double tau, long w,
                           int rolling_window = 100);

// Per-run rows plus mean/std aggregate rows per variant, preserving input
// order of variants.
std::vector<SummaryRow> summarize(const std::vector<SummaryRow>& rows);

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

// sac scalar log: env_step,episode,success,return,length,alpha,actor_loss,critic_loss
void write_trace_csv(const std::string& path, const SuccessTrace& trace);
SuccessTrace read_trace_csv(const std::string& path);

// gnuplot-friendly learning-curve data: one "# variant seed" block per trace,
// blank-line separated, columns env_step S(n).
void write_curves_dat(const std::string& path,
                      const std::vector<std::pair<std::string, std::vector<SeriesPoint>>>& curves);

}  // namespace gg::metrics
