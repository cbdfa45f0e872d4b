#include "gg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gg::metrics {

std::vector<SeriesPoint> rolling_success(const SuccessTrace& trace, int window) {
  if (trace.episodes.empty()) throw std::invalid_argument("rolling_success: empty trace");
  std::vector<SeriesPoint> out;
  out.reserve(trace.episodes.size());
  long prev_step = -1;
  double running = 0.0;
  for (size_t i = 0; i < trace.episodes.size(); ++i) {
    const auto& ep = trace.episodes[i];
    if (ep.env_step <= prev_step) {
      throw std::invalid_argument("rolling_success: env_step must be strictly increasing");
    }
    prev_step = ep.env_step;
    running += ep.success;
    if (i >= static_cast<size_t>(window)) running -= trace.episodes[i - window].success;
    const double denom = std::min<double>(window, static_cast<double>(i + 1));
    out.push_back({ep.env_step, running / denom});
  }
  return out;
}

std::optional<long> time_to_threshold(const std::vector<SeriesPoint>& series, double tau,
                                      long w) {
  if (series.empty()) return std::nullopt;
  if (w < 0) throw std::invalid_argument("time_to_threshold: negative window");
  const long n = static_cast<long>(series.size());
  const long last_step = series.back().env_step;
  // next_bad[i]: smallest index j >= i with S(j) < tau, or n
  std::vector<long> next_bad(n + 1);
  next_bad[n] = n;
  for (long i = n - 1; i >= 0; --i) {
    next_bad[i] = series[i].s >= tau ? next_bad[i + 1] : i;
  }
  for (long i = 0; i < n; ++i) {
    const long start = series[i].env_step;
    if (last_step < start + w) break;  // the log must extend past the window
    const long bad = next_bad[i];
    if (bad == n || series[bad].env_step > start + w) return start;
  }
  return std::nullopt;
}

std::string SummaryRow::header() {
  return "variant,seed,s_max,s_final,s_last20,n_first,n_sustained,mean_final_return";
}

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}
std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "--"; }
}  // namespace

std::string SummaryRow::csv() const {
  return variant + "," + seed + "," + fmt(s_max) + "," + fmt(s_final) + "," + fmt(s_last20) +
         "," + fmt_opt(n_first) + "," + fmt_opt(n_sustained) + "," + fmt(mean_final_return);
}

SummaryRow summarize_trace(const std::string& variant, const std::string& seed,
                           const SuccessTrace& trace, double tau, long w,
                           int rolling_window) {
  const auto series = rolling_success(trace, rolling_window);
  SummaryRow row;
  row.variant = variant;
  row.seed = seed;
  row.s_final = series.back().s;
  double s_max = 0.0;
  for (const auto& p : series) s_max = std::max(s_max, p.s);
  row.s_max = s_max;

  const long cutoff = static_cast<long>(std::ceil(0.8 * series.back().env_step));
  double acc = 0.0;
  long count = 0;
  for (const auto& p : series) {
    if (p.env_step >= cutoff) {
      acc += p.s;
      ++count;
    }
  }
  row.s_last20 = count ? acc / count : series.back().s;

  double ret_acc = 0.0;
  long ret_count = 0;
  for (const auto& ep : trace.episodes) {
    if (ep.env_step >= cutoff) {
      ret_acc += ep.ret;
      ++ret_count;
    }
  }
  row.mean_final_return = ret_count ? ret_acc / ret_count : trace.episodes.back().ret;

  if (auto first = time_to_threshold(series, tau, 0)) row.n_first = *first;
  if (auto sustained = time_to_threshold(series, tau, w)) row.n_sustained = *sustained;
  return row;
}

std::vector<SummaryRow> summarize(const std::vector<SummaryRow>& rows) {
  std::vector<SummaryRow> out = rows;
  std::vector<std::string> variant_order;
  std::map<std::string, std::vector<const SummaryRow*>> groups;
  for (const auto& r : rows) {
    if (!groups.count(r.variant)) variant_order.push_back(r.variant);
    groups[r.variant].push_back(&r);
  }
  for (const auto& variant : variant_order) {
    const auto& g = groups[variant];
    auto agg = [&](auto getter) {
      double mean = 0.0;
      for (auto* r : g) mean += getter(*r);
      mean /= g.size();
      double var = 0.0;
      for (auto* r : g) var += (getter(*r) - mean) * (getter(*r) - mean);
      return std::pair<double, double>(mean, std::sqrt(var / g.size()));
    };
    auto agg_opt = [&](auto getter) -> std::pair<std::optional<double>, std::optional<double>> {
      std::vector<double> vals;
      for (auto* r : g) {
        if (auto v = getter(*r)) vals.push_back(*v);
      }
      if (vals.size() != g.size() || vals.empty()) return {std::nullopt, std::nullopt};
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= vals.size();
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      return {mean, std::sqrt(var / vals.size())};
    };

    SummaryRow mean_row, std_row;
    mean_row.variant = std_row.variant = variant;
    mean_row.seed = "mean";
    std_row.seed = "std";
    std::tie(mean_row.s_max, std_row.s_max) = agg([](const SummaryRow& r) { return r.s_max; });
    std::tie(mean_row.s_final, std_row.s_final) =
        agg([](const SummaryRow& r) { return r.s_final; });
    std::tie(mean_row.s_last20, std_row.s_last20) =
        agg([](const SummaryRow& r) { return r.s_last20; });
    std::tie(mean_row.mean_final_return, std_row.mean_final_return) =
        agg([](const SummaryRow& r) { return r.mean_final_return; });
    std::tie(mean_row.n_first, std_row.n_first) =
        agg_opt([](const SummaryRow& r) { return r.n_first; });
    std::tie(mean_row.n_sustained, std_row.n_sustained) =
        agg_opt([](const SummaryRow& r) { return r.n_sustained; });
    out.push_back(mean_row);
    out.push_back(std_row);
  }
  return out;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_summary_csv: cannot open " + path);
  os << SummaryRow::header() << "\n";
  for (const auto& r : rows) os << r.csv() << "\n";
}

void write_trace_csv(const std::string& path, const SuccessTrace& trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_trace_csv: cannot open " + path);
  os << "env_step,episode,success,return,length,alpha,actor_loss,critic_loss\n";
  char buf[256];
  for (size_t i = 0; i < trace.episodes.size(); ++i) {
    const auto& ep = trace.episodes[i];
    std::snprintf(buf, sizeof(buf), "%ld,%zu,%d,%.10g,%d,%.10g,%.10g,%.10g\n", ep.env_step, i,
                  ep.success, ep.ret, ep.length, ep.alpha, ep.actor_loss, ep.critic_loss);
    os << buf;
  }
}

SuccessTrace read_trace_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_trace_csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_trace_csv: empty file " + path);
  SuccessTrace trace;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    EpisodeRecord ep;
    long episode = 0;
    if (std::sscanf(line.c_str(), "%ld,%ld,%d,%lf,%d,%lf,%lf,%lf", &ep.env_step, &episode,
                    &ep.success, &ep.ret, &ep.length, &ep.alpha, &ep.actor_loss,
                    &ep.critic_loss) != 8) {
      throw std::runtime_error("read_trace_csv: bad row in " + path + ": " + line);
    }
    trace.episodes.push_back(ep);
  }
  return trace;
}

void write_curves_dat(const std::string& path,
                      const std::vector<std::pair<std::string, std::vector<SeriesPoint>>>& curves) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_curves_dat: cannot open " + path);
  for (const auto& [label, series] : curves) {
    os << "# " << label << "\n";
    for (const auto& p : series) os << p.env_step << " " << fmt(p.s) << "\n";
    os << "\n";
  }
}

}  // namespace gg::metrics
