#include "fednet/traffic_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "fednet/error.hpp"
#include "fednet/rng.hpp"

namespace fednet {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

double mean_of(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

void SyntheticSpec::validate() const {
  if (length < 1) throw ConfigError("synthetic spec: length must be >= 1");
  if (diurnal_period_samples < 1 || slow_period_samples < 1)
    throw ConfigError("synthetic spec: periods must be positive");
  if (noise_std < 0.0 || drift_std < 0.0)
    throw ConfigError("synthetic spec: standard deviations must be non-negative");
  if (spike_probability < 0.0 || spike_probability > 1.0)
    throw ConfigError("synthetic spec: spike_probability must lie in [0, 1]");
  if (drift_correlation_samples <= 0.0)
    throw ConfigError("synthetic spec: drift_correlation_samples must be positive");
}

NodeSeries ingest_series(const std::filesystem::path& path, int node_id) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open series file: " + path.string());

  NodeSeries series{node_id, {}, 1.0};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string field = trim(line);
    if (field.empty()) continue;
    // Single-column CSV; tolerate a trailing comma.
    if (field.back() == ',') field = trim(field.substr(0, field.size() - 1));
    double value = 0.0;
    if (!parse_double(field, value)) {
      if (line_no == 1) continue;  // header
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed record '" + field + "'");
    }
    if (!std::isfinite(value) || value < 0.0) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": value must be finite and non-negative");
    }
    series.values.push_back(value);
  }
  if (series.values.empty()) throw DataError("empty series file: " + path.string());
  return series;
}

void write_series(const std::filesystem::path& path, const NodeSeries& series) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write series file: " + path.string());
  char buf[32];
  for (double v : series.values) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, ptr - buf);
    out.put('\n');
  }
  if (!out) throw DataError("write failed: " + path.string());
}

NodeSeries generate_synthetic(const SyntheticSpec& spec, int node_id) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double two_pi = 2.0 * std::numbers::pi;
  const double rho = std::exp(-1.0 / spec.drift_correlation_samples);
  const double innovation = spec.drift_std * std::sqrt(1.0 - rho * rho);
  double drift = spec.drift_std * gauss(rng);

  NodeSeries series{node_id, {}, 1.0};
  series.values.reserve(spec.length);
  for (std::size_t t = 0; t < spec.length; ++t) {
    const double td = static_cast<double>(t);
    double v = spec.base_level;
    v += spec.diurnal_amplitude *
         std::sin(two_pi * td / static_cast<double>(spec.diurnal_period_samples));
    v += spec.slow_amplitude *
         std::sin(two_pi * td / static_cast<double>(spec.slow_period_samples) +
                  spec.slow_phase);
    v += spec.trend_per_sample * td;
    if (t > 0) drift = rho * drift + innovation * gauss(rng);
    v += drift;
    v += spec.noise_std * gauss(rng);
    if (unit(rng) < spec.spike_probability) v += spec.spike_magnitude;
    series.values.push_back(std::max(0.0, v));
  }
  return series;
}

NodeSeries resample_mean(const NodeSeries& series, std::size_t window_samples) {
  if (window_samples == 0) throw ConfigError("resample window must be positive");
  if (series.size() < window_samples) {
    throw DataError("series of node " + std::to_string(series.node_id) + " has " +
                    std::to_string(series.size()) + " samples, fewer than one " +
                    std::to_string(window_samples) + "-sample window");
  }
  const std::size_t blocks = series.size() / window_samples;
  NodeSeries out{series.node_id, {},
                 series.sample_interval_hours * static_cast<double>(window_samples)};
  out.values.reserve(blocks);
  for (std::size_t j = 0; j < blocks; ++j) {
    out.values.push_back(mean_of(
        std::span<const double>(series.values).subspan(j * window_samples, window_samples)));
  }
  return out;
}

double quantile_linear(std::span<const double> values, double q) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  if (q < 0.0 || q > 1.0) throw ConfigError("quantile level must lie in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

OutlierRepair replace_outliers_iqr(const NodeSeries& series, double q_low, double q_high,
                                   double k) {
  if (series.size() < 5) {
    throw DataError("outlier repair needs at least 5 samples, node " +
                    std::to_string(series.node_id) + " has " +
                    std::to_string(series.size()));
  }
  if (!(q_low < q_high)) throw ConfigError("outlier repair: q_low must be below q_high");

  const double q1 = quantile_linear(series.values, q_low);
  const double q3 = quantile_linear(series.values, q_high);
  const double iqr = q3 - q1;

  OutlierRepair result;
  result.lower = q1 - k * iqr;
  result.upper = q3 + k * iqr;

  double in_sum = 0.0;
  std::size_t in_count = 0;
  for (double v : series.values) {
    if (v >= result.lower && v <= result.upper) {
      in_sum += v;
      ++in_count;
    }
  }
  result.series = series;
  if (in_count == 0) {
    result.all_flagged = true;
    return result;
  }
  const double fill = in_sum / static_cast<double>(in_count);
  for (double& v : result.series.values) {
    if (v < result.lower || v > result.upper) {
      v = fill;
      ++result.replaced;
    }
  }
  return result;
}

NodeSeries moving_average(const NodeSeries& series, std::size_t window) {
  if (window == 0) throw ConfigError("moving-average window must be positive");
  if (series.values.empty()) throw DataError("moving average of an empty series");
  NodeSeries out{series.node_id, {}, series.sample_interval_hours};
  out.values.reserve(series.size());
  const std::span<const double> v(series.values);
  for (std::size_t t = 0; t < v.size(); ++t) {
    const std::size_t start = t + 1 >= window ? t + 1 - window : 0;
    out.values.push_back(mean_of(v.subspan(start, t + 1 - start)));
  }
  return out;
}

Scaler fit_scaler(std::span<const double> values) {
  if (values.size() < 2) throw DataError("scaler fit needs at least 2 samples");
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  const double std_dev = std::sqrt(ss / static_cast<double>(values.size()));
  if (!(std_dev > 0.0)) throw DataError("scaler fit on a zero-variance series");
  return {mean, std_dev};
}

NodeSeries apply_scaler(const NodeSeries& series, const Scaler& scaler) {
  NodeSeries out = series;
  for (double& v : out.values) v = scaler.apply(v);
  return out;
}

NodeSeries invert_scaler(const NodeSeries& series, const Scaler& scaler) {
  NodeSeries out = series;
  for (double& v : out.values) v = scaler.invert(v);
  return out;
}

PreprocessResult preprocess_pipeline(const NodeSeries& raw, const PreprocessConfig& config) {
  const NodeSeries resampled = resample_mean(raw, config.resample_window);
  OutlierRepair repaired =
      replace_outliers_iqr(resampled, config.q_low, config.q_high, config.iqr_k);
  NodeSeries smoothed = moving_average(repaired.series, config.ma_window);

  std::span<const double> fit_span(smoothed.values);
  if (config.scaler_scope == ScalerScope::Train) {
    if (config.train_fraction <= 0.0 || config.train_fraction > 1.0)
      throw ConfigError("scaler train_fraction must lie in (0, 1]");
    const auto n = static_cast<std::size_t>(
        std::floor(config.train_fraction * static_cast<double>(smoothed.size()) + 1e-9));
    fit_span = fit_span.first(std::min(std::max<std::size_t>(n, 2), smoothed.size()));
  }
  const Scaler scaler = fit_scaler(fit_span);

  PreprocessResult result;
  result.scaled = apply_scaler(smoothed, scaler);
  result.scaler = scaler;
  result.smoothed = std::move(smoothed);
  result.outliers_replaced = repaired.replaced;
  return result;
}

}  // namespace fednet
