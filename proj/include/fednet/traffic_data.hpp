#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fednet {

/// Scalar traffic time series of one node (one federated client).
struct NodeSeries {
  int node_id = 0;
  std::vector<double> values;
  double sample_interval_hours = 1.0;

  std::size_t size() const { return values.size(); }
};

/// z-score standardization parameters (population statistics).
struct Scaler {
  double mean = 0.0;
  double std_dev = 1.0;

  double apply(double x) const { return (x - mean) / std_dev; }
  double invert(double z) const { return z * std_dev + mean; }
};

/// Parameters of the synthetic hourly traffic generator.
///
/// values[t] = base_level
///           + diurnal_amplitude * sin(2*pi*t / diurnal_period_samples)
///           + slow_amplitude    * sin(2*pi*t / slow_period_samples + slow_phase)
///           + trend_per_sample * t
///           + drift(t)                       (AR(1), stationary std drift_std)
///           + N(0, noise_std)
///           + spike_magnitude with probability spike_probability
/// clamped at zero.  The slow and drift terms default to zero, which
/// reduces the generator to the plain diurnal-plus-trend model.
struct SyntheticSpec {
  std::size_t length = 1;
  double base_level = 0.0;
  double diurnal_amplitude = 0.0;
  std::size_t diurnal_period_samples = 24;
  double trend_per_sample = 0.0;
  double noise_std = 0.0;
  double spike_probability = 0.0;
  double spike_magnitude = 0.0;
  double slow_amplitude = 0.0;
  std::size_t slow_period_samples = 720;
  double slow_phase = 0.0;
  double drift_std = 0.0;
  double drift_correlation_samples = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Reads one value per line.  A non-numeric first line is treated as a
/// header.  Values must be finite and non-negative.
NodeSeries ingest_series(const std::filesystem::path& path, int node_id);

/// Writes one value per line with round-trip precision.
void write_series(const std::filesystem::path& path, const NodeSeries& series);

NodeSeries generate_synthetic(const SyntheticSpec& spec, int node_id = 1);

/// Means over non-overlapping blocks of `window_samples`; a trailing
/// partial block is discarded.
NodeSeries resample_mean(const NodeSeries& series, std::size_t window_samples = 6);

/// Empirical quantile with linear interpolation between order statistics
/// (position q*(n-1) in the sorted sample).
double quantile_linear(std::span<const double> values, double q);

struct OutlierRepair {
  NodeSeries series;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t replaced = 0;
  // Every value fell outside the bounds; `series` is the unchanged input.
  bool all_flagged = false;
};

/// Replaces values outside [Q_low - k*IQR, Q_high + k*IQR] by the mean of
/// the in-range values.
OutlierRepair replace_outliers_iqr(const NodeSeries& series, double q_low = 0.20,
                                   double q_high = 0.80, double k = 1.5);

/// Trailing moving average; the first window-1 outputs average the
/// available prefix so the length is preserved.
NodeSeries moving_average(const NodeSeries& series, std::size_t window = 28);

Scaler fit_scaler(std::span<const double> values);
inline Scaler fit_scaler(const NodeSeries& series) { return fit_scaler(series.values); }
NodeSeries apply_scaler(const NodeSeries& series, const Scaler& scaler);
NodeSeries invert_scaler(const NodeSeries& series, const Scaler& scaler);

enum class ScalerScope { Full, Train };

struct PreprocessConfig {
  std::size_t resample_window = 6;
  double q_low = 0.20;
  double q_high = 0.80;
  double iqr_k = 1.5;
  std::size_t ma_window = 28;
  ScalerScope scaler_scope = ScalerScope::Train;
  // Leading fraction of the smoothed series the scaler is fit on when
  // scaler_scope == Train (0.7 * 0.8 with the default split).
  double train_fraction = 0.56;
};

struct PreprocessResult {
  NodeSeries scaled;
  Scaler scaler;
  // Output of the smoothing stage, in original units.
  NodeSeries smoothed;
  std::size_t outliers_replaced = 0;
};

/// resample -> IQR repair -> moving average -> standardization.
PreprocessResult preprocess_pipeline(const NodeSeries& raw, const PreprocessConfig& config);

}  // namespace fednet
