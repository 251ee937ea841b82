#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fednet/federation.hpp"

namespace fednet {

/// Coefficient of determination 1 - SS_res / SS_tot.
double r2_score(std::span<const double> y_true, std::span<const double> y_pred);

/// Flattens both matrices (all windows, all horizon steps) before scoring.
double r2_score(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred);

double mean_squared_error(std::span<const double> y_true, std::span<const double> y_pred);

enum class TrainingMode { Federated, Centralized };

std::string to_string(TrainingMode mode);
TrainingMode parse_training_mode(const std::string& text);

struct ClientScore {
  double r2 = 0.0;
  double mse = 0.0;
};

struct EvaluationReport {
  std::map<int, ClientScore> per_client;
  double average_r2 = 0.0;  // unweighted mean over clients
  std::size_t h = 0;
  std::size_t p = 0;
  TrainingMode mode = TrainingMode::Federated;
  std::uint64_t seed = 0;
};

EvaluationReport evaluate(std::span<const ClientPredictions> predictions, TrainingMode mode,
                          std::size_t h, std::size_t p);

/// node_id,r2,mse rows followed by an `average` row.
void write_report_csv(const std::filesystem::path& path, const EvaluationReport& report);
EvaluationReport read_report_csv(const std::filesystem::path& path, TrainingMode mode,
                                 std::size_t h, std::size_t p);

/// Per-client table in the layout of a CL-vs-FL comparison.
std::string format_report(const EvaluationReport& report);

/// Average R^2 grid: rows are h values, columns p values, both in the
/// order given.  Missing cells are written as empty fields.
struct R2Grid {
  std::vector<std::size_t> h_values;
  std::vector<std::size_t> p_values;
  std::map<std::pair<std::size_t, std::size_t>, double> cells;

  std::optional<double> at(std::size_t h, std::size_t p) const;
};

void write_grid_csv(const std::filesystem::path& path, const R2Grid& grid);
std::string format_grid(const R2Grid& grid);

}  // namespace fednet
