#include "fednet/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fednet/error.hpp"

namespace fednet {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DataError("metric inputs differ in length (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
}

std::span<const double> flat(const Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

double r2_score(std::span<const double> y_true, std::span<const double> y_pred) {
  check_pair(y_true, y_pred);
  if (y_true.size() < 2) throw DataError("r2_score needs at least 2 samples");
  double mean = 0.0;
  for (double y : y_true) mean += y;
  mean /= static_cast<double>(y_true.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw DataError("r2_score undefined for a constant y_true");
  return 1.0 - ss_res / ss_tot;
}

double r2_score(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred) {
  if (y_true.rows() != y_pred.rows() || y_true.cols() != y_pred.cols())
    throw DataError("r2_score: shape mismatch");
  return r2_score(flat(y_true), flat(y_pred));
}

double mean_squared_error(std::span<const double> y_true, std::span<const double> y_pred) {
  check_pair(y_true, y_pred);
  if (y_true.empty()) throw DataError("mean_squared_error of empty inputs");
  double ss = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i)
    ss += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
  return ss / static_cast<double>(y_true.size());
}

std::string to_string(TrainingMode mode) {
  return mode == TrainingMode::Federated ? "fed" : "central";
}

TrainingMode parse_training_mode(const std::string& text) {
  if (text == "fed" || text == "federated") return TrainingMode::Federated;
  if (text == "central" || text == "centralized") return TrainingMode::Centralized;
  throw ConfigError("unknown training mode '" + text + "' (expected fed|central)");
}

EvaluationReport evaluate(std::span<const ClientPredictions> predictions, TrainingMode mode,
                          std::size_t h, std::size_t p) {
  if (predictions.empty()) throw DataError("evaluate: no clients");
  EvaluationReport report;
  report.h = h;
  report.p = p;
  report.mode = mode;
  double sum = 0.0;
  for (const auto& cp : predictions) {
    if (cp.predicted.rows() != cp.actual.rows() || cp.predicted.cols() != cp.actual.cols())
      throw DataError("evaluate: predictions and actuals misaligned for node " +
                      std::to_string(cp.node_id));
    ClientScore score{r2_score(cp.actual, cp.predicted),
                      mean_squared_error(flat(cp.actual), flat(cp.predicted))};
    report.per_client[cp.node_id] = score;
    sum += score.r2;
  }
  report.average_r2 = sum / static_cast<double>(report.per_client.size());
  return report;
}

void write_report_csv(const std::filesystem::path& path, const EvaluationReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report: " + path.string());
  out << std::setprecision(17);
  out << "node_id,r2,mse\n";
  for (const auto& [node, s] : report.per_client) out << node << ',' << s.r2 << ',' << s.mse << '\n';
  out << "average," << report.average_r2 << ",\n";
}

EvaluationReport read_report_csv(const std::filesystem::path& path, TrainingMode mode,
                                 std::size_t h, std::size_t p) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report: " + path.string());
  EvaluationReport report;
  report.mode = mode;
  report.h = h;
  report.p = p;
  std::string line;
  std::getline(in, line);
  bool have_average = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string node, r2, mse;
    std::getline(ss, node, ',');
    std::getline(ss, r2, ',');
    std::getline(ss, mse, ',');
    try {
      if (node == "average") {
        report.average_r2 = std::stod(r2);
        have_average = true;
      } else {
        report.per_client[std::stoi(node)] = {std::stod(r2), std::stod(mse)};
      }
    } catch (const std::exception&) {
      throw DataError(path.string() + ": malformed row '" + line + "'");
    }
  }
  if (!have_average) throw DataError(path.string() + ": missing average row");
  return report;
}

std::string format_report(const EvaluationReport& report) {
  std::ostringstream os;
  os << "h=" << report.h << " p=" << report.p << " mode=" << to_string(report.mode) << '\n';
  os << std::fixed << std::setprecision(3);
  os << "  client      r2        mse\n";
  for (const auto& [node, s] : report.per_client) {
    os << "  " << std::setw(6) << node << "  " << std::setw(8) << s.r2 << "  "
       << std::scientific << std::setprecision(3) << s.mse << std::fixed << '\n';
  }
  os << "  avg     " << std::setw(8) << report.average_r2 << '\n';
  return os.str();
}

std::optional<double> R2Grid::at(std::size_t h, std::size_t p) const {
  const auto it = cells.find({h, p});
  if (it == cells.end()) return std::nullopt;
  return it->second;
}

void write_grid_csv(const std::filesystem::path& path, const R2Grid& grid) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write grid: " + path.string());
  out << std::setprecision(17) << "h\\p";
  for (std::size_t p : grid.p_values) out << ',' << p;
  out << '\n';
  for (std::size_t h : grid.h_values) {
    out << h;
    for (std::size_t p : grid.p_values) {
      out << ',';
      if (auto v = grid.at(h, p)) out << *v;
    }
    out << '\n';
  }
}

std::string format_grid(const R2Grid& grid) {
  std::ostringstream os;
  os << "average R^2 (rows h, columns p)\n   h\\p";
  for (std::size_t p : grid.p_values) os << std::setw(8) << p;
  os << '\n' << std::fixed << std::setprecision(3);
  for (std::size_t h : grid.h_values) {
    os << std::setw(7) << h;
    for (std::size_t p : grid.p_values) {
      if (auto v = grid.at(h, p)) {
        os << std::setw(8) << *v;
      } else {
        os << std::setw(8) << "-";
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace fednet
