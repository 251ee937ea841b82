#include "fednet/artifacts.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <regex>
#include <sstream>

#include "fednet/error.hpp"
#include "fednet/experiment.hpp"
#include "fednet/neuralnet.hpp"

namespace fednet {

namespace fs = std::filesystem;

namespace {

void put(std::ostream& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

double number(const std::string& text, const fs::path& path) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw DataError(path.string() + ": bad number '" + text + "'");
  return v;
}

std::size_t count(const std::string& text, const fs::path& path) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw DataError(path.string() + ": bad index '" + text + "'");
  return v;
}

}  // namespace

std::string RunKey::name() const {
  return to_string(mode) + "_h" + std::to_string(h) + "_p" + std::to_string(p) + "_s" +
         std::to_string(seed);
}

fs::path run_dir(const fs::path& output_dir, const RunKey& key) {
  return output_dir / "runs" / key.name();
}

void write_history_csv(const fs::path& path, std::span<const RoundRecord> history) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write history: " + path.string());
  out << "round,train_loss,val_loss\n";
  for (const auto& r : history) {
    out << r.round << ',';
    put(out, r.train_loss);
    out << ',';
    put(out, r.val_loss);
    out << '\n';
  }
}

std::vector<RoundRecord> read_history_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open history: " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<RoundRecord> history;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = fields(line);
    if (f.size() != 3) throw DataError(path.string() + ": malformed row '" + line + "'");
    history.push_back({count(f[0], path), number(f[1], path), number(f[2], path)});
  }
  return history;
}

void write_predictions_csv(const fs::path& path, const ClientPredictions& cp) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write predictions: " + path.string());
  out << "window,step,predicted,actual\n";
  for (Eigen::Index w = 0; w < cp.predicted.cols(); ++w) {
    for (Eigen::Index s = 0; s < cp.predicted.rows(); ++s) {
      out << w << ',' << s << ',';
      put(out, cp.predicted(s, w));
      out << ',';
      put(out, cp.actual(s, w));
      out << '\n';
    }
  }
}

ClientPredictions read_predictions_csv(const fs::path& path, int node_id) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predictions: " + path.string());
  struct Row {
    std::size_t window, step;
    double predicted, actual;
  };
  std::vector<Row> rows;
  std::size_t windows = 0;
  std::size_t steps = 0;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = fields(line);
    if (f.size() != 4) throw DataError(path.string() + ": malformed row '" + line + "'");
    Row r{count(f[0], path), count(f[1], path), number(f[2], path), number(f[3], path)};
    windows = std::max(windows, r.window + 1);
    steps = std::max(steps, r.step + 1);
    rows.push_back(r);
  }
  if (rows.empty() || rows.size() != windows * steps)
    throw DataError(path.string() + ": expected a full window x step table");

  ClientPredictions cp;
  cp.node_id = node_id;
  cp.predicted.resize(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(windows));
  cp.actual.resizeLike(cp.predicted);
  for (const auto& r : rows) {
    cp.predicted(r.step, r.window) = r.predicted;
    cp.actual(r.step, r.window) = r.actual;
  }
  return cp;
}

void write_run(const fs::path& dir, const TrainingResult& result) {
  fs::create_directories(dir / "predictions");
  save_weights(dir / "weights.txt", result.model);
  write_history_csv(dir / "history.csv", result.history);
  for (const auto& cp : result.predictions)
    write_predictions_csv(dir / "predictions" / node_file_name(cp.node_id), cp);
}

std::vector<ClientPredictions> read_run_predictions(const fs::path& dir) {
  const fs::path pred_dir = dir / "predictions";
  if (!fs::is_directory(pred_dir)) throw DataError("no predictions in " + dir.string());
  static const std::regex pattern(R"(node_(\d+)\.csv)");
  std::vector<ClientPredictions> out;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern))
      out.push_back(read_predictions_csv(entry.path(), std::stoi(m[1])));
  }
  if (out.empty()) throw DataError("no predictions in " + dir.string());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.node_id < b.node_id; });
  return out;
}

}  // namespace fednet
