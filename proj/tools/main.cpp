// fednet: synthetic data, preprocessing, FL/CL training, evaluation sweeps
// and link ranking from the command line.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fednet/artifacts.hpp"
#include "fednet/config.hpp"
#include "fednet/error.hpp"
#include "fednet/experiment.hpp"
#include "fednet/metrics.hpp"
#include "fednet/topology.hpp"

namespace fs = std::filesystem;
using namespace fednet;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

struct Overrides {
  std::string config;
  std::optional<std::string> data_dir, topology, output_dir, topology_mode, scaler_scope,
      weight_by, link_aggregation;
  std::optional<std::size_t> h, p, rounds, hidden, batch, q, jobs;
  std::optional<std::uint64_t> seed, data_seed;
  std::optional<double> lr, beta, scale, train_frac, val_frac;
  std::string mode = "fed";
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON run config")->check(CLI::ExistingFile);
  cmd->add_option("--data-dir", o.data_dir, "Directory of node_<k>.csv files");
  cmd->add_option("--topology", o.topology, "Edge-list file");
  cmd->add_option("-o,--output-dir", o.output_dir, "Output directory (env FEDNET_OUTPUT_DIR)");
  cmd->add_option("--h", o.h, "Input window length (replaces the sweep list)");
  cmd->add_option("--p", o.p, "Forecast horizon (replaces the sweep list)");
  cmd->add_option("--seed", o.seed, "Root seed (replaces the seed list)");
  cmd->add_option("--rounds", o.rounds, "Communication rounds / epochs");
  cmd->add_option("--hidden", o.hidden, "LSTM hidden size");
  cmd->add_option("--batch", o.batch, "Mini-batch size");
  cmd->add_option("--lr", o.lr, "Adam learning rate");
  cmd->add_option("--jobs", o.jobs, "Clients trained concurrently");
  cmd->add_option("--beta", o.beta, "Mean/std trade-off of the link score");
  cmd->add_option("--q", o.q, "Number of top links reported");
  cmd->add_option("--topology-mode", o.topology_mode, "directed|undirected");
  cmd->add_option("--link-aggregation", o.link_aggregation, "arcs|undirected");
  cmd->add_option("--scaler-scope", o.scaler_scope, "train|full");
  cmd->add_option("--weight-by", o.weight_by, "windows|raw_samples");
  cmd->add_option("--train-frac", o.train_frac, "Share of windows in the training pool");
  cmd->add_option("--val-frac", o.val_frac, "Share of the training pool used for validation");
  cmd->add_option("--scale", o.scale, "Synthetic length scale");
  cmd->add_option("--data-seed", o.data_seed, "Seed of the synthetic generator");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (const char* env = std::getenv("FEDNET_OUTPUT_DIR"); env != nullptr && *env != '\0')
    c.output_dir = env;
  if (o.data_dir) c.data_dir = *o.data_dir;
  if (o.topology) c.topology = *o.topology;
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.h) c.h_values = {*o.h};
  if (o.p) c.p_values = {*o.p};
  if (o.seed) c.seeds = {*o.seed};
  if (o.rounds) c.rounds = *o.rounds;
  if (o.hidden) c.hidden_size = *o.hidden;
  if (o.batch) c.batch_size = *o.batch;
  if (o.lr) c.learning_rate = *o.lr;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.beta) c.beta = *o.beta;
  if (o.q) c.q = *o.q;
  if (o.topology_mode) c.topology_mode = *o.topology_mode;
  if (o.link_aggregation) c.link_aggregation = *o.link_aggregation;
  if (o.scaler_scope) c.scaler_scope = *o.scaler_scope;
  if (o.weight_by) c.weight_by = *o.weight_by;
  if (o.train_frac) c.train_frac = *o.train_frac;
  if (o.val_frac) c.val_frac_of_train = *o.val_frac;
  if (o.scale) c.data_scale = *o.scale;
  if (o.data_seed) c.data_seed = *o.data_seed;
  c.validate();
  return c;
}

std::vector<TrainingMode> modes(const std::string& text) {
  if (text == "both") return {TrainingMode::Federated, TrainingMode::Centralized};
  return {parse_training_mode(text)};
}

std::vector<RunKey> sweep(const RunConfig& c, const std::string& mode) {
  std::vector<RunKey> keys;
  for (TrainingMode m : modes(mode))
    for (std::uint64_t seed : c.seeds)
      for (std::size_t h : c.h_values)
        for (std::size_t p : c.p_values) keys.push_back({m, h, p, seed});
  return keys;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

int cmd_gen_data(const RunConfig& c) {
  CorpusOptions opts;
  opts.seed = c.data_seed;
  opts.scale = c.data_scale;
  opts.resample_window = c.resample_window;
  std::size_t max_h = 0;
  std::size_t max_p = 0;
  for (std::size_t h : c.h_values) max_h = std::max(max_h, h);
  for (std::size_t p : c.p_values) max_p = std::max(max_p, p);
  opts.min_length = max_h + max_p + 10;

  const fs::path dir = c.data_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  for (const NodeSeries& s : generate_corpus(opts)) {
    write_series(dir / node_file_name(s.node_id), s);
    std::cout << "node " << s.node_id << ": " << s.size() << " hourly samples -> "
              << s.size() / opts.resample_window << " after resampling\n";
  }
  return 0;
}

int cmd_preprocess(const RunConfig& c) {
  const auto corpus = load_corpus(c.data_dir);
  const PreprocessConfig pre = preprocess_config(c);
  const fs::path dir = fs::path(c.output_dir) / "preprocessed";
  fs::create_directories(dir);
  std::ostringstream summary;
  summary << "node,raw_length,length,outliers_replaced,scaler_mean,scaler_std\n";
  for (const NodeSeries& raw : corpus) {
    const PreprocessResult r = preprocess_pipeline(raw, pre);
    write_series(dir / node_file_name(raw.node_id), r.scaled);
    summary << raw.node_id << ',' << raw.size() << ',' << r.scaled.size() << ','
            << r.outliers_replaced << ',' << r.scaler.mean << ',' << r.scaler.std_dev << '\n';
  }
  write_text(dir / "summary.csv", summary.str());
  std::cout << summary.str();
  return 0;
}

int cmd_train(const RunConfig& c, const std::string& mode) {
  // Fail on a bad topology before spending time on training.
  load_topology(c.topology, topology_mode(c));
  const auto corpus = load_corpus(c.data_dir);
  const fs::path out = c.output_dir;
  fs::create_directories(out);
  write_text(out / "config.json", serialize_config(c));

  for (const RunKey& key : sweep(c, mode)) {
    const auto clients =
        make_clients(corpus, preprocess_config(c), split_spec(c), key.h, key.p);
    const FederationConfig fed = federation_config(c, key.seed);
    const TrainingResult result = key.mode == TrainingMode::Federated
                                      ? run_federated(clients, fed)
                                      : run_centralized(clients, fed);
    write_run(run_dir(out, key), result);
    const auto& last = result.history.back();
    std::cout << key.name() << ": " << result.history.size() << " rounds, train loss "
              << last.train_loss << ", val loss " << last.val_loss << '\n';
  }
  return 0;
}

int cmd_evaluate(const RunConfig& c, const std::string& mode) {
  const auto corpus = load_corpus(c.data_dir);
  const fs::path out = c.output_dir;
  fs::create_directories(out / "reports");
  fs::create_directories(out / "grids");

  // (mode, seed) -> grid, plus the mean over seeds per mode.
  std::map<std::pair<TrainingMode, std::uint64_t>, R2Grid> grids;
  std::map<TrainingMode, R2Grid> mean_grids;
  for (const RunKey& key : sweep(c, mode)) {
    const fs::path weights = run_dir(out, key) / "weights.txt";
    if (!fs::exists(weights)) throw DataError("missing weights for " + key.name());
    const Seq2SeqModel model = load_weights(weights);
    if (model.shape().h != key.h || model.shape().p != key.p)
      throw DataError(weights.string() + " does not match h=" + std::to_string(key.h) +
                      " p=" + std::to_string(key.p));
    const auto clients =
        make_clients(corpus, preprocess_config(c), split_spec(c), key.h, key.p);
    EvaluationReport report = evaluate(predict_clients(model, clients), key.mode, key.h, key.p);
    report.seed = key.seed;
    write_report_csv(out / "reports" / (key.name() + ".csv"), report);
    std::cout << format_report(report);

    auto& g = grids[{key.mode, key.seed}];
    g.h_values = c.h_values;
    g.p_values = c.p_values;
    g.cells[{key.h, key.p}] = report.average_r2;
    auto& mg = mean_grids[key.mode];
    mg.h_values = c.h_values;
    mg.p_values = c.p_values;
    mg.cells[{key.h, key.p}] += report.average_r2 / static_cast<double>(c.seeds.size());
  }
  for (const auto& [k, g] : grids)
    write_grid_csv(out / "grids" / ("r2_" + to_string(k.first) + "_s" +
                                    std::to_string(k.second) + ".csv"),
                   g);
  for (const auto& [m, g] : mean_grids) {
    write_grid_csv(out / "grids" / ("r2_" + to_string(m) + ".csv"), g);
    std::cout << to_string(m) << ' ' << format_grid(g);
  }
  return 0;
}

int cmd_rank_links(const RunConfig& c, const std::string& mode) {
  const Topology topology = load_topology(c.topology, topology_mode(c));
  const fs::path out = c.output_dir;
  for (const RunKey& key : sweep(c, mode)) {
    const auto predictions = read_run_predictions(run_dir(out, key));
    const LinkRiskResult r =
        identify_high_load_links(topology, predictions, c.beta, c.q, link_aggregation(c));
    const fs::path dir = out / "links" / key.name();
    fs::create_directories(dir);
    write_link_outputs(dir, r.report, r.predicted, r.actual, key.h, key.p);
    const RankingComparison cmp = compare_actual_predicted(r.report);
    std::cout << key.name() << ": top-" << c.q << " links\n" << cmp.table;
    if (r.clamped > 0)
      std::cout << "  " << r.clamped << " negative forecasts clamped to zero\n";
  }
  return 0;
}

int cmd_report(const RunConfig& c) {
  const fs::path out = c.output_dir;
  std::ostringstream text;
  for (TrainingMode m : {TrainingMode::Federated, TrainingMode::Centralized}) {
    R2Grid grid{c.h_values, c.p_values, {}};
    std::vector<EvaluationReport> reports;
    for (const RunKey& key : sweep(c, to_string(m))) {
      const fs::path path = out / "reports" / (key.name() + ".csv");
      if (!fs::exists(path)) continue;
      EvaluationReport r = read_report_csv(path, m, key.h, key.p);
      r.seed = key.seed;
      grid.cells[{key.h, key.p}] += r.average_r2 / static_cast<double>(c.seeds.size());
      reports.push_back(std::move(r));
    }
    if (reports.empty()) continue;
    text << "== " << to_string(m) << " ==\n" << format_grid(grid) << '\n';
    for (const auto& r : reports) text << "seed " << r.seed << ' ' << format_report(r) << '\n';
  }
  if (text.str().empty()) throw DataError("no evaluation reports under " + out.string());
  write_text(out / "summary.txt", text.str());
  std::cout << text.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated traffic forecasting and link-risk ranking"};
  // -h is taken by the window length.
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  Overrides o;

  auto* gen = app.add_subcommand("gen-data", "Write synthetic hourly node series");
  auto* pre = app.add_subcommand("preprocess", "Resample, repair, smooth and scale every node");
  auto* train = app.add_subcommand("train", "Train federated or centralized models");
  auto* eval = app.add_subcommand("evaluate", "Per-client R^2 reports and the (h, p) grid");
  auto* rank = app.add_subcommand("rank-links", "Score and rank links from node forecasts");
  auto* report = app.add_subcommand("report", "Summary tables from evaluation reports");
  for (auto* cmd : {gen, pre, train, eval, rank, report}) add_common(cmd, o);
  for (auto* cmd : {train, eval, rank}) {
    cmd->add_option("--mode", o.mode, "fed|central|both")
        ->check(CLI::IsMember({"fed", "central", "both"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const RunConfig c = resolve(o);
    if (gen->parsed()) return cmd_gen_data(c);
    if (pre->parsed()) return cmd_preprocess(c);
    if (train->parsed()) return cmd_train(c, o.mode);
    if (eval->parsed()) return cmd_evaluate(c, o.mode);
    if (rank->parsed()) return cmd_rank_links(c, o.mode);
    return cmd_report(c);
  } catch (const ConfigError& e) {
    std::cerr << "fednet: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "fednet: diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const Error& e) {
    std::cerr << "fednet: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "fednet: " << e.what() << '\n';
    return kExitData;
  }
}
