#include "fednet/windowing.hpp"

#include <cmath>
#include <string>

#include "fednet/error.hpp"

namespace fednet {

namespace {

std::size_t floor_count(double fraction, std::size_t n) {
  // The epsilon keeps products such as 0.7 * 10 from landing just below 7.
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

}  // namespace

WindowedDataset WindowedDataset::slice(std::size_t first, std::size_t count) const {
  if (first + count > size()) throw DataError("window slice out of range");
  WindowedDataset out;
  out.node_id = node_id;
  out.h = h;
  out.p = p;
  out.offset = offset + first;
  out.inputs = inputs.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
  out.targets = targets.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
  return out;
}

void SplitSpec::validate() const {
  if (!(train_frac > 0.0 && train_frac < 1.0))
    throw ConfigError("train_frac must lie strictly between 0 and 1");
  if (!(val_frac_of_train > 0.0 && val_frac_of_train < 1.0))
    throw ConfigError("val_frac_of_train must lie strictly between 0 and 1");
}

WindowedDataset make_windows(const NodeSeries& series, std::size_t h, std::size_t p) {
  if (h == 0 || p == 0) throw ConfigError("history and horizon must be positive");
  const std::size_t n = series.size();
  if (n < h + p) {
    throw DataError("series of node " + std::to_string(series.node_id) + " has " +
                    std::to_string(n) + " samples; (h=" + std::to_string(h) +
                    ", p=" + std::to_string(p) + ") needs at least " +
                    std::to_string(h + p));
  }
  const std::size_t count = n - (h + p) + 1;
  WindowedDataset ds;
  ds.node_id = series.node_id;
  ds.h = h;
  ds.p = p;
  ds.inputs.resize(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(count));
  ds.targets.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < h; ++j)
      ds.inputs(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = series.values[i + j];
    for (std::size_t j = 0; j < p; ++j)
      ds.targets(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
          series.values[i + h + j];
  }
  return ds;
}

DatasetSplit split_chronological(const WindowedDataset& ds, const SplitSpec& spec) {
  spec.validate();
  if (ds.empty()) throw DataError("cannot split an empty dataset");
  const std::size_t n = ds.size();
  const std::size_t pool = floor_count(spec.train_frac, n);
  const std::size_t train = floor_count(1.0 - spec.val_frac_of_train, pool);
  const std::size_t val = pool - train;
  const std::size_t test = n - pool;
  if (train == 0 || val == 0 || test == 0) {
    throw DataError("node " + std::to_string(ds.node_id) + ": " + std::to_string(n) +
                    " windows are too few for a non-empty train/val/test split");
  }
  return {ds.slice(0, train), ds.slice(train, val), ds.slice(pool, test)};
}

WindowedDataset concatenate(const std::vector<const WindowedDataset*>& parts) {
  if (parts.empty()) throw DataError("nothing to concatenate");
  WindowedDataset out;
  out.node_id = parts.front()->node_id;
  out.h = parts.front()->h;
  out.p = parts.front()->p;
  out.offset = parts.front()->offset;
  Eigen::Index cols = 0;
  for (const auto* part : parts) {
    if (part->h != out.h || part->p != out.p)
      throw DataError("cannot concatenate datasets with different (h, p)");
    cols += part->inputs.cols();
  }
  out.inputs.resize(static_cast<Eigen::Index>(out.h), cols);
  out.targets.resize(static_cast<Eigen::Index>(out.p), cols);
  Eigen::Index at = 0;
  for (const auto* part : parts) {
    out.inputs.middleCols(at, part->inputs.cols()) = part->inputs;
    out.targets.middleCols(at, part->targets.cols()) = part->targets;
    at += part->inputs.cols();
  }
  return out;
}

}  // namespace fednet
