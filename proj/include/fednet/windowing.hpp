#pragma once

#include <Eigen/Core>
#include <cstddef>

#include "fednet/traffic_data.hpp"

namespace fednet {

/// Supervised (history, target) pairs cut from one node series.
///
/// Column i of `inputs` holds x = [v_{s}, ..., v_{s+h-1}] and column i of
/// `targets` holds y = [v_{s+h}, ..., v_{s+h+p-1}] with s = offset + i.
struct WindowedDataset {
  int node_id = 0;
  std::size_t h = 1;
  std::size_t p = 1;
  // Index in the source series of the first sample of window 0.
  std::size_t offset = 0;
  Eigen::MatrixXd inputs;   // h x n
  Eigen::MatrixXd targets;  // p x n

  std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
  bool empty() const { return size() == 0; }

  /// Windows [first, first + count) as a new dataset.
  WindowedDataset slice(std::size_t first, std::size_t count) const;
};

struct SplitSpec {
  double train_frac = 0.70;
  double val_frac_of_train = 0.20;

  void validate() const;
};

struct DatasetSplit {
  WindowedDataset train;
  WindowedDataset val;
  WindowedDataset test;
};

/// Sliding windows with stride one; n - (h + p) + 1 of them.
WindowedDataset make_windows(const NodeSeries& series, std::size_t h, std::size_t p);

/// Chronological split: the first floor(train_frac * n) windows form the
/// training pool and the rest the test set; the final part of the pool
/// (pool - floor((1 - val_frac) * pool) windows) is validation.
DatasetSplit split_chronological(const WindowedDataset& ds, const SplitSpec& spec = {});

/// Concatenates datasets with identical (h, p) column-wise.  The result
/// keeps the node id and offset of the first part.
WindowedDataset concatenate(const std::vector<const WindowedDataset*>& parts);

}  // namespace fednet
