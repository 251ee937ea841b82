#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fednet/rng.hpp"
#include "fednet/windowing.hpp"

namespace fednet {

/// Flat parameter vector.  Canonical order (format version 1), every
/// matrix stored column-major, gate blocks ordered [input, forget,
/// cell-candidate, output]:
///
///   encoder W (4H x 1), encoder U (4H x H), encoder b (4H),
///   decoder W (4H x H), decoder U (4H x H), decoder b (4H),
///   head w (1 x H), head b (1)
using WeightVector = std::vector<double>;

inline constexpr int kWeightFormatVersion = 1;

struct ModelShape {
  std::size_t hidden_size = 64;
  std::size_t h = 1;
  std::size_t p = 1;
  double dropout = 0.2;

  std::size_t parameter_count() const;
  void validate() const;
  bool operator==(const ModelShape&) const = default;
};

/// Two-layer LSTM encoder-decoder with a shared linear output head.
///
/// The encoder reads the h-step history; its final hidden state (after
/// dropout) is repeated p times as the decoder's input sequence.  The
/// decoder starts from a zero state and its dropped-out hidden state at
/// every step goes through the head to give one forecast value.
class Seq2SeqModel {
 public:
  /// All parameters zero.
  explicit Seq2SeqModel(const ModelShape& shape);

  const ModelShape& shape() const { return shape_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> weights() { return params_; }
  std::span<const double> weights() const { return params_; }

  struct Offsets {
    std::size_t enc_w, enc_u, enc_b, dec_w, dec_u, dec_b, head_w, head_b, total;
  };
  static Offsets offsets_for(std::size_t hidden_size);

 private:
  ModelShape shape_;
  std::vector<double> params_;
};

/// Glorot-uniform matrices, zero biases except the forget gate (1.0).
Seq2SeqModel init_model(const ModelShape& shape, std::uint64_t seed);

/// Activations retained by a forward pass for the backward pass.
struct ForwardCache {
  ModelShape shape;
  Eigen::MatrixXd inputs;  // h x B
  std::vector<Eigen::MatrixXd> enc_gates, enc_c, enc_tanh_c, enc_h;
  Eigen::MatrixXd enc_mask;  // H x B, empty without dropout
  Eigen::MatrixXd bridge;    // decoder input, H x B
  std::vector<Eigen::MatrixXd> dec_gates, dec_c, dec_tanh_c, dec_h, dec_masks, dec_out;
  Eigen::MatrixXd predictions;  // p x B
};

/// Runs the model on a batch of histories (h x B, one column per
/// window) and returns p x B forecasts.  Dropout is active only when
/// `training` is set, in which case `rng` supplies the masks.
Eigen::MatrixXd forward(const Seq2SeqModel& model, const Eigen::MatrixXd& inputs,
                        bool training, Rng* rng = nullptr, ForwardCache* cache = nullptr);

/// Inference over any number of windows, chunked internally.
Eigen::MatrixXd predict(const Seq2SeqModel& model, const Eigen::MatrixXd& inputs);

/// Mean of squared residuals over all entries.
double mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

/// Exact gradient of mse_loss(cache.predictions, target) with respect to
/// every parameter, in canonical order.
WeightVector backward(const Seq2SeqModel& model, const ForwardCache& cache,
                      const Eigen::MatrixXd& target);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update in place.  Moment buffers are allocated on
/// the first call.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double learning_rate = 1e-3);

/// Rescales `grads` so its L2 norm is at most `max_norm`; returns the
/// norm before clipping.  max_norm <= 0 disables clipping.
double clip_global_norm(std::span<double> grads, double max_norm);

struct TrainOptions {
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;
};

/// One pass over `data` in shuffled mini-batches (the last one may be
/// partial), one Adam step per batch.  Returns the mean batch loss.
double train_epoch(Seq2SeqModel& model, AdamState& adam, const WindowedDataset& data,
                   const TrainOptions& options, Rng& rng);

WeightVector get_weights(const Seq2SeqModel& model);
void set_weights(Seq2SeqModel& model, std::span<const double> weights);

/// Text format: a `fednet-weights,<version>` line, shape lines, then one
/// value per line at round-trip precision.
void save_weights(const std::filesystem::path& path, const Seq2SeqModel& model);
Seq2SeqModel load_weights(const std::filesystem::path& path);

}  // namespace fednet
