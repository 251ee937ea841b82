#include "fednet/neuralnet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "fednet/error.hpp"

namespace fednet {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr Index kPredictChunk = 1024;

Index idx(std::size_t n) { return static_cast<Index>(n); }

template <typename Derived>
MatrixXd sigmoid(const Eigen::MatrixBase<Derived>& z) {
  return (1.0 + (-z.array()).exp()).inverse().matrix();
}

// Parameter blocks copied out of a flat buffer into owned (aligned) storage.
// Maps straight into a std::vector would let Eigen's vectorized reductions
// change their summation order with the buffer's address.
struct Params {
  MatrixXd enc_w, enc_u;
  VectorXd enc_b;
  MatrixXd dec_w, dec_u;
  VectorXd dec_b;
  MatrixXd head_w;
  double head_b = 0.0;

  explicit Params(std::size_t hidden) {
    const Index H = idx(hidden);
    enc_w.setZero(4 * H, 1);
    enc_u.setZero(4 * H, H);
    enc_b.setZero(4 * H);
    dec_w.setZero(4 * H, H);
    dec_u.setZero(4 * H, H);
    dec_b.setZero(4 * H);
    head_w.setZero(1, H);
  }

  Params(const double* base, std::size_t hidden) : Params(hidden) {
    const auto o = Seq2SeqModel::offsets_for(hidden);
    copy(base + o.enc_w, enc_w);
    copy(base + o.enc_u, enc_u);
    copy(base + o.enc_b, enc_b);
    copy(base + o.dec_w, dec_w);
    copy(base + o.dec_u, dec_u);
    copy(base + o.dec_b, dec_b);
    copy(base + o.head_w, head_w);
    head_b = base[o.head_b];
  }

  void store(double* base, std::size_t hidden) const {
    const auto o = Seq2SeqModel::offsets_for(hidden);
    auto put = [&](std::size_t at, const auto& m) {
      std::copy(m.data(), m.data() + m.size(), base + at);
    };
    put(o.enc_w, enc_w);
    put(o.enc_u, enc_u);
    put(o.enc_b, enc_b);
    put(o.dec_w, dec_w);
    put(o.dec_u, dec_u);
    put(o.dec_b, dec_b);
    put(o.head_w, head_w);
    base[o.head_b] = head_b;
  }

 private:
  template <typename M>
  static void copy(const double* from, M& to) {
    std::copy(from, from + to.size(), to.data());
  }
};

// One LSTM step.  `z` holds the gate pre-activations on entry and the
// activated gates [i, f, g, o] on exit.
void lstm_cell(MatrixXd& z, const MatrixXd* c_prev, Index H, MatrixXd& c, MatrixXd& tanh_c,
               MatrixXd& h) {
  z.topRows(2 * H) = sigmoid(z.topRows(2 * H));
  z.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh().matrix();
  z.bottomRows(H) = sigmoid(z.bottomRows(H));
  const auto i = z.topRows(H).array();
  const auto f = z.middleRows(H, H).array();
  const auto g = z.middleRows(2 * H, H).array();
  const auto o = z.bottomRows(H).array();
  if (c_prev != nullptr) {
    c = (f * c_prev->array() + i * g).matrix();
  } else {
    c = (i * g).matrix();
  }
  tanh_c = c.array().tanh().matrix();
  h = (o * tanh_c.array()).matrix();
}

// Backward through one LSTM step.  On entry `dh` is the total gradient
// reaching h_t and `dc_next` the gradient flowing into c_t from step t+1;
// on exit `dc_next` holds the gradient for c_{t-1} and `dz` the gate
// pre-activation gradients.
void lstm_cell_backward(const MatrixXd& gates, const MatrixXd* c_prev, const MatrixXd& tanh_c,
                        const MatrixXd& dh, Index H, MatrixXd& dc_next, MatrixXd& dz) {
  const auto i = gates.topRows(H).array();
  const auto f = gates.middleRows(H, H).array();
  const auto g = gates.middleRows(2 * H, H).array();
  const auto o = gates.bottomRows(H).array();
  const auto tc = tanh_c.array();

  MatrixXd dc = (dh.array() * o * (1.0 - tc * tc)).matrix();
  if (dc_next.size() != 0) dc += dc_next;

  dz.resize(4 * H, dh.cols());
  dz.topRows(H) = (dc.array() * g * i * (1.0 - i)).matrix();
  if (c_prev != nullptr) {
    dz.middleRows(H, H) = (dc.array() * c_prev->array() * f * (1.0 - f)).matrix();
  } else {
    dz.middleRows(H, H).setZero();
  }
  dz.middleRows(2 * H, H) = (dc.array() * i * (1.0 - g * g)).matrix();
  dz.bottomRows(H) = (dh.array() * tc * o * (1.0 - o)).matrix();
  dc_next = (dc.array() * f).matrix();
}

MatrixXd dropout_mask(Index rows, Index cols, double rate, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  MatrixXd mask(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index r = 0; r < rows; ++r) mask(r, j) = unit(rng) < rate ? 0.0 : keep_scale;
  return mask;
}

void check_finite(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw DivergenceError(std::string("non-finite values in ") + what);
}

}  // namespace

std::size_t ModelShape::parameter_count() const {
  return Seq2SeqModel::offsets_for(hidden_size).total;
}

void ModelShape::validate() const {
  if (hidden_size == 0 || h == 0 || p == 0)
    throw ConfigError("model sizes (hidden, h, p) must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

Seq2SeqModel::Offsets Seq2SeqModel::offsets_for(std::size_t H) {
  Offsets o{};
  std::size_t at = 0;
  o.enc_w = at; at += 4 * H;
  o.enc_u = at; at += 4 * H * H;
  o.enc_b = at; at += 4 * H;
  o.dec_w = at; at += 4 * H * H;
  o.dec_u = at; at += 4 * H * H;
  o.dec_b = at; at += 4 * H;
  o.head_w = at; at += H;
  o.head_b = at; at += 1;
  o.total = at;
  return o;
}

Seq2SeqModel::Seq2SeqModel(const ModelShape& shape) : shape_(shape) {
  shape_.validate();
  params_.assign(shape_.parameter_count(), 0.0);
}

Seq2SeqModel init_model(const ModelShape& shape, std::uint64_t seed) {
  Seq2SeqModel model(shape);
  const std::size_t H = shape.hidden_size;
  const auto o = Seq2SeqModel::offsets_for(H);
  auto w = model.weights();
  Rng rng(seed);

  auto glorot = [&](std::size_t offset, std::size_t rows, std::size_t cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t k = 0; k < rows * cols; ++k) w[offset + k] = dist(rng);
  };
  glorot(o.enc_w, 4 * H, 1);
  glorot(o.enc_u, 4 * H, H);
  glorot(o.dec_w, 4 * H, H);
  glorot(o.dec_u, 4 * H, H);
  glorot(o.head_w, 1, H);
  for (std::size_t k = 0; k < H; ++k) {
    w[o.enc_b + H + k] = 1.0;
    w[o.dec_b + H + k] = 1.0;
  }
  return model;
}

MatrixXd forward(const Seq2SeqModel& model, const MatrixXd& inputs, bool training, Rng* rng,
                 ForwardCache* cache) {
  const ModelShape& shape = model.shape();
  const Index H = idx(shape.hidden_size);
  const Index steps_in = idx(shape.h);
  const Index steps_out = idx(shape.p);
  if (inputs.rows() != steps_in || inputs.cols() == 0) {
    throw DataError("forward: expected " + std::to_string(shape.h) +
                    " x B inputs with B > 0, got " + std::to_string(inputs.rows()) + " x " +
                    std::to_string(inputs.cols()));
  }
  if (!inputs.allFinite()) throw DataError("forward: non-finite inputs");
  const bool use_dropout = training && shape.dropout > 0.0;
  if (use_dropout && rng == nullptr) throw ConfigError("forward: dropout needs an rng");

  const Index B = inputs.cols();
  const Params P(model.weights().data(), shape.hidden_size);

  ForwardCache local;
  ForwardCache& c = cache != nullptr ? *cache : local;
  c = ForwardCache{};
  c.shape = shape;
  c.inputs = inputs;
  c.enc_gates.resize(steps_in);
  c.enc_c.resize(steps_in);
  c.enc_tanh_c.resize(steps_in);
  c.enc_h.resize(steps_in);

  for (Index t = 0; t < steps_in; ++t) {
    MatrixXd z = P.enc_w * inputs.row(t);
    if (t > 0) z.noalias() += P.enc_u * c.enc_h[t - 1];
    z.colwise() += P.enc_b;
    lstm_cell(z, t > 0 ? &c.enc_c[t - 1] : nullptr, H, c.enc_c[t], c.enc_tanh_c[t], c.enc_h[t]);
    c.enc_gates[t] = std::move(z);
  }

  c.bridge = c.enc_h[steps_in - 1];
  if (use_dropout) {
    c.enc_mask = dropout_mask(H, B, shape.dropout, *rng);
    c.bridge = c.bridge.cwiseProduct(c.enc_mask);
  }

  MatrixXd bridge_in = P.dec_w * c.bridge;
  bridge_in.colwise() += P.dec_b;

  c.dec_gates.resize(steps_out);
  c.dec_c.resize(steps_out);
  c.dec_tanh_c.resize(steps_out);
  c.dec_h.resize(steps_out);
  c.dec_out.resize(steps_out);
  if (use_dropout) c.dec_masks.resize(steps_out);
  c.predictions.resize(steps_out, B);

  for (Index t = 0; t < steps_out; ++t) {
    MatrixXd z = bridge_in;
    if (t > 0) z.noalias() += P.dec_u * c.dec_h[t - 1];
    lstm_cell(z, t > 0 ? &c.dec_c[t - 1] : nullptr, H, c.dec_c[t], c.dec_tanh_c[t], c.dec_h[t]);
    c.dec_gates[t] = std::move(z);
    if (use_dropout) {
      c.dec_masks[t] = dropout_mask(H, B, shape.dropout, *rng);
      c.dec_out[t] = c.dec_h[t].cwiseProduct(c.dec_masks[t]);
    } else {
      c.dec_out[t] = c.dec_h[t];
    }
    c.predictions.row(t) = (P.head_w * c.dec_out[t]).array() + P.head_b;
  }
  check_finite(c.predictions, "forward predictions");
  return c.predictions;
}

MatrixXd predict(const Seq2SeqModel& model, const MatrixXd& inputs) {
  MatrixXd out(idx(model.shape().p), inputs.cols());
  for (Index start = 0; start < inputs.cols(); start += kPredictChunk) {
    const Index n = std::min(kPredictChunk, inputs.cols() - start);
    out.middleCols(start, n) = forward(model, inputs.middleCols(start, n), false);
  }
  return out;
}

double mse_loss(const MatrixXd& pred, const MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || pred.size() == 0) {
    throw DataError("mse_loss: shape mismatch (" + std::to_string(pred.rows()) + "x" +
                    std::to_string(pred.cols()) + " vs " + std::to_string(target.rows()) +
                    "x" + std::to_string(target.cols()) + ")");
  }
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

WeightVector backward(const Seq2SeqModel& model, const ForwardCache& cache,
                      const MatrixXd& target) {
  const ModelShape& shape = model.shape();
  if (!(cache.shape == shape) || cache.enc_h.size() != shape.h ||
      cache.dec_h.size() != shape.p || cache.predictions.size() == 0) {
    throw DataError("backward: cache does not belong to this model");
  }
  const Index H = idx(shape.hidden_size);
  const Index B = cache.predictions.cols();
  if (target.rows() != cache.predictions.rows() || target.cols() != B)
    throw DataError("backward: target shape does not match the cached batch");

  const Params P(model.weights().data(), shape.hidden_size);
  Params G(shape.hidden_size);

  const Index steps_in = idx(shape.h);
  const Index steps_out = idx(shape.p);
  const double scale = 2.0 / static_cast<double>(cache.predictions.size());

  // Decoder.
  MatrixXd dh_next;
  MatrixXd dc_next;
  MatrixXd dz;
  MatrixXd dz_sum = MatrixXd::Zero(4 * H, B);
  for (Index t = steps_out - 1; t >= 0; --t) {
    const Eigen::RowVectorXd dy = scale * (cache.predictions.row(t) - target.row(t));
    G.head_w.noalias() += dy * cache.dec_out[t].transpose();
    G.head_b += dy.sum();

    MatrixXd dh = P.head_w.transpose() * dy;
    if (!cache.dec_masks.empty()) dh = dh.cwiseProduct(cache.dec_masks[t]);
    if (dh_next.size() != 0) dh += dh_next;

    lstm_cell_backward(cache.dec_gates[t], t > 0 ? &cache.dec_c[t - 1] : nullptr,
                       cache.dec_tanh_c[t], dh, H, dc_next, dz);
    dz_sum += dz;
    if (t > 0) {
      G.dec_u.noalias() += dz * cache.dec_h[t - 1].transpose();
      dh_next.noalias() = P.dec_u.transpose() * dz;
    }
  }
  G.dec_w.noalias() += dz_sum * cache.bridge.transpose();
  G.dec_b += dz_sum.rowwise().sum();

  // Bridge back into the encoder's final hidden state.
  MatrixXd dh = P.dec_w.transpose() * dz_sum;
  if (cache.enc_mask.size() != 0) dh = dh.cwiseProduct(cache.enc_mask);

  dc_next.resize(0, 0);
  for (Index t = steps_in - 1; t >= 0; --t) {
    lstm_cell_backward(cache.enc_gates[t], t > 0 ? &cache.enc_c[t - 1] : nullptr,
                       cache.enc_tanh_c[t], dh, H, dc_next, dz);
    G.enc_w.noalias() += dz * cache.inputs.row(t).transpose();
    G.enc_b += dz.rowwise().sum();
    if (t > 0) {
      G.enc_u.noalias() += dz * cache.enc_h[t - 1].transpose();
      dh.noalias() = P.enc_u.transpose() * dz;
    }
  }
  WeightVector grad(model.parameter_count(), 0.0);
  G.store(grad.data(), shape.hidden_size);
  return grad;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double learning_rate) {
  if (params.size() != grads.size())
    throw DataError("adam_step: parameter and gradient sizes differ");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  } else if (state.m.size() != params.size()) {
    throw DataError("adam_step: optimizer state does not match the parameters");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[k] / correction1;
    const double v_hat = state.v[k] / correction2;
    params[k] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

double clip_global_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (double& g : grads) g *= factor;
  }
  return norm;
}

double train_epoch(Seq2SeqModel& model, AdamState& adam, const WindowedDataset& data,
                   const TrainOptions& options, Rng& rng) {
  if (data.empty()) throw DataError("train_epoch: empty training set");
  if (options.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (data.h != model.shape().h || data.p != model.shape().p)
    throw DataError("train_epoch: dataset (h, p) does not match the model");

  const std::size_t n = data.size();
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  ForwardCache cache;
  double loss_sum = 0.0;
  std::size_t batches = 0;
  MatrixXd x;
  MatrixXd y;
  for (std::size_t start = 0; start < n; start += options.batch_size) {
    const std::size_t count = std::min(options.batch_size, n - start);
    x.resize(data.inputs.rows(), idx(count));
    y.resize(data.targets.rows(), idx(count));
    for (std::size_t j = 0; j < count; ++j) {
      x.col(idx(j)) = data.inputs.col(order[start + j]);
      y.col(idx(j)) = data.targets.col(order[start + j]);
    }
    forward(model, x, true, &rng, &cache);
    const double loss = mse_loss(cache.predictions, y);
    if (!std::isfinite(loss)) {
      throw DivergenceError("node " + std::to_string(data.node_id) +
                            ": non-finite training loss at batch " + std::to_string(batches));
    }
    WeightVector grad = backward(model, cache, y);
    clip_global_norm(grad, options.clip_norm);
    adam_step(model.weights(), grad, adam, options.learning_rate);
    loss_sum += loss;
    ++batches;
  }
  return loss_sum / static_cast<double>(batches);
}

WeightVector get_weights(const Seq2SeqModel& model) {
  const auto w = model.weights();
  return WeightVector(w.begin(), w.end());
}

void set_weights(Seq2SeqModel& model, std::span<const double> weights) {
  if (weights.size() != model.parameter_count()) {
    throw DataError("set_weights: expected " + std::to_string(model.parameter_count()) +
                    " values, got " + std::to_string(weights.size()));
  }
  std::copy(weights.begin(), weights.end(), model.weights().begin());
}

void save_weights(const std::filesystem::path& path, const Seq2SeqModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write weights file: " + path.string());
  const ModelShape& s = model.shape();
  out << "fednet-weights," << kWeightFormatVersion << '\n'
      << "hidden_size," << s.hidden_size << '\n'
      << "h," << s.h << '\n'
      << "p," << s.p << '\n';
  char buf[32];
  auto put = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, ptr - buf);
  };
  out << "dropout,";
  put(s.dropout);
  out << '\n' << "count," << model.parameter_count() << '\n';
  for (double v : model.weights()) {
    put(v);
    out.put('\n');
  }
  if (!out) throw DataError("write failed: " + path.string());
}

Seq2SeqModel load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open weights file: " + path.string());
  auto header = [&](const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": truncated header");
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.substr(0, comma) != key)
      throw DataError(path.string() + ": expected header field '" + key + "'");
    return line.substr(comma + 1);
  };
  auto to_size = [&](const std::string& s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw DataError(path.string() + ": bad integer '" + s + "'");
    return v;
  };
  if (to_size(header("fednet-weights")) != kWeightFormatVersion)
    throw DataError(path.string() + ": unsupported weights format version");
  ModelShape shape;
  shape.hidden_size = to_size(header("hidden_size"));
  shape.h = to_size(header("h"));
  shape.p = to_size(header("p"));
  {
    const std::string d = header("dropout");
    auto [ptr, ec] = std::from_chars(d.data(), d.data() + d.size(), shape.dropout);
    if (ec != std::errc()) throw DataError(path.string() + ": bad dropout value");
  }
  const std::size_t count = to_size(header("count"));
  Seq2SeqModel model(shape);
  if (count != model.parameter_count())
    throw DataError(path.string() + ": parameter count does not match the declared shape");
  auto w = model.weights();
  std::string line;
  for (std::size_t k = 0; k < count; ++k) {
    if (!std::getline(in, line)) throw DataError(path.string() + ": truncated weights");
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), w[k]);
    if (ec != std::errc()) throw DataError(path.string() + ": bad weight on data line " +
                                           std::to_string(k + 1));
  }
  return model;
}

}  // namespace fednet
