#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "fednet/error.hpp"
#include "fednet/neuralnet.hpp"
#include "support/gradcheck.hpp"

namespace fednet {
namespace {

Seq2SeqModel patterned(std::size_t H, std::size_t h, std::size_t p) {
  Seq2SeqModel m(ModelShape{H, h, p, 0.0});
  auto w = m.weights();
  for (std::size_t k = 0; k < w.size(); ++k)
    w[k] = 0.1 * (static_cast<double>((k * 7) % 11) - 5.0);
  return m;
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = g(rng);
  return m;
}

TEST(InitModel, DeterministicGivenSeed) {
  const ModelShape shape{8, 3, 2, 0.2};
  EXPECT_EQ(get_weights(init_model(shape, 5)), get_weights(init_model(shape, 5)));
  EXPECT_NE(get_weights(init_model(shape, 5)), get_weights(init_model(shape, 6)));
}

TEST(InitModel, ParameterCountAtDefaultHidden) {
  const std::size_t H = 64;
  const std::size_t expected =
      4 * H * (1 + H) + 4 * H + 4 * H * (H + H) + 4 * H + H + 1;
  EXPECT_EQ(init_model(ModelShape{64, 1, 1, 0.2}, 1).parameter_count(), expected);
}

TEST(InitModel, GlorotBoundsAndForgetBias) {
  const std::size_t H = 6;
  const auto m = init_model(ModelShape{H, 2, 2, 0.2}, 9);
  const auto o = Seq2SeqModel::offsets_for(H);
  const auto w = m.weights();
  const double enc_w_limit = std::sqrt(6.0 / (4 * H + 1));
  for (std::size_t k = o.enc_w; k < o.enc_u; ++k) EXPECT_LE(std::abs(w[k]), enc_w_limit);
  for (std::size_t k = 0; k < 4 * H; ++k) {
    const double expected = (k >= H && k < 2 * H) ? 1.0 : 0.0;
    EXPECT_EQ(w[o.enc_b + k], expected);
    EXPECT_EQ(w[o.dec_b + k], expected);
  }
  EXPECT_EQ(w[o.head_b], 0.0);
}

TEST(Forward, ZeroModelOutputsHeadBias) {
  Seq2SeqModel m(ModelShape{4, 3, 5, 0.0});
  m.weights()[Seq2SeqModel::offsets_for(4).head_b] = 0.25;
  const auto out = forward(m, Eigen::MatrixXd::Zero(3, 2), false);
  EXPECT_TRUE(out.isConstant(0.25));
}

TEST(Forward, HandComputedSingleStep) {
  // Gate-by-gate evaluation done separately in double precision.
  Eigen::MatrixXd x(1, 1);
  x << 0.7;
  EXPECT_NEAR(forward(patterned(2, 1, 1), x, false)(0, 0), -0.41475567672355007, 1e-14);
}

TEST(Forward, HandComputedTwoStep) {
  Eigen::MatrixXd x(2, 1);
  x << 0.7, -0.3;
  const auto out = forward(patterned(2, 2, 2), x, false);
  EXPECT_NEAR(out(0, 0), -0.4176617884334176, 1e-14);
  EXPECT_NEAR(out(1, 0), -0.425812528224629, 1e-14);
}

TEST(Forward, InferenceIsDeterministic) {
  std::mt19937_64 rng(3);
  const auto m = init_model(ModelShape{8, 4, 3, 0.2}, 1);
  const auto x = random_matrix(4, 5, rng);
  EXPECT_EQ(forward(m, x, false), forward(m, x, false));
}

TEST(Forward, ZeroDropoutTrainingMatchesInference) {
  std::mt19937_64 gen(4);
  const auto m = init_model(ModelShape{8, 4, 3, 0.0}, 1);
  const auto x = random_matrix(4, 5, gen);
  Rng rng(1);
  EXPECT_EQ(forward(m, x, true, &rng), forward(m, x, false));
}

TEST(Forward, DropoutChangesTrainingOutput) {
  std::mt19937_64 gen(4);
  const auto m = init_model(ModelShape{8, 4, 3, 0.5}, 1);
  const auto x = random_matrix(4, 5, gen);
  Rng rng(1);
  EXPECT_NE(forward(m, x, true, &rng), forward(m, x, false));
}

TEST(Forward, RejectsWrongInputShapeAndNonFinite) {
  const auto m = init_model(ModelShape{4, 3, 1, 0.0}, 1);
  EXPECT_THROW(forward(m, Eigen::MatrixXd::Zero(2, 1), false), DataError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 1);
  bad(1, 0) = std::nan("");
  EXPECT_THROW(forward(m, bad, false), DataError);
}

TEST(Forward, NonFiniteWeightsSignalDivergence) {
  auto m = init_model(ModelShape{4, 3, 1, 0.0}, 1);
  m.weights()[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(forward(m, Eigen::MatrixXd::Ones(3, 1), false), DivergenceError);
}

TEST(MseLoss, Examples) {
  Eigen::MatrixXd a(2, 1), b(2, 1);
  a << 1, 1;
  b << 0, 2;
  EXPECT_DOUBLE_EQ(mse_loss(a, b), 1.0);
  EXPECT_DOUBLE_EQ(mse_loss(a, a), 0.0);
  EXPECT_EQ(mse_loss(a, b), mse_loss(b, a));
  EXPECT_THROW(mse_loss(a, Eigen::MatrixXd::Zero(1, 2)), DataError);
}

TEST(Backward, MatchesFiniteDifferencesReferenceCase) {
  std::mt19937_64 gen(12);
  const auto m = init_model(ModelShape{4, 3, 2, 0.0}, 3);
  const auto x = random_matrix(3, 2, gen);
  const auto y = random_matrix(2, 2, gen);
  const auto r = oracle::check_gradient(m, x, y, false, 0);
  EXPECT_LT(r.max_error, 1e-4) << "worst coordinate " << r.worst;
  EXPECT_EQ(r.checked, m.parameter_count());
}

TEST(Backward, MatchesFiniteDifferencesWithDropoutMasks) {
  std::mt19937_64 gen(13);
  const auto m = init_model(ModelShape{5, 2, 3, 0.3}, 4);
  const auto x = random_matrix(2, 3, gen);
  const auto y = random_matrix(3, 3, gen);
  const auto r = oracle::check_gradient(m, x, y, true, 77);
  EXPECT_LT(r.max_error, 1e-4) << "worst coordinate " << r.worst;
}

TEST(Backward, HeadBiasGradientIsMeanResidualTimesTwo) {
  const auto m = init_model(ModelShape{4, 2, 2, 0.0}, 8);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(2, 3, 0.4);
  ForwardCache cache;
  const auto pred = forward(m, x, false, nullptr, &cache);
  const auto hb = Seq2SeqModel::offsets_for(4).head_b;

  EXPECT_EQ(backward(m, cache, pred)[hb], 0.0);

  const double g1 = backward(m, cache, pred.array() - 1.0)[hb];
  const double g2 = backward(m, cache, pred.array() - 2.0)[hb];
  EXPECT_NEAR(g1, 2.0, 1e-12);
  EXPECT_NEAR(g2, 2.0 * g1, 1e-12);
}

TEST(Backward, RejectsForeignCache) {
  const auto a = init_model(ModelShape{4, 2, 2, 0.0}, 8);
  const auto b = init_model(ModelShape{3, 2, 2, 0.0}, 8);
  ForwardCache cache;
  forward(a, Eigen::MatrixXd::Ones(2, 1), false, nullptr, &cache);
  EXPECT_THROW(backward(b, cache, Eigen::MatrixXd::Zero(2, 1)), DataError);
  EXPECT_THROW(backward(a, cache, Eigen::MatrixXd::Zero(2, 2)), DataError);
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  std::vector<double> params{1.0, -2.0};
  const std::vector<double> grads{0.0, 0.0};
  AdamState state;
  adam_step(params, grads, state);
  EXPECT_EQ(params, (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(state.t, 1u);
}

TEST(Adam, FirstStepMagnitudeIsLearningRate) {
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  for (double g : {0.5, -3.0, 1e-3}) {
    std::vector<double> params{0.0};
    AdamState state;
    adam_step(params, std::vector<double>{g}, state, 1e-3);
    const double expected = -1e-3 * g / (std::abs(g) + 1e-8);
    EXPECT_NEAR(params[0], expected, 1e-15);
  }
}

TEST(Adam, SecondStepClosedForm) {
  std::vector<double> params{0.0};
  AdamState state;
  adam_step(params, std::vector<double>{1.0}, state, 0.1);
  adam_step(params, std::vector<double>{-1.0}, state, 0.1);
  const double m = 0.9 * 0.1 + 0.1 * -1.0;
  const double v = 0.999 * 0.001 + 0.001;
  const double step = 0.1 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
  EXPECT_NEAR(params[0], -0.1 / (1 + 1e-8) - step, 1e-15);
}

TEST(Adam, IdenticalRunsBitwiseEqual) {
  auto run = [] {
    std::vector<double> p{0.3, -0.1, 2.0};
    AdamState s;
    for (int i = 0; i < 20; ++i) {
      std::vector<double> g{std::sin(i * 1.0), std::cos(i * 0.5), 0.1 * i};
      adam_step(p, g, s);
    }
    return p;
  };
  EXPECT_EQ(run(), run());
}

TEST(ClipGlobalNorm, RescalesOnlyAboveThreshold) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 10.0), 5.0);
  EXPECT_EQ(g, (std::vector<double>{3.0, 4.0}));
  clip_global_norm(g, 1.0);
  EXPECT_NEAR(g[0], 0.6, 1e-15);
  EXPECT_NEAR(g[1], 0.8, 1e-15);
  std::vector<double> big{30.0, 40.0};
  clip_global_norm(big, 0.0);
  EXPECT_EQ(big[0], 30.0);
}

WindowedDataset constant_target_data(std::size_t n, double target) {
  WindowedDataset ds;
  ds.node_id = 1;
  ds.h = 3;
  ds.p = 2;
  std::mt19937_64 gen(2);
  ds.inputs = random_matrix(3, static_cast<Eigen::Index>(n), gen);
  ds.targets = Eigen::MatrixXd::Constant(2, static_cast<Eigen::Index>(n), target);
  return ds;
}

TEST(TrainEpoch, ZeroLearningRateLeavesModelUnchanged) {
  const auto data = constant_target_data(40, 0.5);
  auto m = init_model(ModelShape{6, 3, 2, 0.0}, 2);
  const auto before = get_weights(m);
  const double initial = mse_loss(predict(m, data.inputs), data.targets);
  AdamState adam;
  Rng rng(1);
  const double loss = train_epoch(m, adam, data, TrainOptions{64, 0.0, 5.0}, rng);
  EXPECT_EQ(get_weights(m), before);
  EXPECT_NEAR(loss, initial, 1e-12);
}

TEST(TrainEpoch, LossDoesNotIncreaseOnConstantTarget) {
  const auto data = constant_target_data(300, 0.8);
  auto m = init_model(ModelShape{6, 3, 2, 0.0}, 2);
  const double initial = mse_loss(predict(m, data.inputs), data.targets);
  AdamState adam;
  Rng rng(1);
  TrainOptions opts{16, 1e-2, 5.0};
  train_epoch(m, adam, data, opts, rng);
  EXPECT_LE(mse_loss(predict(m, data.inputs), data.targets), initial);
}

TEST(TrainEpoch, SingleBatchTakesOneStep) {
  const auto data = constant_target_data(40, 0.5);
  auto m = init_model(ModelShape{6, 3, 2, 0.2}, 2);
  AdamState adam;
  Rng rng(1);
  train_epoch(m, adam, data, TrainOptions{256, 1e-3, 5.0}, rng);
  EXPECT_EQ(adam.t, 1u);
  train_epoch(m, adam, data, TrainOptions{16, 1e-3, 5.0}, rng);
  EXPECT_EQ(adam.t, 1u + 3u);  // 16 + 16 + 8
}

TEST(TrainEpoch, BitwiseReproducible) {
  const auto data = constant_target_data(100, 0.3);
  auto run = [&] {
    auto m = init_model(ModelShape{6, 3, 2, 0.2}, 2);
    AdamState adam;
    Rng rng(9);
    for (int e = 0; e < 3; ++e) train_epoch(m, adam, data, TrainOptions{32, 1e-3, 5.0}, rng);
    return get_weights(m);
  };
  EXPECT_EQ(run(), run());
}

TEST(Weights, GetSetRoundTrip) {
  auto m = init_model(ModelShape{5, 2, 2, 0.2}, 3);
  const auto w = get_weights(m);
  Seq2SeqModel other(m.shape());
  set_weights(other, w);
  EXPECT_EQ(get_weights(other), w);
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(2, 4, 0.3);
  EXPECT_EQ(forward(m, x, false), forward(other, x, false));
}

TEST(Weights, WrongLengthIsAnError) {
  Seq2SeqModel m(ModelShape{5, 2, 2, 0.2});
  EXPECT_THROW(set_weights(m, std::vector<double>(3, 0.0)), DataError);
}

TEST(Weights, PerturbationRoundTripProperty) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 10.0);
  Seq2SeqModel m(ModelShape{3, 2, 2, 0.2});
  for (int trial = 0; trial < 20; ++trial) {
    WeightVector w(m.parameter_count());
    for (double& v : w) v = g(rng);
    set_weights(m, w);
    EXPECT_EQ(get_weights(m), w);
  }
}

TEST(Weights, FileRoundTripIsExact) {
  const auto m = init_model(ModelShape{7, 4, 3, 0.25}, 11);
  const auto path = std::filesystem::temp_directory_path() / "fednet_unit_weights.csv";
  save_weights(path, m);
  const auto back = load_weights(path);
  EXPECT_EQ(back.shape(), m.shape());
  EXPECT_EQ(get_weights(back), get_weights(m));
}

TEST(Weights, CorruptFileIsAnError) {
  const auto path = std::filesystem::temp_directory_path() / "fednet_unit_bad_weights.csv";
  std::ofstream(path) << "fednet-weights,99\n";
  EXPECT_THROW(load_weights(path), DataError);
  EXPECT_THROW(load_weights("/nonexistent/w.csv"), DataError);
}

}  // namespace
}  // namespace fednet
