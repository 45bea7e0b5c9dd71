#include "saldl/data.hpp"
#include "saldl/error.hpp"
#include "saldl/eval.hpp"
#include "saldl/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace saldl;

namespace {

const LabelSupport kAges(0, 100);

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected saldl::Error";
  return ErrorKind::io_error;
}

/// A linear model over one-hot inputs whose logits peak so sharply at
/// `targets[i]` for input i that the expected age is exactly that label.
Model lookup_model(const std::vector<int>& targets, const LabelSupport& support) {
  const int n = static_cast<int>(targets.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<int>(support.size()), n);
  for (int i = 0; i < n; ++i) w(static_cast<int>(support.index_of(targets[i])), i) = 1000.0;
  return Model({n, static_cast<int>(support.size())}, Activation::relu,
               {DenseLayer{w, Eigen::VectorXd::Zero(static_cast<int>(support.size()))}});
}

Dataset one_hot_dataset(const std::vector<int>& labels, const LabelSupport& support) {
  Dataset d(support, labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::vector<double> x(labels.size(), 0.0);
    x[i] = 1.0;
    d.add({x, labels[i], "s" + std::to_string(i)});
  }
  return d;
}

struct TwoRegimes {
  Dataset train{kAges, 16};
  Dataset val{kAges, 16};
  StagePartition partition = manual_partition({0, 50}, kAges);
};

TwoRegimes two_regimes(std::uint64_t seed) {
  AmbiguityProfile profile;
  profile.boundaries = {0, 50};
  profile.levels = {1.0, 8.0};
  auto parts = split(generate_synthetic(profile, 6, seed), {0.5, 0.25, 0.25}, seed + 1);
  TwoRegimes out;
  out.train = std::move(parts.train);
  out.val = std::move(parts.val);
  return out;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.epochs = 12;
  c.batch_size = 16;
  c.learning_rate = 0.05;
  c.momentum = 0.9;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(EvaluateL1, HandCases) {
  const Dataset data = one_hot_dataset({10, 20}, kAges);
  EXPECT_EQ(evaluate_l1(lookup_model({10, 20}, kAges), data, PredictionRule::expectation), 0.0);
  EXPECT_EQ(evaluate_l1(lookup_model({11, 23}, kAges), data, PredictionRule::expectation), 2.0);
  EXPECT_EQ(evaluate_l1(lookup_model({11, 23}, kAges), data, PredictionRule::argmax), 2.0);
}

TEST(EvaluateL1, EqualsMetricsMae) {
  std::mt19937_64 rng(1);
  const auto model = init_model({16, 8, 101}, Activation::relu, 5, kAges);
  const auto data = two_regimes(4).val;
  const auto preds = predict_ages(model, data, PredictionRule::expectation);
  EXPECT_EQ(evaluate_l1(model, data, PredictionRule::expectation), mae(preds, data.labels()));
}

TEST(EvaluateL1, EmptyInput) {
  const auto model = init_model({2, 101}, Activation::relu, 0, kAges);
  EXPECT_EQ(kind_of([&] { evaluate_l1(model, Dataset(kAges, 2), PredictionRule::expectation); }),
            ErrorKind::empty_input);
}

TEST(GridSchedule, DocumentedOrder) {
  TrainConfig c;
  c.sigma_grid = {1.0, 2.0};
  c.alpha_grid = {0.3};
  const auto moves = grid_schedule(2, c);
  using T = GridMove::Target;
  const std::vector<GridMove> expected{{0, T::sigma, 1.0}, {0, T::sigma, 2.0}, {0, T::alpha, 0.3},
                                       {1, T::sigma, 1.0}, {1, T::sigma, 2.0}, {1, T::alpha, 0.3}};
  EXPECT_EQ(moves, expected);

  c.loss = LossMode::kl;
  EXPECT_EQ(grid_schedule(2, c).size(), 4u);  // alpha only matters for the weighted loss
  c.adaptation_mode = AdaptationMode::gradient;
  EXPECT_TRUE(grid_schedule(2, c).empty());
}

TEST(Proposal, GridCyclesThroughEveryMove) {
  TrainConfig c;
  c.sigma_grid = {1.0, 2.0};
  c.alpha_grid = {0.3};
  const auto schedule = grid_schedule(2, c);
  ProposalState state;
  StageParams params = StageParams::initial(2);
  for (std::size_t i = 0; i < 2 * schedule.size(); ++i) {
    const auto& move = schedule[i % schedule.size()];
    const auto next = propose_stage_update(params, c, StageGradients(2), state);
    if (move.target == GridMove::Target::sigma) {
      EXPECT_NEAR(next.sigma(move.stage), move.value, 1e-12);
    } else {
      EXPECT_NEAR(next.alpha(move.stage), move.value, 1e-12);
    }
  }
  EXPECT_EQ(state.grid_cursor, 2 * schedule.size());
}

TEST(Proposal, ZeroGradientLeavesParamsUnchanged) {
  TrainConfig c;
  c.adaptation_mode = AdaptationMode::gradient;
  c.alpha_update = AlphaUpdate::gradient;
  StageGradients grads(3);
  grads.counts = {4, 0, 2};
  ProposalState state;
  const auto params = StageParams::from_values(std::vector<double>{1.0, 2.0, 3.0},
                                               std::vector<double>{0.2, 0.5, 0.7});
  EXPECT_EQ(propose_stage_update(params, c, grads, state), params);
}

TEST(Proposal, GradientStepDescendsAndRespectsFloor) {
  TrainConfig c;
  c.adaptation_mode = AdaptationMode::gradient;
  c.alpha_update = AlphaUpdate::gradient;
  c.stage_lr = 1e6;
  StageGradients grads(2);
  grads.counts = {1, 1};
  grads.sigma_grad = {5.0, -5.0};
  grads.alpha_grad = {1.0, -1.0};
  ProposalState state;
  const auto params = StageParams::initial(2);
  const auto next = propose_stage_update(params, c, grads, state);
  EXPECT_GE(next.sigma(0), kSigmaMin);
  EXPECT_LT(next.sigma(0), params.sigma(0));
  EXPECT_GT(next.sigma(1), params.sigma(1));
  EXPECT_LT(next.alpha(0), params.alpha(0));
  EXPECT_GT(next.alpha(1), params.alpha(1));
  EXPECT_GT(next.alpha(0), 0.0);
  EXPECT_LT(next.alpha(1), 1.0);
}

TEST(TrainSav, ZeroEpochsReturnsInputs) {
  const auto data = two_regimes(1);
  const auto model0 = init_model({16, 8, 101}, Activation::relu, 2, kAges);
  const auto params0 = StageParams::initial(2);
  TrainConfig c = quick_config();
  c.epochs = 0;
  const auto result = train_sav(data.train, data.val, data.partition, model0, params0, c);
  EXPECT_EQ(result.model, model0);
  EXPECT_EQ(result.params, params0);
  EXPECT_TRUE(result.history.epochs.empty());
}

TEST(TrainSav, SingleAgeLearnedQuickly) {
  AmbiguityProfile profile;
  profile.feature_dim = 8;
  const auto protos = prototype_curve(profile);
  std::mt19937_64 rng(0);
  std::normal_distribution<double> noise(0.0, 0.05);
  Dataset train(kAges, 8), val(kAges, 8);
  for (int i = 0; i < 40; ++i) {
    Sample s{protos[42], 42, "t" + std::to_string(i)};
    for (double& f : s.features) f += noise(rng);
    (i < 30 ? train : val).add(s);
  }
  TrainConfig c = quick_config();
  c.epochs = 10;
  const auto result = train_sav(train, val, decade_partition(kAges),
                                init_model({8, 16, 101}, Activation::relu, 1, kAges),
                                StageParams::initial(10), c);
  const auto snaps = result.history.snapshot_l1();
  ASSERT_FALSE(snaps.empty());
  EXPECT_LT(snaps.back(), 0.5);
}

TEST(TrainSav, SnapshotsStrictlyImproveAndMatchResult) {
  const auto data = two_regimes(2);
  TrainConfig c = quick_config();
  c.epochs = 20;
  const auto result = train_sav(data.train, data.val, data.partition,
                                init_model({16, 16, 101}, Activation::relu, 7, kAges),
                                StageParams::initial(2), c);
  const auto snaps = result.history.snapshot_l1();
  ASSERT_FALSE(snaps.empty());
  for (std::size_t i = 1; i < snaps.size(); ++i) EXPECT_LT(snaps[i], snaps[i - 1]);

  // The returned pair is the last snapshot: same parameters, same val L1.
  const EpochRecord* last = nullptr;
  for (const auto& e : result.history.epochs) {
    if (e.snapshot) last = &e;
    EXPECT_LE(e.best_val_l1, e.val_l1);
  }
  ASSERT_NE(last, nullptr);
  EXPECT_EQ(result.params.sigmas(), last->sigmas);
  EXPECT_EQ(result.params.alphas(), last->alphas);
  EXPECT_EQ(evaluate_l1(result.model, data.val, c.prediction_rule), snaps.back());
}

TEST(TrainSav, DisabledAdaptationKeepsSigmaConstant) {
  const auto data = two_regimes(3);
  TrainConfig c = quick_config();
  c.stage_lr = 0.0;
  c.sigma_grid = {2.0};
  c.loss = LossMode::kl;
  const auto params0 = StageParams::from_values(std::vector<double>{2.0, 2.0}, std::vector<double>{0.5, 0.5});
  for (auto mode : {AdaptationMode::grid, AdaptationMode::gradient}) {
    c.adaptation_mode = mode;
    const auto result = train_sav(data.train, data.val, data.partition,
                                  init_model({16, 8, 101}, Activation::relu, 1, kAges), params0, c);
    for (const auto& e : result.history.epochs) {
      for (double s : e.sigmas) EXPECT_NEAR(s, 2.0, 1e-12);
    }
  }
}

TEST(TrainSav, AlphaNearOneDegeneratesToKlPlusMse) {
  const auto data = two_regimes(4);
  const auto model = init_model({16, 8, 101}, Activation::tanh, 4, kAges);
  const double a = 1.0 - 1e-9;
  const auto params = StageParams::from_values(std::vector<double>{1.5, 3.0}, std::vector<double>{a, a});
  for (std::size_t start = 0; start + 8 <= data.train.size(); start += 8) {
    const std::span<const Sample> batch(data.train.samples().data() + start, 8);
    const auto loss = batch_loss(model, batch, params, data.partition, LossMode::saw);
    const double reference = loss.kl + kMseWeight * loss.mse;
    EXPECT_LE(std::abs(loss.total - reference) / reference, 1e-6);
  }
}

TEST(TrainSav, DeterministicHistory) {
  const auto data = two_regimes(5);
  TrainConfig c = quick_config();
  auto run = [&] {
    return train_sav(data.train, data.val, data.partition,
                     init_model({16, 8, 101}, Activation::relu, 9, kAges), StageParams::initial(2), c);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.history.to_csv(), b.history.to_csv());
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.params, b.params);
}

TEST(TrainSav, DivergenceCarriesHistory) {
  const auto data = two_regimes(6);
  TrainConfig c = quick_config();
  c.learning_rate = 1e200;
  c.momentum = 0.0;
  try {
    train_sav(data.train, data.val, data.partition,
              init_model({16, 8, 101}, Activation::relu, 1, kAges), StageParams::initial(2), c);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_EQ(e.kind(), ErrorKind::training_diverged);
    EXPECT_FALSE(e.history().epochs.empty());
  }
}

TEST(TrainSav, RejectsBadInputs) {
  const auto data = two_regimes(7);
  const auto model = init_model({16, 8, 101}, Activation::relu, 1, kAges);
  TrainConfig c = quick_config();
  EXPECT_EQ(kind_of([&] {
              train_sav(Dataset(kAges, 16), data.val, data.partition, model, StageParams::initial(2), c);
            }),
            ErrorKind::empty_input);
  EXPECT_EQ(kind_of([&] {
              train_sav(data.train, Dataset(kAges, 16), data.partition, model, StageParams::initial(2), c);
            }),
            ErrorKind::empty_input);
  EXPECT_EQ(kind_of([&] {
              train_sav(data.train, data.val, data.partition, model, StageParams::initial(3), c);
            }),
            ErrorKind::shape_error);
  c.batch_size = 0;
  EXPECT_EQ(kind_of([&] {
              train_sav(data.train, data.val, data.partition, model, StageParams::initial(2), c);
            }),
            ErrorKind::invalid_parameter);
}

TEST(TrainSav, HighAmbiguityStageLearnsWiderSigma) {
  // Gradient proposals on the planted two-regime set, observed on a fixed seed.
  const auto data = two_regimes(8);
  TrainConfig c = quick_config();
  c.epochs = 40;
  c.adaptation_mode = AdaptationMode::gradient;
  c.loss = LossMode::kl;
  const auto result = train_sav(data.train, data.val, data.partition,
                                init_model({16, 32, 101}, Activation::relu, 8, kAges),
                                StageParams::initial(2), c);
  EXPECT_GT(result.params.sigma(1), result.params.sigma(0));
}

TEST(TrainHistory, CsvLayout) {
  TrainHistory h;
  EpochRecord e;
  e.epoch = 0;
  e.train_loss = {0.5, 0.25, 4.0, 0.415, 0.5};
  e.val_l1 = e.val_mae = e.best_val_l1 = 3.5;
  e.snapshot = true;
  e.sigmas = {1.0, 2.0};
  e.alphas = {0.5, 0.25};
  h.epochs.push_back(e);
  EXPECT_EQ(h.to_csv(),
            "epoch,loss_total,loss_kl,loss_ce,loss_mse,val_l1,val_mae,best_val_l1,snapshot,"
            "sigma_0,sigma_1,alpha_0,alpha_1\n"
            "0,0.415,0.5,0.25,4,3.5,3.5,3.5,1,1,2,0.5,0.25\n");
  EXPECT_EQ(h.snapshot_l1(), std::vector<double>{3.5});
}

TEST(StageParams, RawParameterizationAndJson) {
  const auto p = StageParams::initial(3);
  EXPECT_NEAR(p.sigma(0), kSigmaMin + std::log(2.0), 1e-15);
  EXPECT_EQ(p.alpha(2), 0.5);
  auto q = StageParams::from_values(std::vector<double>{0.7, 2.0, 9.5}, std::vector<double>{0.1, 0.5, 0.95});
  EXPECT_NEAR(q.sigma(2), 9.5, 1e-12);
  EXPECT_NEAR(q.alpha(0), 0.1, 1e-12);
  EXPECT_EQ(StageParams::from_json(nlohmann::json::parse(q.to_json().dump())), q);
  EXPECT_EQ(kind_of([&] { q.set_sigma(0, kSigmaMin); }), ErrorKind::invalid_parameter);
  EXPECT_EQ(kind_of([&] { q.set_alpha(0, 1.0); }), ErrorKind::invalid_parameter);
  q.set_raw_sigma(1, -1e6);
  EXPECT_GE(q.sigma(1), kSigmaMin);
}
