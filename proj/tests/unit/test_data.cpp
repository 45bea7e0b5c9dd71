#include "saldl/data.hpp"
#include "saldl/error.hpp"
#include "saldl/eval.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <string>

using namespace saldl;

namespace {

template <typename F>
ErrorKind kind_of(F&& f, std::string* message = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  ADD_FAILURE() << "expected saldl::Error";
  return ErrorKind::io_error;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

AmbiguityProfile two_regimes(double low, double high) {
  AmbiguityProfile p;
  p.boundaries = {0, 50};
  p.levels = {low, high};
  return p;
}

double mean_adjacent_cosine(const std::vector<std::vector<double>>& protos, int first, int last) {
  double total = 0.0;
  for (int i = first; i < last; ++i) total += cosine(protos[i], protos[i + 1]);
  return total / (last - first);
}

Dataset tiny_dataset() {
  Dataset d(LabelSupport(0, 100), 2);
  d.add({{0.1, -2.5}, 3, "first"});
  d.add({{1.0 / 3.0, 1e-300}, 100, "second"});
  d.add({{-0.0, 12345.678901234567}, 0, "third"});
  return d;
}

}  // namespace

TEST(Prototypes, UnitNorm) {
  for (const auto& v : prototype_curve(two_regimes(1.0, 4.0))) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    EXPECT_NEAR(norm, 1.0, 1e-12);
  }
}

TEST(Prototypes, HugeLevelCollapsesStage) {
  const auto protos = prototype_curve(two_regimes(1.0, 1e6));
  double total = 0.0;
  int pairs = 0;
  for (int i = 50; i <= 100; ++i) {
    for (int j = i + 1; j <= 100; ++j) {
      total += cosine(protos[i], protos[j]);
      ++pairs;
    }
  }
  EXPECT_GT(total / pairs, 0.99);
}

TEST(Prototypes, MonotoneInAmbiguityLevel) {
  double previous = -1.0;
  for (double level : {0.5, 1.0, 2.0, 4.0, 8.0, 32.0}) {
    const double c = mean_adjacent_cosine(prototype_curve(two_regimes(1.0, level)), 50, 100);
    EXPECT_GE(c, previous) << "level " << level;
    previous = c;
  }
}

TEST(Prototypes, HighAmbiguityStageGivesFlatterAnchorCurve) {
  // Stage 0 highly ambiguous, stage 1 clear; one noiseless sample per label.
  AmbiguityProfile profile = two_regimes(8.0, 1.0);
  profile.noise = 0.0;
  const Dataset data = generate_synthetic(profile, 1, 0);
  std::vector<std::vector<double>> embs;
  for (const auto& s : data.samples()) embs.push_back(s.features);
  const auto curve = anchor_similarity_curve(embs, data.labels(), 50, profile.support);
  auto variance = [&](int first, int last) {
    double m = 0.0, m2 = 0.0;
    for (int l = first; l <= last; ++l) m += *curve.values[l];
    m /= (last - first + 1);
    for (int l = first; l <= last; ++l) m2 += std::pow(*curve.values[l] - m, 2);
    return m2 / (last - first + 1);
  };
  EXPECT_LT(variance(0, 49), variance(50, 100));
}

TEST(Generator, DeterministicPerSeed) {
  const auto profile = two_regimes(1.0, 8.0);
  EXPECT_EQ(to_csv(generate_synthetic(profile, 3, 42)), to_csv(generate_synthetic(profile, 3, 42)));
  EXPECT_NE(to_csv(generate_synthetic(profile, 3, 42)), to_csv(generate_synthetic(profile, 3, 43)));
  const auto data = generate_synthetic(profile, 3, 42);
  EXPECT_EQ(data.size(), 303u);
  EXPECT_EQ(data.feature_dim(), 16u);
}

TEST(Generator, RejectsInvalidProfiles) {
  EXPECT_EQ(kind_of([] { generate_synthetic(two_regimes(1.0, 0.0), 2, 0); }),
            ErrorKind::invalid_parameter);
  EXPECT_EQ(kind_of([] { generate_synthetic(two_regimes(1.0, 2.0), 0, 0); }),
            ErrorKind::invalid_parameter);
  AmbiguityProfile bad = two_regimes(1.0, 2.0);
  bad.levels.pop_back();
  EXPECT_EQ(kind_of([&] { generate_synthetic(bad, 1, 0); }), ErrorKind::invalid_parameter);
}

TEST(Profile, JsonRoundTripAndStrictKeys) {
  const auto p = two_regimes(1.0, 8.0);
  const auto back = AmbiguityProfile::from_json(p.to_json());
  EXPECT_EQ(back.boundaries, p.boundaries);
  EXPECT_EQ(back.levels, p.levels);
  auto doc = p.to_json();
  doc["colour"] = "blue";
  EXPECT_EQ(kind_of([&] { AmbiguityProfile::from_json(doc); }), ErrorKind::config_error);
}

TEST(Csv, RoundTripIsExact) {
  const Dataset d = tiny_dataset();
  EXPECT_EQ(parse_csv(to_csv(d), d.support()), d);
  const auto dir = oracle::scratch_dir("csv_round_trip");
  save_csv(d, dir / "d.csv");
  EXPECT_EQ(load_csv(dir / "d.csv", d.support()), d);

  const Dataset big = generate_synthetic(two_regimes(1.0, 3.0), 2, 5);
  EXPECT_EQ(parse_csv(to_csv(big), big.support()), big);
}

TEST(Csv, HeaderOnlyLoadsEmptyAndFailsTrainingUse) {
  const Dataset d = parse_csv("id,age,f0,f1\n", LabelSupport(0, 100));
  EXPECT_TRUE(d.empty());
  EXPECT_EQ(d.feature_dim(), 2u);
  EXPECT_EQ(kind_of([&] { d.require_non_empty("training"); }), ErrorKind::empty_input);
}

TEST(Csv, ErrorsNameTheLine) {
  const LabelSupport ages(0, 100);
  std::string message;
  EXPECT_EQ(kind_of([&] { parse_csv("id,age,f0\na,3,0.5\nb,4,zebra\n", ages); }, &message),
            ErrorKind::parse_error);
  EXPECT_NE(message.find("line 3"), std::string::npos) << message;
  EXPECT_EQ(kind_of([&] { parse_csv("id,age,f0\na,300,0.5\n", ages); }, &message),
            ErrorKind::invalid_label);
  EXPECT_NE(message.find("line 2"), std::string::npos) << message;
  EXPECT_EQ(kind_of([&] { parse_csv("id,age,f0\na,3\n", ages); }), ErrorKind::parse_error);
  EXPECT_EQ(kind_of([&] { parse_csv("id,age,f0\na,3.5,1\n", ages); }), ErrorKind::parse_error);
  EXPECT_EQ(kind_of([&] { parse_csv("id,years,f0\n", ages); }), ErrorKind::parse_error);
  EXPECT_EQ(kind_of([&] { parse_csv("id,age,f0\na,3,nan\n", ages); }), ErrorKind::parse_error);
}

TEST(Csv, LoadErrorsCarryPathOnce) {
  const auto dir = oracle::scratch_dir("csv_errors");
  {
    std::ofstream out(dir / "bad.csv");
    out << "id,age,f0\na,3,x\n";
  }
  std::string message;
  EXPECT_EQ(kind_of([&] { load_csv(dir / "bad.csv", LabelSupport(0, 100)); }, &message),
            ErrorKind::parse_error);
  EXPECT_NE(message.find("bad.csv"), std::string::npos);
  EXPECT_EQ(message.find("parse-error"), message.rfind("parse-error")) << message;
  EXPECT_EQ(kind_of([&] { load_csv(dir / "missing.csv", LabelSupport(0, 100)); }),
            ErrorKind::io_error);
}

TEST(Csv, RejectsUnwritableIds) {
  Dataset d(LabelSupport(0, 10), 1);
  d.add({{1.0}, 2, "has,comma"});
  EXPECT_EQ(kind_of([&] { to_csv(d); }), ErrorKind::invalid_input);
}

TEST(Dataset, ValidatesSamples) {
  Dataset d(LabelSupport(0, 10), 2);
  EXPECT_EQ(kind_of([&] { d.add({{1.0}, 2, "x"}); }), ErrorKind::shape_error);
  EXPECT_EQ(kind_of([&] { d.add({{1.0, 2.0}, 11, "x"}); }), ErrorKind::invalid_label);
}

TEST(Split, SizesFollowFractions) {
  Dataset d(LabelSupport(0, 100), 1);
  for (int i = 0; i < 100; ++i) d.add({{double(i)}, i % 10, "s" + std::to_string(i)});
  const auto parts = split(d, {0.8, 0.1, 0.1}, 7);
  EXPECT_EQ(parts.train.size(), 80u);
  EXPECT_EQ(parts.val.size(), 10u);
  EXPECT_EQ(parts.test.size(), 10u);
}

TEST(Split, PartitionDisjointAndDeterministic) {
  const Dataset d = generate_synthetic(two_regimes(1.0, 8.0), 5, 1);
  const auto a = split(d, {0.6, 0.2, 0.2}, 99);
  const auto b = split(d, {0.6, 0.2, 0.2}, 99);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);

  std::multiset<std::string> ids;
  for (const Dataset* part : {&a.train, &a.val, &a.test}) {
    for (const auto& s : part->samples()) ids.insert(s.id);
  }
  EXPECT_EQ(ids.size(), d.size());
  EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), d.size());

  // Every label has five samples, so every label reaches train.
  std::set<int> train_labels;
  for (int l : a.train.labels()) train_labels.insert(l);
  EXPECT_EQ(train_labels.size(), 101u);
}

TEST(Split, EveryFrequentLabelReachesTrainEvenWhenTrainIsSmall) {
  const Dataset d = generate_synthetic(two_regimes(1.0, 8.0), 4, 3);
  const auto parts = split(d, {0.25, 0.25, 0.5}, 4);
  std::set<int> train_labels;
  for (int l : parts.train.labels()) train_labels.insert(l);
  EXPECT_EQ(train_labels.size(), 101u);
}

TEST(Split, RejectsDegenerateFractions) {
  Dataset d(LabelSupport(0, 100), 1);
  for (int i = 0; i < 20; ++i) d.add({{double(i)}, i, "s" + std::to_string(i)});
  EXPECT_EQ(kind_of([&] { split(d, {1.0, 0.0, 0.0}, 0); }), ErrorKind::invalid_parameter);
  EXPECT_EQ(kind_of([&] { split(d, {0.5, 0.3, 0.3}, 0); }), ErrorKind::invalid_parameter);
  EXPECT_EQ(kind_of([&] { split(d, {0.98, 0.01, 0.01}, 0); }), ErrorKind::stratification_error);
  Dataset two(LabelSupport(0, 100), 1);
  two.add({{0.0}, 1, "a"});
  two.add({{0.0}, 2, "b"});
  EXPECT_EQ(kind_of([&] { split(two, {0.4, 0.3, 0.3}, 0); }), ErrorKind::stratification_error);
}
