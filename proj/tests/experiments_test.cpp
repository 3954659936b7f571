#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "adaptaa/experiments.hpp"
#include "oracles.hpp"

namespace adaptaa {
namespace {

SyntheticTask tiny_task() {
  SyntheticTask t;
  t.canvas = 16;
  t.train_size = 64;
  t.test_size = 16;
  t.min_patch = 6;
  t.max_patch = 10;
  return t;
}

AblationSpec tiny_spec() {
  AblationSpec s;
  s.providers = {ProviderSpec::parse("none"), ProviderSpec::parse("box"),
                 ProviderSpec::parse("grouped-g2")};
  s.sweep_groups = {1, 2, 4};
  s.seeds = {1, 2};
  s.model.width = 4;
  s.model.stages = 2;
  s.train.epochs = 1;
  s.train.batch_size = 16;
  return s;
}

TEST(Synthetic, DeterministicAndInRange) {
  const SyntheticTask t = tiny_task();
  for (int label = 0; label < kPatternClassCount; ++label) {
    const Tensor a = render_pattern(t, label, 11);
    EXPECT_EQ(a, render_pattern(t, label, 11));
    EXPECT_NE(a, render_pattern(t, label, 12));
    for (float v : a.data()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
  const auto split = make_split(t, 32, 1);
  std::vector<int> counts(kPatternClassCount, 0);
  for (const auto& s : split) ++counts[s.label];
  for (int c : counts) EXPECT_EQ(c, 8);
}

TEST(Synthetic, TranslateReflectMatchesMirrorOracle) {
  std::mt19937_64 rng(2);
  const Tensor x = oracle::random_tensor(Shape{1, 2, 5, 7}, rng).cast<float>();
  for (int dy = -3; dy <= 3; ++dy) {
    for (int dx = -3; dx <= 3; ++dx) {
      const Tensor y = translate_reflect(x, dy, dx);
      for (std::size_t c = 0; c < 2; ++c) {
        for (int i = 0; i < 5; ++i) {
          for (int j = 0; j < 7; ++j) {
            ASSERT_EQ(y(0, c, i, j),
                      x(0, c, oracle::mirror(i - dy, 5), oracle::mirror(j - dx, 7)));
          }
        }
      }
    }
  }
  EXPECT_EQ(translate_reflect(x, 0, 0), x);
}

TEST(AliasDemo, BlurReducesDisagreements) {
  const auto rows = alias_demo(7);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].provider, "none");
  EXPECT_EQ(rows[0].out_a, "010101");
  EXPECT_EQ(rows[0].out_b, "111111");
  EXPECT_EQ(rows[0].disagreements, 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i].disagreements, rows[0].disagreements) << rows[i].provider;
  }
}

TEST(ToyClassifier, ZeroedPredictorMatchesBoxEndToEnd) {
  const SyntheticTask task = tiny_task();
  const Dataset data = make_dataset(task);
  for (auto kind : {BlurKind::kSpatialAdaptive, BlurKind::kSpatialChannelAdaptive}) {
    ModelConfig mc;
    mc.width = 4;
    mc.groups = 2;
    mc.blur = kind;
    auto adaptive = ToyClassifier::init(mc, 3);
    adaptive.zero_predictors();
    mc.blur = BlurKind::kBox;
    auto box = ToyClassifier::init(mc, 3);
    std::vector<const Tensor*> imgs;
    for (const auto& s : data.test) imgs.push_back(&s.image);
    const Tensor x = stack_images(imgs);
    EXPECT_LT(max_abs_diff(adaptive.logits(x), box.logits(x)), 1e-5);
    const EvalResult ea = evaluate(adaptive, task, data.test);
    const EvalResult eb = evaluate(box, task, data.test);
    EXPECT_EQ(ea.accuracy, eb.accuracy);
    EXPECT_EQ(ea.consistency, eb.consistency);
    EXPECT_EQ(ea.shift1_consistency, eb.shift1_consistency);
  }
}

TEST(ToyClassifier, GaussianInitStartsAtFixedGaussian) {
  const SyntheticTask task = tiny_task();
  ModelConfig mc;
  mc.width = 4;
  mc.groups = 2;
  EXPECT_EQ(mc.predictor_init, PredictorInit::kGaussian);
  for (auto kind : {BlurKind::kImageAdaptive, BlurKind::kSpatialAdaptive,
                    BlurKind::kSpatialChannelAdaptive}) {
    mc.blur = kind;
    auto adaptive = ToyClassifier::init(mc, 3);
    // With a silent conv the logits reduce to the batchnorm shift.
    for (auto& p : adaptive.params()) {
      if (p.name.find(".predictor.conv.") != std::string::npos) p.value.fill(0.0f);
    }
    mc.blur = BlurKind::kGaussian;
    auto gaussian = ToyClassifier::init(mc, 3);
    const Tensor x = render_pattern(task, 2, 9);
    EXPECT_LT(max_abs_diff(adaptive.logits(x), gaussian.logits(x)), 1e-5);
  }
  mc.predictor_init = PredictorInit::kUniform;
  mc.blur = BlurKind::kSpatialAdaptive;
  EXPECT_EQ(ToyClassifier::init(mc, 3).param("stage0.predictor.bn.beta").data()[0], 0.0f);
  EXPECT_EQ(parse_model_config(model_config_text(mc)).predictor_init, PredictorInit::kUniform);
  EXPECT_THROW(parse_predictor_init("box"), std::invalid_argument);
}

TEST(ToyClassifier, SaveLoadPreservesLogits) {
  ModelConfig mc;
  mc.width = 4;
  mc.stages = 2;
  mc.blur = BlurKind::kSpatialChannelAdaptive;
  mc.groups = 2;
  auto model = ToyClassifier::init(mc, 5);
  const SyntheticTask task = tiny_task();
  train_model(model, make_dataset(task), TrainOptions{.epochs = 1, .batch_size = 16}, 5);
  const auto dir = std::filesystem::temp_directory_path() / "adaptaa_model_ck";
  std::filesystem::remove_all(dir);
  model.save(dir);
  auto back = ToyClassifier::load(dir);
  EXPECT_EQ(back.config().groups, 2u);
  EXPECT_EQ(back.parameter_count(), model.parameter_count());
  const Tensor x = render_pattern(task, 1, 3);
  EXPECT_EQ(back.logits(x), model.logits(x));
  std::filesystem::remove_all(dir);
}

TEST(Training, LossDecreasesForAdaptiveClassifier) {
  const SyntheticTask task = tiny_task();
  const Dataset data = make_dataset(task);
  ModelConfig mc;
  mc.width = 8;
  mc.stages = 2;
  mc.blur = BlurKind::kSpatialAdaptive;
  auto model = ToyClassifier::init(mc, 1);
  TrainOptions opts;
  opts.epochs = 1;
  opts.batch_size = 16;
  opts.schedule = LrSchedule::kConstant;
  std::vector<float> losses;
  for (std::uint64_t e = 0; e < 5; ++e) {
    const TrainResult r = train_model(model, data, opts, e);
    ASSERT_FALSE(r.diverged);
    losses.push_back(r.final_loss);
  }
  EXPECT_LT(losses.back(), losses.front());
}

TEST(Ablation, ProviderOrderAndThreadIndependence) {
  const SyntheticTask task = tiny_task();
  const AblationSpec spec = tiny_spec();
  const auto one = run_ablation(task, spec, 1);
  const auto two = run_ablation(task, spec, 2);
  ASSERT_EQ(one.size(), 3u);
  EXPECT_EQ(one[0].title(), "none");
  EXPECT_EQ(one[1].title(), "box");
  EXPECT_EQ(one[2].title(), "grouped-g2");
  for (std::size_t p = 0; p < 3; ++p) {
    ASSERT_EQ(one[p].entries().size(), two[p].entries().size());
    for (std::size_t i = 0; i < one[p].entries().size(); ++i) {
      EXPECT_EQ(one[p].entries()[i], two[p].entries()[i]);
    }
    EXPECT_EQ(one[p].entries()[0].metric, "top1_accuracy");
    EXPECT_EQ(one[p].entries()[0].seed, 1u);
  }
}

TEST(Ablation, GroupSweepCsv) {
  AblationSpec spec = tiny_spec();
  spec.sweep_groups = {1, 4};
  spec.seeds = {1};
  const auto pts = run_group_sweep(tiny_task(), spec, 1);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[1].groups, 4u);
  const std::string csv = sweep_csv(pts);
  EXPECT_EQ(csv.substr(0, 34), "groups,seed,accuracy,consistency\n1");
  spec.sweep_groups = {3};
  EXPECT_THROW(run_group_sweep(tiny_task(), spec, 1), ShapeError);
}

TEST(Config, TaskAndAblationKeys) {
  auto cfg = KeyValueConfig::parse(
      "canvas = 24\nnoise = 0.1\nproviders = none, grouped-g4\nseeds = 3, 9\nepochs = 2\n"
      "schedule = step\nwidth = 32\n");
  const SyntheticTask t = task_from_config(cfg);
  EXPECT_EQ(t.canvas, 24u);
  EXPECT_EQ(t.noise, 0.1);
  EXPECT_EQ(t.train_size, SyntheticTask{}.train_size);
  const AblationSpec s = AblationSpec::from_config(cfg);
  ASSERT_EQ(s.providers.size(), 2u);
  EXPECT_EQ(s.providers[1].kind, BlurKind::kSpatialChannelAdaptive);
  EXPECT_EQ(s.providers[1].groups, 4u);
  EXPECT_EQ(s.seeds, (std::vector<std::uint64_t>{3, 9}));
  EXPECT_EQ(s.train.schedule, LrSchedule::kStep);
  EXPECT_NO_THROW(cfg.check_all_used());

  auto typo = KeyValueConfig::parse("epochz = 2\n");
  AblationSpec::from_config(typo);
  task_from_config(typo);
  EXPECT_THROW(typo.check_all_used(), std::invalid_argument);

  EXPECT_THROW(ProviderSpec::parse("spatial-g2"), std::invalid_argument);
  EXPECT_THROW(AblationSpec::from_config(KeyValueConfig::parse("providers = none\n")),
               std::invalid_argument);
  EXPECT_THROW(AblationSpec::from_config(KeyValueConfig::parse("seeds = -1\n")),
               std::invalid_argument);
  EXPECT_THROW(task_from_config(KeyValueConfig::parse("canvas = -4\n")), std::invalid_argument);
  const SyntheticTask round = task_from_config(KeyValueConfig::parse(task_config_text(t)));
  EXPECT_EQ(task_config_text(round), task_config_text(t));
}

TEST(Config, LrSchedules) {
  TrainOptions o;
  o.lr = 1.0;
  EXPECT_DOUBLE_EQ(o.lr_at(0, 100), 1.0);
  EXPECT_NEAR(o.lr_at(50, 100), 0.5, 1e-12);
  o.schedule = LrSchedule::kStep;
  EXPECT_DOUBLE_EQ(o.lr_at(60, 100), 0.1);
  EXPECT_DOUBLE_EQ(o.lr_at(80, 100), 0.01);
  EXPECT_EQ(parse_lr_schedule(lr_schedule_name(LrSchedule::kConstant)), LrSchedule::kConstant);
}

TEST(Median, IgnoresNonFinite) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(median({3.0, nan, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0}), 2.5);
  EXPECT_TRUE(std::isnan(median({nan})));
  MetricReport r("x");
  r.add("consistency", 0.5, 1);
  r.add("consistency", nan, 2);
  r.add("consistency", 0.9, 3);
  r.add("accuracy", 0.1, 1);
  EXPECT_DOUBLE_EQ(median_metric(r, "consistency"), 0.7);
}

}  // namespace
}  // namespace adaptaa
