// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 when
// any criterion fails.
//
//   acceptance_test [--threads N] [--only 1,3,6]
//
// --threads 0 uses every hardware thread for the provider ablation.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "adaptaa/adaptive.hpp"
#include "adaptaa/analysis.hpp"
#include "adaptaa/experiments.hpp"
#include "adaptaa/metrics.hpp"
#include "adaptaa/predictor.hpp"
#include "oracles.hpp"
#include "pipeline_check.hpp"

using namespace adaptaa;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// 1. Max-pool aliasing on two 1-D signals and its repair by every blur.
Outcome alias_demo_criterion() {
  const auto rows = alias_demo(7);
  Outcome o;
  o.pass = rows.size() == 6 && rows[0].out_a == "010101" && rows[0].out_b == "111111";
  std::string counts;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) o.pass = o.pass && rows[i].disagreements < rows[0].disagreements;
    counts += (i ? " " : "") + rows[i].provider + "=" + std::to_string(rows[i].disagreements);
  }
  o.detail = "none " + rows[0].out_a + "/" + rows[0].out_b + ", disagreements " + counts;
  return o;
}

// 2. Predicted filters are positive with unit sum for random configurations.
Outcome predictor_criterion() {
  std::size_t bad = 0;
  double worst_sum = 0.0;
  double min_w = 1.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t lo, std::size_t hi) {
      return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    PredictorConfig cfg;
    cfg.k = static_cast<int>(2 * pick(1, 3) + 1);
    cfg.groups = std::size_t{1} << pick(0, 3);
    cfg.in_channels = cfg.groups * pick(1, 2);
    cfg.pad_mode = pick(0, 1) ? PadMode::kReflect : PadMode::kZero;
    Predictor p = Predictor::init(cfg, rng);
    const float scale = std::pow(10.0f, std::uniform_real_distribution<float>(-2, 4)(rng));
    std::uniform_real_distribution<float> u(-1, 1);
    for (auto& v : p.conv.weight.data()) v *= scale;
    for (auto& v : p.conv.bias) v = scale * u(rng);
    for (std::size_t c = 0; c < p.bn.channels(); ++c) {
      p.bn.gamma[c] = 3.0f * u(rng);
      p.bn.beta[c] = u(rng);
      p.bn.running_mean[c] = u(rng);
      p.bn.running_var[c] = 0.1f + std::abs(u(rng));
    }
    const std::size_t n = pick(1, 2), h = pick(1, 9), w = pick(1, 9);
    const Tensor x = oracle::random_tensor(Shape{n, cfg.in_channels, h, w}, rng, -3, 3).cast<float>();
    const BnMode mode = pick(0, 1) ? BnMode::kTrain : BnMode::kInference;
    const FilterField f = predict_filters(x, p, mode);
    worst_sum = std::max(worst_sum, f.max_unit_sum_error());
    min_w = std::min(min_w, double(f.min_weight()));
    bad += !(f.min_weight() > 0.0f && f.max_unit_sum_error() <= 1e-6);
  }
  return {bad == 0, fmt("1000 configs, %.0f failing, max |sum-1| %.2e, min weight %.2e", double(bad),
                        worst_sum, min_w)};
}

// 3. Spatial and grouped filtering against the nested-loop oracle.
Outcome filtering_criterion() {
  std::size_t cases = 0, bad = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 240; ++seed) {
    std::mt19937_64 rng(seed + 5000);
    auto pick = [&](std::size_t lo, std::size_t hi) {
      return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    const std::size_t g = std::size_t{1} << pick(0, 3);
    const std::size_t c = g * pick(1, 8 / g);
    const int k = pick(0, 1) ? 3 : 5;
    const std::size_t n = pick(1, 2), h = pick(1, 9), w = pick(1, 9);
    const Tensor x = oracle::random_tensor(Shape{n, c, h, w}, rng).cast<float>();
    const Tensor f = oracle::random_field(n, g, k, h, w, rng).cast<float>();
    const Tensor64 ref = oracle::grouped_filter(x.cast<double>(), f.cast<double>(), g, k);
    const Tensor y = apply_grouped_adaptive(x, FilterField(g, k, f));
    double err = max_abs_diff(y.cast<double>(), ref);
    if (g == 1) {
      const Tensor s = apply_spatial_adaptive(x, FilterField(1, k, f));
      err = std::max(err, max_abs_diff(s.cast<double>(), ref));
      bad += s != y;  // g = 1 must reduce to the spatial filter exactly
    }
    worst = std::max(worst, err);
    bad += !(err <= 1e-5);
    ++cases;
  }
  return {bad == 0 && cases >= 200,
          fmt("%.0f cases up to 2x8x9x9, %.0f failing, max error %.2e", double(cases), double(bad),
              worst)};
}

// 4. Central-difference gradient check of the full pipeline in double.
Outcome gradcheck_criterion() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = oracle::pipeline_check(seed, 2, 4, 5, seed % 2 ? 2 : 4, seed % 3 ? 3 : 5);
    worst = std::max(worst, r.max_rel_error());
  }
  return {worst < 1e-3, fmt("20 seeds, h = %.0e, max relative error %.2e", oracle::kStep, worst)};
}

Mask rect_mask(std::size_t h, std::size_t w, Rect r) {
  Mask m(h, w);
  for (std::size_t i = r.y; i < r.y + r.h; ++i) {
    for (std::size_t j = r.x; j < r.x + r.w; ++j) m.set(i, j, true);
  }
  return m;
}

// 5. Consistency metrics on constructed cases.
Outcome metrics_criterion() {
  std::mt19937_64 rng(1);
  LabelMap a(10, 10);
  for (auto i = 0u; i < 10; ++i) {
    for (auto j = 0u; j < 10; ++j) a(i, j) = static_cast<std::int32_t>(rng() % 5);
  }
  LabelMap b = a;
  for (auto i = 0u; i < 5; ++i) {
    for (auto j = 0u; j < 5; ++j) b(i, j) = a(i, j) + 1;
  }
  const std::vector<int> preds{0, 3, 1, 1, 2};
  const Mask m1 = rect_mask(20, 20, {0, 0, 4, 5});
  Mask m1c = m1;
  m1c.set(0, 5, true);  // IoU 20/21
  const Mask m2 = rect_mask(20, 20, {10, 10, 5, 5});
  const InstanceSet sb{{m1, 1, 0.9}, {m2, 1, 0.8}};
  const InstanceSet sc{{m1c, 1, 0.7}};

  const double cls_same = classification_consistency(preds, preds);
  const double sem_same = massc({{{a, a}}}).value;
  const double inst_same = maisc({{sb, sb}}).value;
  const double inst_half = maisc({{sb, sc}}, {0.9, true}).value;
  const double sem_quarter = massc({{{a, b}}}).value;
  const bool pass = cls_same == 1.0 && sem_same == 1.0 && inst_same == 1.0 && inst_half == 0.5 &&
                    sem_quarter == 0.75;
  return {pass, fmt("identical inputs %.2f/%.2f/%.2f, ", cls_same, sem_same, inst_same) +
                    fmt("mAISC two-instance %.4f, mASSC 25/100 %.4f", inst_half, sem_quarter)};
}

// 6. Median consistency over five seeds orders the providers.
Outcome ordering_criterion(std::size_t threads) {
  const SyntheticTask task;
  AblationSpec spec;
  for (const char* p : {"none", "gaussian", "spatial", "grouped-g8"}) {
    spec.providers.push_back(ProviderSpec::parse(p));
  }
  spec.seeds = {1, 2, 3, 4, 5};
  const auto reports = run_ablation(task, spec, threads);
  std::vector<double> med;
  std::string detail;
  for (const auto& r : reports) {
    med.push_back(median_metric(r, "consistency"));
    detail += r.title() + fmt("=%.4f ", med.back());
  }
  bool pass = true;
  detail += "gaps";
  for (std::size_t i = 1; i < med.size(); ++i) {
    pass = pass && med[i - 1] <= med[i];
    detail += fmt(" %+.4f", med[i] - med[i - 1]);
  }
  return {pass, detail};
}

// 7. A zeroed predictor reproduces the box blur through evaluation.
Outcome zeroed_predictor_criterion() {
  SyntheticTask task;
  task.test_size = 256;
  const Dataset data = make_dataset(task);
  double worst = 0.0;
  bool pass = true;
  for (auto kind : {BlurKind::kImageAdaptive, BlurKind::kSpatialAdaptive,
                    BlurKind::kSpatialChannelAdaptive}) {
    ModelConfig mc;
    mc.classes = task.classes;
    mc.blur = kind;
    auto adaptive = ToyClassifier::init(mc, 1);
    adaptive.zero_predictors();
    mc.blur = BlurKind::kBox;
    auto box = ToyClassifier::init(mc, 1);
    const EvalResult ea = evaluate(adaptive, task, data.test);
    const EvalResult eb = evaluate(box, task, data.test);
    std::vector<double> diffs{std::abs(ea.accuracy - eb.accuracy),
                              std::abs(ea.consistency - eb.consistency)};
    for (std::size_t c = 0; c < task.classes; ++c) {
      diffs.push_back(std::abs(ea.shift1_consistency[c] - eb.shift1_consistency[c]));
    }
    for (double d : diffs) {
      worst = std::max(worst, d);
      pass = pass && d <= 1e-5;
    }
  }
  return {pass, fmt("image/spatial/grouped-g8 vs box, max metric difference %.2e", worst)};
}

// 8. Filter variance bounds and extreme fields.
Outcome variance_criterion() {
  bool pass = true;
  double worst_uniform = 0.0, worst_identity = 0.0;
  for (int k : {3, 5, 7}) {
    const double bound = VarianceMap::max_variance(k);
    pass = pass && std::abs(bound - double(k * k - 1) / std::pow(k, 4)) < 1e-15;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(seed);
      const auto m = filter_variance(
          FilterField(2, k, oracle::random_field(2, 2, k, 6, 5, rng).cast<float>()));
      for (double v : m.values.data()) pass = pass && v >= 0.0 && v <= bound;
    }
    const auto uniform = filter_variance(FilterField::uniform(1, 2, k, 4, 4));
    for (double v : uniform.values.data()) {
      worst_uniform = std::max(worst_uniform, std::abs(v));
    }
  }
  const auto identity = filter_variance(FilterField::identity(1, 2, 3, 4, 4));
  for (double v : identity.values.data()) {
    worst_identity = std::max(worst_identity, std::abs(v - 8.0 / 81.0));
  }
  pass = pass && worst_uniform < 1e-12 && worst_identity < 1e-7;
  return {pass, fmt("uniform max %.1e, identity off 8/81 by %.1e", worst_uniform, worst_identity)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::size_t threads = 1;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--threads" && i + 1 < argc) {
      threads = std::strtoul(argv[++i], nullptr, 10);
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::atoi(tok.c_str()));
    } else {
      std::fprintf(stderr, "usage: %s [--threads N] [--only 1,2,...]\n", argv[0]);
      return 2;
    }
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

  const std::vector<Criterion> criteria{
      {1, "alias-demo", 1.0, alias_demo_criterion},
      {2, "predictor-normalisation", 30.0, predictor_criterion},
      {3, "filtering-vs-oracle", 60.0, filtering_criterion},
      {4, "pipeline-gradcheck", 300.0, gradcheck_criterion},
      {5, "metric-cases", 10.0, metrics_criterion},
      {6, "provider-ordering", 1800.0, [threads] { return ordering_criterion(threads); }},
      {7, "zeroed-predictor-is-box", 60.0, zeroed_predictor_criterion},
      {8, "variance-bounds", 10.0, variance_criterion},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs <= c.limit_s;
    failures += !pass;
    std::printf("%s %d %s: %s [%.2f s, limit %.0f s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.limit_s);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
