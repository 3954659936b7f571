#include "adaptaa/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "adaptaa/metrics.hpp"

namespace adaptaa {

namespace {

constexpr std::uint64_t kTrainSalt = 0x7472;
constexpr std::uint64_t kTestSalt = 0x7465;
constexpr std::size_t kEvalBatch = 64;

std::vector<int> predict_all(ToyClassifier& model, const std::vector<Tensor>& images) {
  std::vector<int> out;
  out.reserve(images.size());
  for (std::size_t b = 0; b < images.size(); b += kEvalBatch) {
    std::vector<const Tensor*> batch;
    for (std::size_t i = b; i < std::min(images.size(), b + kEvalBatch); ++i) {
      batch.push_back(&images[i]);
    }
    const auto pred = model.predict(stack_images(batch));
    out.insert(out.end(), pred.begin(), pred.end());
  }
  return out;
}

// Runs job(i) for i in [0, count) on up to `threads` workers.
template <typename Job>
void parallel_for(std::size_t count, std::size_t threads, Job job) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < count; i = next++) job(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <typename T>
std::vector<T> parse_unsigned_list(const std::vector<std::string>& items, const char* what) {
  std::vector<T> out;
  for (const auto& s : items) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || s[0] == '-') {
      throw std::invalid_argument(std::string(what) + ": '" + s + "' is not a non-negative integer");
    }
    out.push_back(static_cast<T>(v));
  }
  return out;
}

}  // namespace

LrSchedule parse_lr_schedule(const std::string& s) {
  if (s == "constant") return LrSchedule::kConstant;
  if (s == "cosine") return LrSchedule::kCosine;
  if (s == "step") return LrSchedule::kStep;
  throw std::invalid_argument("unknown lr schedule '" + s + "' (constant, cosine, step)");
}

std::string lr_schedule_name(LrSchedule s) {
  switch (s) {
    case LrSchedule::kConstant: return "constant";
    case LrSchedule::kCosine: return "cosine";
    case LrSchedule::kStep: return "step";
  }
  return "constant";
}

double TrainOptions::lr_at(std::size_t step, std::size_t total_steps) const {
  if (total_steps == 0) return lr;
  const double t = double(step) / double(total_steps);
  switch (schedule) {
    case LrSchedule::kConstant: return lr;
    case LrSchedule::kCosine: return 0.5 * lr * (1.0 + std::cos(std::numbers::pi * t));
    case LrSchedule::kStep: return t < 0.5 ? lr : t < 0.75 ? 0.1 * lr : 0.01 * lr;
  }
  return lr;
}

SyntheticTask task_from_config(const KeyValueConfig& cfg, const SyntheticTask& base) {
  SyntheticTask t = base;
  auto size = [&](const char* key, std::size_t fallback) {
    const auto v = cfg.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw std::invalid_argument(std::string(key) + " must be non-negative");
    return static_cast<std::size_t>(v);
  };
  t.seed = static_cast<std::uint64_t>(cfg.get_int("task_seed", static_cast<std::int64_t>(t.seed)));
  t.canvas = size("canvas", t.canvas);
  t.classes = size("classes", t.classes);
  t.max_shift = static_cast<int>(cfg.get_int("max_shift", t.max_shift));
  t.train_size = size("train_size", t.train_size);
  t.test_size = size("test_size", t.test_size);
  t.min_patch = size("min_patch", t.min_patch);
  t.max_patch = size("max_patch", t.max_patch);
  t.min_contrast = cfg.get_double("min_contrast", t.min_contrast);
  t.max_contrast = cfg.get_double("max_contrast", t.max_contrast);
  t.noise = cfg.get_double("noise", t.noise);
  t.impulse_density = cfg.get_double("impulse_density", t.impulse_density);
  t.validate();
  return t;
}

std::string task_config_text(const SyntheticTask& t) {
  std::ostringstream os;
  os.precision(17);
  os << "task_seed = " << t.seed << '\n'
     << "canvas = " << t.canvas << '\n'
     << "classes = " << t.classes << '\n'
     << "max_shift = " << t.max_shift << '\n'
     << "train_size = " << t.train_size << '\n'
     << "test_size = " << t.test_size << '\n'
     << "min_patch = " << t.min_patch << '\n'
     << "max_patch = " << t.max_patch << '\n'
     << "min_contrast = " << t.min_contrast << '\n'
     << "max_contrast = " << t.max_contrast << '\n'
     << "noise = " << t.noise << '\n'
     << "impulse_density = " << t.impulse_density << '\n';
  return os.str();
}

Dataset make_dataset(const SyntheticTask& task) {
  task.validate();
  return {make_split(task, task.train_size, kTrainSalt), make_split(task, task.test_size, kTestSalt)};
}

TrainResult train_model(ToyClassifier& model, const Dataset& data, const TrainOptions& opts,
                        std::uint64_t seed) {
  if (opts.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (data.train.empty()) throw std::invalid_argument("empty training split");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<int> shift(-opts.train_shift, opts.train_shift);
  Sgd opt(SgdOptions{opts.lr, opts.momentum, opts.weight_decay});

  const std::size_t n = data.train.size();
  const std::size_t per_epoch = (n + opts.batch_size - 1) / opts.batch_size;
  const std::size_t total = per_epoch * opts.epochs;
  std::vector<std::size_t> order(n);
  TrainResult res;
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < n; b += opts.batch_size) {
      std::vector<Tensor> images;
      std::vector<int> labels;
      for (std::size_t i = b; i < std::min(n, b + opts.batch_size); ++i) {
        const auto& s = data.train[order[i]];
        if (opts.train_shift > 0) {
          const int dy = shift(rng);
          const int dx = shift(rng);
          images.push_back(translate_reflect(s.image, dy, dx));
        } else {
          images.push_back(s.image);
        }
        labels.push_back(s.label);
      }
      std::vector<const Tensor*> ptrs;
      for (const auto& im : images) ptrs.push_back(&im);
      opt.set_lr(opts.lr_at(res.steps, total));
      const float loss = model.train_step(stack_images(ptrs), labels, opt);
      ++res.steps;
      if (!std::isfinite(loss)) {
        res.diverged = true;
        res.final_loss = loss;
        return res;
      }
      loss_sum += loss;
    }
    res.final_loss = static_cast<float>(loss_sum / double(per_epoch));
  }
  return res;
}

EvalResult evaluate(ToyClassifier& model, const SyntheticTask& task,
                    const std::vector<Sample>& test) {
  if (test.empty()) throw std::invalid_argument("empty test split");
  EvalResult res;
  std::mt19937_64 rng(task.seed ^ 0xe7a1ull);
  std::uniform_int_distribution<int> shift(-task.max_shift, task.max_shift);

  std::vector<Tensor> plain, view_a, view_b;
  for (const auto& s : test) {
    plain.push_back(s.image);
    int dy1 = 0, dx1 = 0, dy2 = 0, dx2 = 0;
    do {
      dy1 = shift(rng);
      dx1 = shift(rng);
      dy2 = shift(rng);
      dx2 = shift(rng);
    } while (task.max_shift > 0 && dy1 == dy2 && dx1 == dx2);
    view_a.push_back(translate_reflect(s.image, dy1, dx1));
    view_b.push_back(translate_reflect(s.image, dy2, dx2));
  }
  const auto pred = predict_all(model, plain);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) correct += pred[i] == test[i].label;
  res.accuracy = double(correct) / double(test.size());
  const auto pa = predict_all(model, view_a);
  const auto pb = predict_all(model, view_b);
  res.consistency = classification_consistency(pa, pb);
  res.pairs = pa.size();

  static constexpr int kUnit[4][2] = {{0, 1}, {0, -1}, {1, 0}, {-1, 0}};
  std::vector<std::size_t> agree(task.classes, 0);
  res.shift1_pairs.assign(task.classes, 0);
  for (const auto& d : kUnit) {
    std::vector<Tensor> shifted;
    for (const auto& s : test) shifted.push_back(translate_reflect(s.image, d[0], d[1]));
    const auto ps = predict_all(model, shifted);
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto c = static_cast<std::size_t>(test[i].label);
      agree[c] += ps[i] == pred[i];
      ++res.shift1_pairs[c];
    }
  }
  res.shift1_consistency.resize(task.classes);
  for (std::size_t c = 0; c < task.classes; ++c) {
    res.shift1_consistency[c] = res.shift1_pairs[c] == 0
                                    ? std::numeric_limits<double>::quiet_NaN()
                                    : double(agree[c]) / double(res.shift1_pairs[c]);
  }
  return res;
}

std::string ProviderSpec::name() const {
  if (kind == BlurKind::kSpatialChannelAdaptive) return "grouped-g" + std::to_string(groups);
  return blur_kind_name(kind);
}

ProviderSpec ProviderSpec::parse(const std::string& s) {
  ProviderSpec p;
  const auto dash = s.find("-g");
  if (dash != std::string::npos) {
    p.kind = parse_blur_kind(s.substr(0, dash));
    if (p.kind != BlurKind::kSpatialChannelAdaptive) {
      throw std::invalid_argument("only grouped providers take a -g<count> suffix: " + s);
    }
    p.groups = parse_unsigned_list<std::size_t>({s.substr(dash + 2)}, "provider groups")[0];
  } else {
    p.kind = parse_blur_kind(s);
  }
  return p;
}

void AblationSpec::validate() const {
  if (providers.size() < 2) throw std::invalid_argument("an ablation needs at least two providers");
  if (seeds.empty()) throw std::invalid_argument("an ablation needs at least one seed");
  if (train.epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (train.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(train.lr > 0)) throw std::invalid_argument("lr must be positive");
  if (train.train_shift < 0) throw std::invalid_argument("train_shift must be >= 0");
  for (const auto& p : providers) {
    ModelConfig m = model;
    m.blur = p.kind;
    m.groups = p.groups;
    m.validate();
  }
  for (auto g : sweep_groups) {
    require_groups_divide(model.width, g);
  }
}

AblationSpec AblationSpec::from_config(const KeyValueConfig& cfg) {
  AblationSpec spec;
  for (const auto& s : cfg.get_list("providers", {"none", "gaussian", "spatial", "grouped-g8"})) {
    spec.providers.push_back(ProviderSpec::parse(s));
  }
  spec.sweep_groups =
      parse_unsigned_list<std::size_t>(cfg.get_list("groups", {"1", "2", "4", "8", "16"}), "groups");
  spec.seeds = parse_unsigned_list<std::uint64_t>(
      cfg.get_list("seeds", {"1", "2", "3", "4", "5"}), "seeds");
  auto& t = spec.train;
  t.epochs = static_cast<std::size_t>(cfg.get_int("epochs", static_cast<std::int64_t>(t.epochs)));
  t.batch_size =
      static_cast<std::size_t>(cfg.get_int("batch_size", static_cast<std::int64_t>(t.batch_size)));
  t.lr = cfg.get_double("lr", t.lr);
  t.momentum = cfg.get_double("momentum", t.momentum);
  t.weight_decay = cfg.get_double("weight_decay", t.weight_decay);
  t.schedule = parse_lr_schedule(cfg.get_string("schedule", lr_schedule_name(t.schedule)));
  t.train_shift = static_cast<int>(cfg.get_int("train_shift", t.train_shift));
  auto& m = spec.model;
  m.width = static_cast<std::size_t>(cfg.get_int("width", static_cast<std::int64_t>(m.width)));
  m.k = static_cast<int>(cfg.get_int("k", m.k));
  m.sigma = cfg.get_double("sigma", m.sigma);
  m.predictor_gamma = static_cast<float>(cfg.get_double("predictor_gamma", m.predictor_gamma));
  m.predictor_init = parse_predictor_init(
      cfg.get_string("predictor_init", predictor_init_name(m.predictor_init)));
  spec.validate();
  return spec;
}

RunResult run_single(const SyntheticTask& task, const Dataset& data, const AblationSpec& spec,
                     const ProviderSpec& provider, std::uint64_t seed) {
  ModelConfig mc = spec.model;
  mc.classes = task.classes;
  mc.blur = provider.kind;
  mc.groups = provider.groups;
  auto model = ToyClassifier::init(mc, seed);
  RunResult r;
  r.provider = provider.name();
  r.seed = seed;
  r.parameters = model.parameter_count();
  r.train = train_model(model, data, spec.train, seed);
  if (r.train.diverged) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.eval.accuracy = nan;
    r.eval.consistency = nan;
    r.eval.shift1_consistency.assign(task.classes, nan);
    r.eval.shift1_pairs.assign(task.classes, 0);
  } else {
    r.eval = evaluate(model, task, data.test);
  }
  return r;
}

MetricReport run_report(const RunResult& run, std::size_t classes) {
  MetricReport rep(run.provider);
  const auto seed = run.seed;
  rep.add("top1_accuracy", run.eval.accuracy, seed, run.eval.pairs);
  rep.add("consistency", run.eval.consistency, seed, run.eval.pairs);
  for (std::size_t c = 0; c < classes && c < run.eval.shift1_consistency.size(); ++c) {
    rep.add("shift1_consistency." + pattern_class_name(static_cast<int>(c)),
            run.eval.shift1_consistency[c], seed, run.eval.shift1_pairs[c]);
  }
  rep.add("final_loss", run.train.final_loss, seed);
  rep.add("diverged", run.train.diverged ? 1.0 : 0.0, seed);
  rep.add("parameters", static_cast<double>(run.parameters), seed);
  return rep;
}

std::vector<MetricReport> run_ablation(const SyntheticTask& task, const AblationSpec& spec,
                                       std::size_t threads) {
  spec.validate();
  const Dataset data = make_dataset(task);
  const std::size_t ns = spec.seeds.size();
  std::vector<RunResult> runs(spec.providers.size() * ns);
  parallel_for(runs.size(), threads, [&](std::size_t i) {
    runs[i] = run_single(task, data, spec, spec.providers[i / ns], spec.seeds[i % ns]);
  });
  std::vector<MetricReport> out;
  for (std::size_t p = 0; p < spec.providers.size(); ++p) {
    MetricReport rep(spec.providers[p].name());
    for (std::size_t s = 0; s < ns; ++s) rep.append(run_report(runs[p * ns + s], task.classes));
    out.push_back(std::move(rep));
  }
  return out;
}

std::vector<SweepPoint> run_group_sweep(const SyntheticTask& task, const AblationSpec& spec,
                                        std::size_t threads) {
  if (spec.sweep_groups.empty()) throw std::invalid_argument("group sweep needs group counts");
  if (spec.seeds.empty()) throw std::invalid_argument("group sweep needs at least one seed");
  for (auto g : spec.sweep_groups) require_groups_divide(spec.model.width, g);
  const Dataset data = make_dataset(task);
  const std::size_t ns = spec.seeds.size();
  std::vector<RunResult> runs(spec.sweep_groups.size() * ns);
  parallel_for(runs.size(), threads, [&](std::size_t i) {
    const ProviderSpec p{BlurKind::kSpatialChannelAdaptive, spec.sweep_groups[i / ns]};
    runs[i] = run_single(task, data, spec, p, spec.seeds[i % ns]);
  });
  std::vector<SweepPoint> out;
  for (std::size_t gi = 0; gi < spec.sweep_groups.size(); ++gi) {
    SweepPoint pt;
    pt.groups = spec.sweep_groups[gi];
    std::vector<double> acc, cons;
    for (std::size_t s = 0; s < ns; ++s) {
      pt.runs.push_back(runs[gi * ns + s]);
      acc.push_back(pt.runs.back().eval.accuracy);
      cons.push_back(pt.runs.back().eval.consistency);
    }
    pt.accuracy = median(acc);
    pt.consistency = median(cons);
    out.push_back(std::move(pt));
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream os;
  os.precision(9);
  os << "groups,seed,accuracy,consistency\n";
  for (const auto& pt : points) {
    for (const auto& r : pt.runs) {
      os << pt.groups << ',' << r.seed << ',' << r.eval.accuracy << ',' << r.eval.consistency
         << '\n';
    }
  }
  return os.str();
}

Predictor fit_predictor(const Tensor& x, const Tensor& target, const PredictorConfig& cfg,
                        std::size_t steps, double lr, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  Predictor p = Predictor::init(cfg, rng);
  const std::size_t oc = cfg.out_channels();
  Tensor bias(Shape{1, oc, 1, 1}, 0.0f);
  Tensor gamma(Shape{1, oc, 1, 1}, 1.0f);
  Tensor beta(Shape{1, oc, 1, 1}, 0.0f);
  Sgd opt(SgdOptions{lr, 0.9, 0.0});
  auto run = [&](bool update) {
    ag::Tape<float> tape;
    const ag::Var w = tape.leaf(p.conv.weight);
    const ag::Var b = tape.leaf(bias);
    const ag::Var gm = tape.leaf(gamma);
    const ag::Var bt = tape.leaf(beta);
    ag::Var h = ag::conv2d(tape, tape.constant(x), w, b, 1, cfg.conv_kernel / 2, cfg.pad_mode);
    h = ag::batchnorm_train(tape, h, gm, bt, p.bn);
    h = ag::softmax_slices(tape, h, cfg.taps());
    h = ag::adaptive_filter(tape, tape.constant(x), h, cfg.groups, cfg.k);
    h = ag::subsample(tape, h, 2);
    const ag::Var loss = ag::mean_squared_error(tape, h, target);
    if (!update) return;
    tape.backward(loss);
    const Tensor gw = tape.grad(w), gb = tape.grad(b), gg = tape.grad(gm), gbt = tape.grad(bt);
    Tensor* params[] = {&p.conv.weight, &bias, &gamma, &beta};
    const Tensor* grads[] = {&gw, &gb, &gg, &gbt};
    opt.step(params, grads);
  };
  for (std::size_t i = 0; i < steps; ++i) run(true);
  // One pass with momentum 1 copies the final batch statistics.
  p.bn.momentum = 1.0;
  run(false);
  p.bn.momentum = 0.1;
  p.conv.bias.assign(bias.data().begin(), bias.data().end());
  p.bn.gamma.assign(gamma.data().begin(), gamma.data().end());
  p.bn.beta.assign(beta.data().begin(), beta.data().end());
  return p;
}

BlurProvider make_blur_provider(BlurKind kind, int k, std::size_t groups, double sigma,
                                std::size_t channels, std::uint64_t seed) {
  switch (kind) {
    case BlurKind::kNone: return BlurProvider::none();
    case BlurKind::kGaussian: return BlurProvider::gaussian(k, sigma);
    case BlurKind::kBox: return BlurProvider::box(k);
    default: break;
  }
  PredictorConfig cfg;
  cfg.k = k;
  cfg.in_channels = channels;
  cfg.groups = kind == BlurKind::kSpatialChannelAdaptive ? groups : 1;
  std::mt19937_64 rng(seed);
  return BlurProvider::adaptive(kind, Predictor::init(cfg, rng));
}

std::vector<AliasDemoRow> alias_demo(std::uint64_t seed) {
  const auto row = [](const std::string& bits) {
    Tensor t(Shape{1, 1, 1, bits.size()});
    for (std::size_t i = 0; i < bits.size(); ++i) t[i] = bits[i] == '1' ? 1.0f : 0.0f;
    return t;
  };
  const auto bits_of = [](const Tensor& t) {
    std::string s;
    for (float v : t.data()) s += v >= 0.5f ? '1' : '0';
    return s;
  };
  const Tensor a = row(kAliasSignalA);
  const Tensor b = row(kAliasSignalB);
  const PoolWindow win{1, 2, 1, 2};
  std::vector<AliasDemoRow> rows;
  for (auto kind : {BlurKind::kNone, BlurKind::kGaussian, BlurKind::kBox, BlurKind::kImageAdaptive,
                    BlurKind::kSpatialAdaptive, BlurKind::kSpatialChannelAdaptive}) {
    const BlurProvider p = make_blur_provider(kind, 3, 1, 1.0, 1, seed);
    AliasDemoRow r{p.name(), bits_of(blurred_max_pool(a, p, win)),
                   bits_of(blurred_max_pool(b, p, win)), 0};
    for (std::size_t i = 0; i < r.out_a.size(); ++i) r.disagreements += r.out_a[i] != r.out_b[i];
    rows.push_back(std::move(r));
  }
  return rows;
}

double median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

double median_metric(const MetricReport& report, const std::string& metric) {
  std::vector<double> v;
  for (const auto& e : report.entries()) {
    if (e.metric == metric) v.push_back(e.value);
  }
  return median(std::move(v));
}

}  // namespace adaptaa
