// adaptaa command-line driver: demos, training, evaluation, analysis and
// consistency scoring of external predictions.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "adaptaa/adaptive.hpp"
#include "adaptaa/analysis.hpp"
#include "adaptaa/config.hpp"
#include "adaptaa/experiments.hpp"
#include "adaptaa/image_io.hpp"
#include "adaptaa/metrics.hpp"
#include "adaptaa/model.hpp"
#include "adaptaa/predictor.hpp"
#include "adaptaa/report.hpp"
#include "adaptaa/synthetic.hpp"
#include "adaptaa/t4f.hpp"

namespace fs = std::filesystem;
using namespace adaptaa;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 7;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  fs::path out = "runs";
};

// Thrown for argument combinations CLI11 cannot validate on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- alias-demo -------------------------------------------------------------

int cmd_alias_demo(const GlobalOptions& g) {
  std::printf("input A  %s\ninput B  %s  (A shifted right by one)\n\n", kAliasSignalA,
              kAliasSignalB);
  std::printf("%-12s %-8s %-8s %s\n", "provider", "out A", "out B", "disagreements");
  const auto rows = alias_demo(g.seed);
  bool restored = true;
  for (const auto& r : rows) {
    if (&r != &rows.front()) restored = restored && r.disagreements < rows.front().disagreements;
    std::printf("%-12s %-8s %-8s %zu\n", r.provider.c_str(), r.out_a.c_str(), r.out_b.c_str(),
                r.disagreements);
  }
  std::printf("\nmaxpool: kernel 1x2, stride 2; blurred variants pool at stride 1, blur "
              "(k=3), then subsample. Outputs thresholded at 0.5.\n");
  return restored ? 0 : 1;
}

// --- blur -------------------------------------------------------------------

struct BlurArgs {
  std::string input;
  std::string output;
  std::string blur = "gaussian";
  int k = 3;
  std::size_t groups = 1;
  int stride = 2;
  double sigma = 1.0;
  std::string checkpoint;
  std::string prefix = "predictor";
  bool demo = false;
};

BlurProvider provider_from_args(const BlurArgs& a, std::size_t channels, std::uint64_t seed) {
  const BlurKind kind = parse_blur_kind(a.blur);
  if (is_adaptive(kind) && !a.checkpoint.empty()) {
    PredictorConfig cfg;
    cfg.k = a.k;
    cfg.in_channels = channels;
    cfg.groups = kind == BlurKind::kSpatialChannelAdaptive ? a.groups : 1;
    return BlurProvider::adaptive(kind, load_predictor(Checkpoint::load(a.checkpoint), a.prefix, cfg));
  }
  return make_blur_provider(kind, a.k, a.groups, a.sigma, channels, seed);
}

int cmd_blur(const GlobalOptions& g, const BlurArgs& a) {
  if (a.demo) {
    // Impulse noise next to edges: plain subsampling, a fixed Gaussian, and a
    // spatially adaptive provider fitted to reproduce the noise-free image.
    fs::create_directories(g.out);
    const Tensor img = make_impulse_edges_image(64, g.seed);
    const Tensor clean = make_impulse_edges_image(64, g.seed, 0.0);
    write_pnm(g.out / "demo_input.pgm", tensor_to_image(img));
    PredictorConfig cfg;
    cfg.k = a.k;
    const Predictor fitted = fit_predictor(img, strided_subsample(clean, 2), cfg, 300, 0.5, g.seed);
    const BlurProvider providers[] = {BlurProvider::none(), BlurProvider::gaussian(a.k, a.sigma),
                                      BlurProvider::adaptive(BlurKind::kSpatialAdaptive, fitted)};
    for (const auto& p : providers) {
      const Tensor out = blur_then_downsample(img, p, 2);
      const fs::path path = g.out / ("demo_" + p.name() + ".pgm");
      write_pnm(path, tensor_to_image(out));
      std::printf("wrote %s\n", path.string().c_str());
    }
    Predictor copy = fitted;
    for (const auto& path : export_variance_heatmaps(filter_variance(predict_filters(img, copy)), g.out)) {
      std::printf("wrote %s\n", path.string().c_str());
    }
    return 0;
  }
  if (a.input.empty() || a.output.empty()) throw UsageError("blur needs --input and --output (or --demo)");
  const Image in = read_pnm(fs::path(a.input));
  const Tensor x = image_to_tensor(in);
  const auto p = provider_from_args(a, x.c(), g.seed);
  const Tensor y = blur_then_downsample(x, p, a.stride);
  const fs::path out_path(a.output);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_pnm(out_path, tensor_to_image(y, in.maxval, in.encoding));
  return 0;
}

// --- experiment configs -----------------------------------------------------

struct ExperimentConfig {
  SyntheticTask task;
  AblationSpec spec;
};

ExperimentConfig load_experiment(const std::string& path, const std::vector<std::string>& overrides) {
  KeyValueConfig cfg = path.empty() ? KeyValueConfig{} : KeyValueConfig::load(path);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + o + "'");
    cfg.set(o.substr(0, eq), o.substr(eq + 1));
  }
  ExperimentConfig e;
  e.task = task_from_config(cfg);
  e.spec = AblationSpec::from_config(cfg);
  cfg.check_all_used();
  return e;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os << text;
}

void print_run(const RunResult& r) {
  std::printf("%-12s seed=%-4llu accuracy=%.4f consistency=%.4f loss=%.4f%s\n", r.provider.c_str(),
              static_cast<unsigned long long>(r.seed), r.eval.accuracy, r.eval.consistency,
              r.train.final_loss, r.train.diverged ? " DIVERGED" : "");
}

// --- train / eval -----------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string provider = "spatial";
};

int cmd_train(const GlobalOptions& g, const TrainArgs& a) {
  const auto e = load_experiment(a.config, a.overrides);
  const auto provider = ProviderSpec::parse(a.provider);
  ModelConfig mc = e.spec.model;
  mc.classes = e.task.classes;
  mc.blur = provider.kind;
  mc.groups = provider.groups;
  auto model = ToyClassifier::init(mc, g.seed);
  const Dataset data = make_dataset(e.task);
  RunResult r;
  r.provider = provider.name();
  r.seed = g.seed;
  r.parameters = model.parameter_count();
  r.train = train_model(model, data, e.spec.train, g.seed);
  if (!r.train.diverged) r.eval = evaluate(model, e.task, data.test);
  const fs::path dir = g.out / "model";
  model.save(dir);
  write_text(dir / "task.cfg", task_config_text(e.task));
  run_report(r, e.task.classes).save(g.out / "train_report.txt");
  print_run(r);
  std::printf("checkpoint: %s\n", dir.string().c_str());
  return r.train.diverged ? 1 : 0;
}

struct EvalArgs {
  std::string model;
  std::vector<std::string> overrides;
};

int cmd_eval(const GlobalOptions& g, const EvalArgs& a) {
  const fs::path dir(a.model);
  KeyValueConfig cfg =
      fs::exists(dir / "task.cfg") ? KeyValueConfig::load(dir / "task.cfg") : KeyValueConfig{};
  for (const auto& o : a.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + o + "'");
    cfg.set(o.substr(0, eq), o.substr(eq + 1));
  }
  const SyntheticTask task = task_from_config(cfg);
  cfg.check_all_used();
  auto model = ToyClassifier::load(dir);
  RunResult r;
  r.provider = blur_kind_name(model.config().blur);
  r.seed = g.seed;
  r.parameters = model.parameter_count();
  r.eval = evaluate(model, task, make_dataset(task).test);
  run_report(r, task.classes).save(g.out / "eval_report.txt");
  print_run(r);
  return 0;
}

// --- ablate / sweep ---------------------------------------------------------

int cmd_ablate(const GlobalOptions& g, const TrainArgs& a) {
  const auto e = load_experiment(a.config, a.overrides);
  const auto reports = run_ablation(e.task, e.spec, g.threads);
  const fs::path dir = g.out / "ablation";
  std::ostringstream summary;
  summary << "provider median_accuracy median_consistency\n";
  for (const auto& r : reports) {
    r.save(dir / (r.title() + ".txt"));
    char line[160];
    std::snprintf(line, sizeof line, "%s %.6f %.6f\n", r.title().c_str(),
                  median_metric(r, "top1_accuracy"), median_metric(r, "consistency"));
    summary << line;
  }
  write_text(dir / "summary.txt", summary.str());
  std::fputs(summary.str().c_str(), stdout);
  return 0;
}

int cmd_sweep(const GlobalOptions& g, const TrainArgs& a) {
  const auto e = load_experiment(a.config, a.overrides);
  const auto points = run_group_sweep(e.task, e.spec, g.threads);
  write_text(g.out / "sweep.csv", sweep_csv(points));
  MetricReport rep("group-sweep");
  for (const auto& p : points) {
    const std::string g_name = "g" + std::to_string(p.groups);
    rep.add("median_accuracy." + g_name, p.accuracy, 0, p.runs.size());
    rep.add("median_consistency." + g_name, p.consistency, 0, p.runs.size());
    std::printf("groups=%-3zu median_accuracy=%.4f median_consistency=%.4f\n", p.groups, p.accuracy,
                p.consistency);
  }
  rep.save(g.out / "sweep_report.txt");
  return 0;
}

// --- analyze ----------------------------------------------------------------

struct AnalyzeArgs {
  std::string model;
  std::size_t layer = 0;
  std::string image;
  int label = 0;
};

int cmd_analyze(const GlobalOptions& g, const AnalyzeArgs& a) {
  auto model = ToyClassifier::load(a.model);
  if (a.layer >= model.config().stages) throw UsageError("--layer is out of range for this model");
  Tensor x;
  if (!a.image.empty()) {
    x = image_to_tensor(read_pnm(fs::path(a.image)));
  } else {
    const fs::path task_cfg = fs::path(a.model) / "task.cfg";
    SyntheticTask task = fs::exists(task_cfg) ? task_from_config(KeyValueConfig::load(task_cfg))
                                              : SyntheticTask{};
    if (a.label < 0 || static_cast<std::size_t>(a.label) >= task.classes) {
      throw UsageError("--label is out of range for the task");
    }
    x = render_pattern(task, a.label, g.seed);
  }
  const fs::path dir = g.out / "analysis";
  fs::create_directories(dir);
  write_pnm(dir / "input.pgm", tensor_to_image(x.c() == 1 || x.c() == 3 ? x : Tensor(x.shape())));

  const auto features = model.stage_features(x);
  const Tensor& feat = features[a.layer];
  const std::size_t groups = model.config().filter_groups();
  const auto sim = group_similarity(feat, groups);
  std::ostringstream csv;
  csv.precision(9);
  for (std::size_t i = 0; i < sim.groups; ++i) {
    for (std::size_t j = 0; j < sim.groups; ++j) csv << (j ? "," : "") << sim.at(i, j);
    csv << '\n';
  }
  write_text(dir / "group_similarity.csv", csv.str());

  MetricReport rep("analysis layer " + std::to_string(a.layer));
  rep.add("group_similarity.mean_within", sim.mean_within(), g.seed);
  rep.add("group_similarity.mean_between", sim.mean_between(), g.seed);
  if (is_adaptive(model.config().blur)) {
    const auto fields = model.stage_filters(x);
    const auto vmap = filter_variance(fields[a.layer]);
    const auto written = export_variance_heatmaps(vmap, dir);
    const auto stats = variance_vs_gradient(vmap, feat);
    rep.add("variance.high_gradient_mean", stats.mean_variance_high_gradient, g.seed,
            stats.high_count);
    rep.add("variance.low_gradient_mean", stats.mean_variance_low_gradient, g.seed,
            stats.low_count);
    for (const auto& p : written) std::printf("wrote %s\n", p.string().c_str());
  }
  rep.save(dir / "analysis_report.txt");
  std::fputs(rep.to_text().c_str(), stdout);
  return 0;
}

// --- consistency ------------------------------------------------------------

struct ConsistencyArgs {
  std::string task = "cls";
  std::string a;
  std::string b;
  std::string pairs;
  double iou_threshold = 0.9;
  bool ignore_class = false;
};

std::vector<int> read_predictions(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  std::vector<int> out;
  std::string tok;
  while (is >> tok) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw FormatError(path.string() + ": bad class id '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

// Manifest rows: <group> <file a> <file b> <ya> <xa> <yb> <xb> <h> <w>;
// paths are relative to the manifest. The overlap rectangles are given in
// each crop's frame.
struct PairRow {
  std::string group;
  fs::path a;
  fs::path b;
  Rect in_a;
  Rect in_b;
};

std::vector<PairRow> read_pair_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  std::vector<PairRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    PairRow r;
    std::string fa, fb;
    std::size_t h = 0, w = 0;
    if (!(ls >> r.group >> fa >> fb >> r.in_a.y >> r.in_a.x >> r.in_b.y >> r.in_b.x >> h >> w)) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected <group> <a> <b> <ya> <xa> <yb> <xb> <h> <w>");
    }
    r.in_a.h = r.in_b.h = h;
    r.in_a.w = r.in_b.w = w;
    r.a = path.parent_path() / fa;
    r.b = path.parent_path() / fb;
    rows.push_back(r);
  }
  return rows;
}

// Instance list rows: <mask.pgm> <class id> <confidence>.
InstanceSet read_instances(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  InstanceSet out;
  std::string mask;
  Instance inst;
  while (is >> mask >> inst.class_id >> inst.confidence) {
    inst.mask = read_mask(path.parent_path() / mask);
    out.push_back(inst);
  }
  if (!is.eof()) throw FormatError(path.string() + ": expected <mask> <class> <confidence> rows");
  return out;
}

int cmd_consistency(const GlobalOptions& g, const ConsistencyArgs& a) {
  MetricReport rep("consistency " + a.task);
  if (a.task == "cls") {
    if (a.a.empty() || a.b.empty()) throw UsageError("--task cls needs --a and --b");
    const auto pa = read_predictions(a.a);
    const auto pb = read_predictions(a.b);
    if (pa.size() != pb.size()) throw FormatError("prediction files differ in length");
    rep.add("classification_consistency", classification_consistency(pa, pb), g.seed, pa.size());
  } else if (a.task == "semseg") {
    if (a.pairs.empty()) throw UsageError("--task semseg needs --pairs");
    std::vector<std::string> order;
    std::vector<std::vector<LabelMapPair>> images;
    for (const auto& r : read_pair_manifest(a.pairs)) {
      auto it = std::find(order.begin(), order.end(), r.group);
      if (it == order.end()) {
        order.push_back(r.group);
        images.emplace_back();
        it = order.end() - 1;
      }
      images[static_cast<std::size_t>(it - order.begin())].emplace_back(
          read_label_map(r.a).crop(r.in_a), read_label_map(r.b).crop(r.in_b));
    }
    const auto s = massc(images);
    rep.add("massc", s.value, g.seed, s.pairs_used, s.pairs_skipped);
  } else if (a.task == "instseg") {
    if (a.pairs.empty()) throw UsageError("--task instseg needs --pairs");
    std::vector<std::pair<InstanceSet, InstanceSet>> pairs;
    for (const auto& r : read_pair_manifest(a.pairs)) {
      pairs.emplace_back(restrict_to_overlap(read_instances(r.a), r.in_a),
                         restrict_to_overlap(read_instances(r.b), r.in_b));
    }
    MaiscOptions opts;
    opts.iou_threshold = a.iou_threshold;
    opts.require_class_match = !a.ignore_class;
    const auto s = maisc(pairs, opts);
    rep.add("maisc", s.value, g.seed, s.pairs_used, s.pairs_skipped);
  } else {
    throw UsageError("--task must be cls, semseg or instseg");
  }
  rep.save(g.out / ("consistency_" + a.task + ".txt"));
  std::fputs(rep.to_text().c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Content-aware anti-aliased downsampling toolkit"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::string out = g.out.string();
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for experiment runs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--out", out, "Output directory")->capture_default_str();

  auto* alias = app.add_subcommand("alias-demo", "Shift aliasing of max pooling on two 1-D signals");

  BlurArgs blur;
  auto* blur_cmd = app.add_subcommand("blur", "Blur and downsample a PGM/PPM image");
  blur_cmd->add_option("--input", blur.input, "Input PGM/PPM");
  blur_cmd->add_option("--output", blur.output, "Output PGM/PPM");
  blur_cmd->add_option("--blur", blur.blur, "none|gaussian|box|image|spatial|grouped")
      ->capture_default_str();
  blur_cmd->add_option("--k", blur.k, "Filter size")->check(CLI::IsMember({3, 5}))->capture_default_str();
  blur_cmd->add_option("--groups", blur.groups, "Channel groups (grouped)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  blur_cmd->add_option("--stride", blur.stride, "Subsampling stride")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  blur_cmd->add_option("--sigma", blur.sigma, "Gaussian sigma")->capture_default_str();
  blur_cmd->add_option("--checkpoint", blur.checkpoint, "Predictor checkpoint directory");
  blur_cmd->add_option("--prefix", blur.prefix, "Predictor tensor prefix in the checkpoint")
      ->capture_default_str();
  blur_cmd->add_flag("--demo", blur.demo, "Write the impulse-noise/edges comparison to --out");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train one classifier on the synthetic task");
  train_cmd->add_option("--config", train.config, "key = value experiment config");
  train_cmd->add_option("--set", train.overrides, "Config override key=value (repeatable)");
  train_cmd->add_option("--provider", train.provider, "Blur provider, e.g. gaussian or grouped-g8")
      ->capture_default_str();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained checkpoint");
  eval_cmd->add_option("--model", eval.model, "Model directory written by train")->required();
  eval_cmd->add_option("--set", eval.overrides, "Task override key=value (repeatable)");

  TrainArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare blur providers over several seeds");
  ablate_cmd->add_option("--config", ablate.config, "key = value experiment config");
  ablate_cmd->add_option("--set", ablate.overrides, "Config override key=value (repeatable)");

  TrainArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Accuracy and consistency versus group count");
  sweep_cmd->add_option("--config", sweep.config, "key = value experiment config");
  sweep_cmd->add_option("--set", sweep.overrides, "Config override key=value (repeatable)");

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Variance heatmaps and group similarity");
  analyze_cmd->add_option("--model", analyze.model, "Model directory written by train")->required();
  analyze_cmd->add_option("--layer", analyze.layer, "Stage index")->capture_default_str();
  analyze_cmd->add_option("--image", analyze.image, "Input PGM (default: a synthetic sample)");
  analyze_cmd->add_option("--label", analyze.label, "Class of the synthetic sample")
      ->capture_default_str();

  ConsistencyArgs cons;
  auto* cons_cmd = app.add_subcommand("consistency", "Score external prediction dumps");
  cons_cmd->add_option("--task", cons.task, "cls|semseg|instseg")
      ->check(CLI::IsMember({"cls", "semseg", "instseg"}))
      ->capture_default_str();
  cons_cmd->add_option("--a", cons.a, "Predictions for view A (cls)");
  cons_cmd->add_option("--b", cons.b, "Predictions for view B (cls)");
  cons_cmd->add_option("--pairs", cons.pairs, "Pair manifest (semseg, instseg)");
  cons_cmd->add_option("--iou-threshold", cons.iou_threshold, "mAISC IoU threshold")
      ->capture_default_str();
  cons_cmd->add_flag("--ignore-class", cons.ignore_class, "Match instances across classes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  g.out = out;

  try {
    if (*alias) return cmd_alias_demo(g);
    if (*blur_cmd) return cmd_blur(g, blur);
    if (*train_cmd) return cmd_train(g, train);
    if (*eval_cmd) return cmd_eval(g, eval);
    if (*ablate_cmd) return cmd_ablate(g, ablate);
    if (*sweep_cmd) return cmd_sweep(g, sweep);
    if (*analyze_cmd) return cmd_analyze(g, analyze);
    if (*cons_cmd) return cmd_consistency(g, cons);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
