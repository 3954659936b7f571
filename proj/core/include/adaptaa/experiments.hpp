#ifndef ADAPTAA_EXPERIMENTS_HPP_
#define ADAPTAA_EXPERIMENTS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "adaptaa/config.hpp"
#include "adaptaa/model.hpp"
#include "adaptaa/report.hpp"
#include "adaptaa/synthetic.hpp"

namespace adaptaa {

enum class LrSchedule { kConstant, kCosine, kStep };
LrSchedule parse_lr_schedule(const std::string& s);
std::string lr_schedule_name(LrSchedule s);

struct TrainOptions {
  std::size_t epochs = 8;
  std::size_t batch_size = 32;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  LrSchedule schedule = LrSchedule::kCosine;
  int train_shift = 2;  // random reflect-translation range during training

  double lr_at(std::size_t step, std::size_t total_steps) const;
};

/// Keys: task_seed, canvas, classes, max_shift, train_size, test_size,
/// min_patch, max_patch, min_contrast, max_contrast, noise,
/// impulse_density. Missing keys keep the values of `base`.
SyntheticTask task_from_config(const KeyValueConfig& cfg, const SyntheticTask& base = {});
std::string task_config_text(const SyntheticTask& task);

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> test;
};
Dataset make_dataset(const SyntheticTask& task);

struct TrainResult {
  bool diverged = false;
  float final_loss = 0.0f;  // mean loss of the last epoch
  std::size_t steps = 0;
};

/// Trains in place. Batch order and augmentation shifts derive from `seed`;
/// training stops at the first non-finite loss.
TrainResult train_model(ToyClassifier& model, const Dataset& data, const TrainOptions& opts,
                        std::uint64_t seed);

struct EvalResult {
  double accuracy = 0.0;
  double consistency = 0.0;  // random shift pairs within ±max_shift
  std::size_t pairs = 0;
  /// Per class: agreement between the unshifted image and its four unit
  /// shifts.
  std::vector<double> shift1_consistency;
  std::vector<std::size_t> shift1_pairs;
};

/// Shift pairs derive from task.seed only, so every model sees the same
/// pairs.
EvalResult evaluate(ToyClassifier& model, const SyntheticTask& task,
                    const std::vector<Sample>& test);

/// A provider entry of an ablation: the blur kind plus, for grouped
/// filtering, its group count.
struct ProviderSpec {
  BlurKind kind = BlurKind::kNone;
  std::size_t groups = 8;

  /// "none", "gaussian", ..., "grouped-g8".
  std::string name() const;
  static ProviderSpec parse(const std::string& s);
};

struct AblationSpec {
  std::vector<ProviderSpec> providers;
  std::vector<std::size_t> sweep_groups{1, 2, 4, 8, 16};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  ModelConfig model;  // blur and groups are overridden per provider
  TrainOptions train;

  void validate() const;
  /// Keys: providers, groups, seeds, epochs, batch_size, lr, momentum,
  /// weight_decay, schedule, train_shift, width, k, sigma,
  /// predictor_gamma, predictor_init. Other keys stay unread, so
  /// cfg.check_all_used() afterwards rejects typos.
  static AblationSpec from_config(const KeyValueConfig& cfg);
};

struct RunResult {
  std::string provider;
  std::uint64_t seed = 0;
  TrainResult train;
  EvalResult eval;
  std::size_t parameters = 0;
};

/// Trains and evaluates one provider under one seed.
RunResult run_single(const SyntheticTask& task, const Dataset& data, const AblationSpec& spec,
                     const ProviderSpec& provider, std::uint64_t seed);

/// Provider-ordered reports; each holds one block of entries per seed.
/// Runs are distributed over `threads` workers; results do not depend on
/// the thread count.
std::vector<MetricReport> run_ablation(const SyntheticTask& task, const AblationSpec& spec,
                                       std::size_t threads = 1);

struct SweepPoint {
  std::size_t groups = 0;
  double accuracy = 0.0;     // median over seeds
  double consistency = 0.0;  // median over seeds
  std::vector<RunResult> runs;
};

/// Grouped-filter runs for each g in spec.sweep_groups.
std::vector<SweepPoint> run_group_sweep(const SyntheticTask& task, const AblationSpec& spec,
                                        std::size_t threads = 1);
/// groups,seed,accuracy,consistency rows, one per run.
std::string sweep_csv(const std::vector<SweepPoint>& points);

MetricReport run_report(const RunResult& run, std::size_t classes);

/// Fits a spatial (or grouped) filter predictor so that blurring `x` and
/// subsampling by 2 approaches `target` in mean squared error. Running
/// batchnorm statistics are taken from the final parameters.
Predictor fit_predictor(const Tensor& x, const Tensor& target, const PredictorConfig& cfg,
                        std::size_t steps, double lr, std::uint64_t seed);

/// Fixed providers ignore `groups` and `seed`; adaptive ones get a freshly
/// initialised predictor over `channels` inputs.
BlurProvider make_blur_provider(BlurKind kind, int k, std::size_t groups, double sigma,
                                std::size_t channels, std::uint64_t seed);

struct AliasDemoRow {
  std::string provider;
  std::string out_a;
  std::string out_b;
  std::size_t disagreements = 0;
};

inline constexpr const char* kAliasSignalA = "001100110011";
inline constexpr const char* kAliasSignalB = "011001100110";  // A shifted right by one

/// Max pooling (1x2, stride 2) of both signals under every provider kind
/// (k = 3), outputs thresholded at 0.5. The first row is plain max pooling.
std::vector<AliasDemoRow> alias_demo(std::uint64_t seed);

/// Median of the metric's finite values over all entries with that name;
/// NaN when none are finite.
double median_metric(const MetricReport& report, const std::string& metric);
double median(std::vector<double> values);

}  // namespace adaptaa

#endif  // ADAPTAA_EXPERIMENTS_HPP_
