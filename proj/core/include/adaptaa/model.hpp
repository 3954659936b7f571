#ifndef ADAPTAA_MODEL_HPP_
#define ADAPTAA_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adaptaa/adaptive.hpp"
#include "adaptaa/autograd.hpp"
#include "adaptaa/optim.hpp"
#include "adaptaa/predictor.hpp"
#include "adaptaa/tensor.hpp"

namespace adaptaa {

/// Starting filters of an adaptive provider: the predictor batchnorm shift
/// is zero (uniform filters) or the log-taps of the fixed Gaussian kernel.
enum class PredictorInit { kUniform, kGaussian };
PredictorInit parse_predictor_init(const std::string& s);
std::string predictor_init_name(PredictorInit init);

/// Small classifier: `stages` × (conv3x3 → batchnorm → relu → blur →
/// subsample by 2), then global average pooling and a linear head.
struct ModelConfig {
  std::size_t in_channels = 1;
  std::size_t width = 16;
  std::size_t classes = 4;
  std::size_t stages = 3;
  BlurKind blur = BlurKind::kNone;
  int k = 3;
  std::size_t groups = 8;        // grouped kind only
  double sigma = 1.0;            // gaussian kind only
  float predictor_gamma = 0.1f;  // initial scale of the predictor batchnorm
  PredictorInit predictor_init = PredictorInit::kGaussian;

  void validate() const;
  /// Filter groups per location: 1 for image/spatial, `groups` for grouped.
  std::size_t filter_groups() const;
  PredictorConfig predictor_config() const;
};

struct NamedParam {
  std::string name;
  Tensor value;
};

class ToyClassifier {
 public:
  struct Trace {
    ag::Var logits;
    std::vector<ag::Var> params;   // one leaf per entry of params()
    std::vector<ag::Var> features;  // input of each stage's blur
    std::vector<ag::Var> fields;    // per-stage filter taps (adaptive kinds)
  };

  /// Backbone weights depend only on `seed` and the widths, never on the
  /// blur kind, so models that differ only in their provider start equal.
  static ToyClassifier init(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::vector<NamedParam>& params() { return params_; }
  const std::vector<NamedParam>& params() const { return params_; }
  const Tensor& param(const std::string& name) const;
  std::size_t parameter_count() const;
  std::size_t predictor_parameter_count() const;

  /// Records the forward pass. kTrain uses batch statistics and updates the
  /// running statistics; parameters require gradients only in kTrain.
  Trace forward(ag::Tape<float>& tape, const Tensor& x, BnMode mode);

  /// One SGD step on the mean cross-entropy; returns the loss.
  float train_step(const Tensor& x, std::span<const int> labels, Sgd& opt);

  Tensor logits(const Tensor& x);
  std::vector<int> predict(const Tensor& x);

  /// Inference-mode filter banks, one per stage; empty for fixed kinds.
  std::vector<FilterField> stage_filters(const Tensor& x);
  /// Inference-mode inputs of each stage's blur.
  std::vector<Tensor> stage_features(const Tensor& x);

  /// Stage predictor as a standalone module (adaptive kinds only).
  Predictor predictor(std::size_t stage) const;
  /// Zeroes every predictor tensor, so each predicts uniform filters.
  void zero_predictors();

  /// Writes manifest + tensors + model.cfg into `dir`.
  void save(const std::filesystem::path& dir) const;
  static ToyClassifier load(const std::filesystem::path& dir);

 private:
  std::size_t index_of(const std::string& name) const;

  ModelConfig cfg_;
  std::vector<NamedParam> params_;
  std::vector<BatchNorm> backbone_bn_;   // running statistics only
  std::vector<BatchNorm> predictor_bn_;  // running statistics only
};

std::string model_config_text(const ModelConfig& cfg);
ModelConfig parse_model_config(const std::string& text);

}  // namespace adaptaa

#endif  // ADAPTAA_MODEL_HPP_
