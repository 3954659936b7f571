#include "adaptaa/model.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

#include "adaptaa/config.hpp"
#include "adaptaa/t4f.hpp"

namespace adaptaa {

namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint64_t out[1];
  seq.generate(reinterpret_cast<std::uint32_t*>(out), reinterpret_cast<std::uint32_t*>(out + 1));
  return out[0];
}

Tensor uniform_tensor(Shape s, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(s);
  for (auto& v : t.data()) v = static_cast<float>(dist(rng));
  return t;
}

Tensor channel_vector(std::size_t c, float fill) { return Tensor(Shape{1, c, 1, 1}, fill); }

std::string stage_name(std::size_t s) { return "stage" + std::to_string(s); }

std::vector<float> to_vector(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

void ModelConfig::validate() const {
  if (in_channels == 0 || width == 0) throw std::invalid_argument("model widths must be positive");
  if (classes < 2) throw std::invalid_argument("model needs at least two classes");
  if (stages == 0) throw std::invalid_argument("model needs at least one stage");
  if (k < 1 || k % 2 == 0) throw std::invalid_argument("blur size k must be odd and positive");
  if (blur == BlurKind::kGaussian && !(sigma > 0)) {
    throw std::invalid_argument("gaussian sigma must be positive");
  }
  if (is_adaptive(blur)) predictor_config().validate();
}

std::size_t ModelConfig::filter_groups() const {
  return blur == BlurKind::kSpatialChannelAdaptive ? groups : 1;
}

PredictorConfig ModelConfig::predictor_config() const {
  PredictorConfig p;
  p.k = k;
  p.groups = filter_groups();
  p.in_channels = width;
  if (p.groups == 0 || width % p.groups != 0) {
    throw std::invalid_argument("groups (" + std::to_string(p.groups) +
                                ") must divide the stage width (" + std::to_string(width) + ")");
  }
  return p;
}

PredictorInit parse_predictor_init(const std::string& s) {
  if (s == "uniform") return PredictorInit::kUniform;
  if (s == "gaussian") return PredictorInit::kGaussian;
  throw std::invalid_argument("unknown predictor init '" + s + "' (uniform, gaussian)");
}

std::string predictor_init_name(PredictorInit init) {
  return init == PredictorInit::kGaussian ? "gaussian" : "uniform";
}

ToyClassifier ToyClassifier::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ToyClassifier m;
  m.cfg_ = cfg;
  std::mt19937_64 backbone(stream_seed(seed, 0));
  for (std::size_t s = 0; s < cfg.stages; ++s) {
    const std::size_t cin = s == 0 ? cfg.in_channels : cfg.width;
    const double bound = std::sqrt(6.0 / double(cin * 9));
    m.params_.push_back({stage_name(s) + ".conv.weight",
                         uniform_tensor(Shape{cfg.width, cin, 3, 3}, bound, backbone)});
    m.params_.push_back({stage_name(s) + ".bn.gamma", channel_vector(cfg.width, 1.0f)});
    m.params_.push_back({stage_name(s) + ".bn.beta", channel_vector(cfg.width, 0.0f)});
    m.backbone_bn_.push_back(BatchNorm::identity(cfg.width));
  }
  m.params_.push_back({"head.weight",
                       uniform_tensor(Shape{cfg.classes, cfg.width, 1, 1},
                                      1.0 / std::sqrt(double(cfg.width)), backbone)});
  m.params_.push_back({"head.bias", channel_vector(cfg.classes, 0.0f)});

  if (is_adaptive(cfg.blur)) {
    const auto pc = cfg.predictor_config();
    for (std::size_t s = 0; s < cfg.stages; ++s) {
      std::mt19937_64 rng(stream_seed(seed, 1 + s));
      const std::string p = stage_name(s) + ".predictor";
      const double bound = 1.0 / std::sqrt(double(pc.in_channels * 9));
      m.params_.push_back({p + ".conv.weight",
                           uniform_tensor(Shape{pc.out_channels(), pc.in_channels, 3, 3},
                                          bound, rng)});
      m.params_.push_back({p + ".conv.bias", channel_vector(pc.out_channels(), 0.0f)});
      m.params_.push_back({p + ".bn.gamma", channel_vector(pc.out_channels(), cfg.predictor_gamma)});
      Tensor beta = channel_vector(pc.out_channels(), 0.0f);
      if (cfg.predictor_init == PredictorInit::kGaussian) {
        const auto taps = gaussian_kernel(cfg.k, cfg.sigma);
        for (std::size_t i = 0; i < pc.out_channels(); ++i) beta[i] = std::log(taps[i % taps.size()]);
      }
      m.params_.push_back({p + ".bn.beta", std::move(beta)});
      m.predictor_bn_.push_back(BatchNorm::identity(pc.out_channels()));
    }
  }
  return m;
}

std::size_t ToyClassifier::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw std::out_of_range("model has no parameter '" + name + "'");
}

const Tensor& ToyClassifier::param(const std::string& name) const {
  return params_[index_of(name)].value;
}

std::size_t ToyClassifier::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::size_t ToyClassifier::predictor_parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.name.find(".predictor.") != std::string::npos) n += p.value.size();
  }
  return n;
}

ToyClassifier::Trace ToyClassifier::forward(ag::Tape<float>& tape, const Tensor& x,
                                            BnMode mode) {
  if (x.c() != cfg_.in_channels) {
    throw ShapeError("model expects " + std::to_string(cfg_.in_channels) +
                     " input channels, got " + x.shape().str());
  }
  const bool train = mode == BnMode::kTrain;
  Trace tr;
  for (auto& p : params_) tr.params.push_back(tape.leaf(p.value, train));
  auto var = [&](const std::string& name) { return tr.params[index_of(name)]; };
  auto bn = [&](ag::Var in, ag::Var gamma, ag::Var beta, BatchNorm& state) {
    return train ? ag::batchnorm_train(tape, in, gamma, beta, state)
                 : ag::batchnorm_eval(tape, in, gamma, beta, state);
  };

  const int k = cfg_.k;
  const std::vector<float> kernel = cfg_.blur == BlurKind::kGaussian ? gaussian_kernel(k, cfg_.sigma)
                                                                     : box_kernel(k);
  ag::Var h = tape.constant(x);
  for (std::size_t s = 0; s < cfg_.stages; ++s) {
    const std::string st = stage_name(s);
    h = ag::conv2d(tape, h, var(st + ".conv.weight"), std::nullopt, 1, 1, PadMode::kZero);
    h = bn(h, var(st + ".bn.gamma"), var(st + ".bn.beta"), backbone_bn_[s]);
    h = ag::relu(tape, h);
    tr.features.push_back(h);
    switch (cfg_.blur) {
      case BlurKind::kNone:
        break;
      case BlurKind::kGaussian:
      case BlurKind::kBox:
        h = ag::fixed_blur(tape, h, kernel);
        break;
      case BlurKind::kImageAdaptive:
      case BlurKind::kSpatialAdaptive:
      case BlurKind::kSpatialChannelAdaptive: {
        const std::string p = st + ".predictor";
        const std::size_t taps = static_cast<std::size_t>(k * k);
        ag::Var logits = ag::conv2d(tape, h, var(p + ".conv.weight"), var(p + ".conv.bias"), 1, 1,
                                    PadMode::kReflect);
        logits = bn(logits, var(p + ".bn.gamma"), var(p + ".bn.beta"), predictor_bn_[s]);
        ag::Var field;
        if (cfg_.blur == BlurKind::kImageAdaptive) {
          const Shape hs = tape.value(h).shape();
          field = ag::softmax_slices(tape, ag::global_avg_pool(tape, logits), taps);
          field = ag::broadcast_hw(tape, field, hs.h, hs.w);
        } else {
          field = ag::softmax_slices(tape, logits, taps);
        }
        tr.fields.push_back(field);
        h = ag::adaptive_filter(tape, h, field, cfg_.filter_groups(), k);
        break;
      }
    }
    h = ag::subsample(tape, h, 2);
  }
  h = ag::global_avg_pool(tape, h);
  tr.logits = ag::conv2d(tape, h, var("head.weight"), var("head.bias"), 1, 0, PadMode::kZero);
  return tr;
}

float ToyClassifier::train_step(const Tensor& x, std::span<const int> labels, Sgd& opt) {
  ag::Tape<float> tape;
  const auto tr = forward(tape, x, BnMode::kTrain);
  const ag::Var loss = ag::cross_entropy(tape, tr.logits, labels);
  const float value = tape.value(loss)[0];
  if (!std::isfinite(value)) return value;
  tape.backward(loss);
  std::vector<Tensor> grads;
  grads.reserve(params_.size());
  for (const auto& v : tr.params) grads.push_back(tape.grad(v));
  std::vector<Tensor*> ps;
  std::vector<const Tensor*> gs;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ps.push_back(&params_[i].value);
    gs.push_back(&grads[i]);
  }
  opt.step(ps, gs);
  return value;
}

Tensor ToyClassifier::logits(const Tensor& x) {
  ag::Tape<float> tape;
  const auto tr = forward(tape, x, BnMode::kInference);
  return tape.value(tr.logits);
}

std::vector<int> ToyClassifier::predict(const Tensor& x) {
  const Tensor l = logits(x);
  std::vector<int> out(l.n());
  for (std::size_t in = 0; in < l.n(); ++in) {
    int best = 0;
    for (std::size_t c = 1; c < l.c(); ++c) {
      if (l(in, c, 0, 0) > l(in, static_cast<std::size_t>(best), 0, 0)) best = static_cast<int>(c);
    }
    out[in] = best;
  }
  return out;
}

std::vector<FilterField> ToyClassifier::stage_filters(const Tensor& x) {
  ag::Tape<float> tape;
  const auto tr = forward(tape, x, BnMode::kInference);
  std::vector<FilterField> out;
  const std::size_t g = cfg_.blur == BlurKind::kImageAdaptive ? 1 : cfg_.filter_groups();
  for (const auto& f : tr.fields) out.emplace_back(g, cfg_.k, tape.value(f));
  return out;
}

std::vector<Tensor> ToyClassifier::stage_features(const Tensor& x) {
  ag::Tape<float> tape;
  const auto tr = forward(tape, x, BnMode::kInference);
  std::vector<Tensor> out;
  for (const auto& f : tr.features) out.push_back(tape.value(f));
  return out;
}

Predictor ToyClassifier::predictor(std::size_t stage) const {
  if (!is_adaptive(cfg_.blur)) throw std::logic_error("model has no filter predictor");
  if (stage >= cfg_.stages) throw std::out_of_range("stage index out of range");
  const std::string p = stage_name(stage) + ".predictor";
  Predictor out;
  out.cfg = cfg_.predictor_config();
  out.conv.weight = param(p + ".conv.weight");
  out.conv.bias = to_vector(param(p + ".conv.bias"));
  out.conv.stride = 1;
  out.conv.padding = out.cfg.conv_kernel / 2;
  out.conv.pad_mode = PadMode::kReflect;
  out.bn = predictor_bn_[stage];
  out.bn.gamma = to_vector(param(p + ".bn.gamma"));
  out.bn.beta = to_vector(param(p + ".bn.beta"));
  return out;
}

void ToyClassifier::zero_predictors() {
  for (auto& p : params_) {
    if (p.name.find(".predictor.") != std::string::npos) p.value.fill(0.0f);
  }
  for (auto& bn : predictor_bn_) {
    bn = BatchNorm::identity(bn.channels());
  }
}

void ToyClassifier::save(const std::filesystem::path& dir) const {
  Checkpoint ck;
  for (const auto& p : params_) ck.put(p.name, p.value);
  for (std::size_t s = 0; s < backbone_bn_.size(); ++s) {
    ck.put_vector(stage_name(s) + ".bn.mean", backbone_bn_[s].running_mean);
    ck.put_vector(stage_name(s) + ".bn.var", backbone_bn_[s].running_var);
  }
  for (std::size_t s = 0; s < predictor_bn_.size(); ++s) {
    ck.put_vector(stage_name(s) + ".predictor.bn.mean", predictor_bn_[s].running_mean);
    ck.put_vector(stage_name(s) + ".predictor.bn.var", predictor_bn_[s].running_var);
  }
  ck.save(dir);
  std::ofstream os(dir / "model.cfg");
  if (!os) throw FormatError("cannot write " + (dir / "model.cfg").string());
  os << model_config_text(cfg_);
}

ToyClassifier ToyClassifier::load(const std::filesystem::path& dir) {
  std::ifstream is(dir / "model.cfg");
  if (!is) throw FormatError("cannot open " + (dir / "model.cfg").string());
  std::stringstream ss;
  ss << is.rdbuf();
  ToyClassifier m = init(parse_model_config(ss.str()), 0);
  const Checkpoint ck = Checkpoint::load(dir);
  for (auto& p : m.params_) {
    const Tensor& t = ck.get(p.name);
    require_same_shape(t.shape(), p.value.shape(), p.name.c_str());
    p.value = t;
  }
  auto load_stats = [&](BatchNorm& bn, const std::string& prefix) {
    bn.running_mean = ck.get_vector(prefix + ".mean");
    bn.running_var = ck.get_vector(prefix + ".var");
    bn.validate(bn.channels());
  };
  for (std::size_t s = 0; s < m.backbone_bn_.size(); ++s) {
    load_stats(m.backbone_bn_[s], stage_name(s) + ".bn");
  }
  for (std::size_t s = 0; s < m.predictor_bn_.size(); ++s) {
    load_stats(m.predictor_bn_[s], stage_name(s) + ".predictor.bn");
  }
  return m;
}

std::string model_config_text(const ModelConfig& cfg) {
  std::ostringstream os;
  os << "in_channels = " << cfg.in_channels << '\n'
     << "width = " << cfg.width << '\n'
     << "classes = " << cfg.classes << '\n'
     << "stages = " << cfg.stages << '\n'
     << "blur = " << blur_kind_name(cfg.blur) << '\n'
     << "k = " << cfg.k << '\n'
     << "groups = " << cfg.groups << '\n'
     << std::setprecision(17) << "sigma = " << cfg.sigma << '\n'
     << std::setprecision(9) << "predictor_gamma = " << cfg.predictor_gamma << '\n'
     << "predictor_init = " << predictor_init_name(cfg.predictor_init) << '\n';
  return os.str();
}

ModelConfig parse_model_config(const std::string& text) {
  const auto kv = KeyValueConfig::parse(text);
  ModelConfig cfg;
  cfg.in_channels = static_cast<std::size_t>(kv.get_int("in_channels", 1));
  cfg.width = static_cast<std::size_t>(kv.get_int("width", 16));
  cfg.classes = static_cast<std::size_t>(kv.get_int("classes", 4));
  cfg.stages = static_cast<std::size_t>(kv.get_int("stages", 3));
  cfg.blur = parse_blur_kind(kv.get_string("blur", "none"));
  cfg.k = static_cast<int>(kv.get_int("k", 3));
  cfg.groups = static_cast<std::size_t>(kv.get_int("groups", 8));
  cfg.sigma = kv.get_double("sigma", 1.0);
  cfg.predictor_gamma = static_cast<float>(kv.get_double("predictor_gamma", 0.1));
  cfg.predictor_init = parse_predictor_init(kv.get_string("predictor_init", "gaussian"));
  kv.check_all_used();
  cfg.validate();
  return cfg;
}

}  // namespace adaptaa
