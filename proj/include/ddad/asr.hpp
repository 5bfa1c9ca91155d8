#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "ddad/adam.hpp"
#include "ddad/scoring.hpp"
#include "ddad/synthesis.hpp"

namespace ddad {

struct AsrConfig {
  int in_channels = 2;  // 1: refine a_intra only; 2: refine+fuse dual maps
  int conv_layers = 3;
  int hidden_channels = 32;
  int epochs = 100;
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  double gamma = 2.0;  // focal focusing parameter
  int batch_size = 32;
  int pairs_per_epoch = 0;  // 0: one synthetic pair per normal image

  void validate() const {
    if (in_channels != 1 && in_channels != 2)
      throw ValidationError("asr config: in_channels must be 1 or 2");
    if (conv_layers != 3)
      throw ValidationError("asr config: the refinement net is a fixed 3-conv stack");
    if (gamma < 0) throw ValidationError("asr config: gamma must be >= 0");
    if (hidden_channels < 1 || batch_size < 1 || epochs < 0 ||
        learning_rate <= 0 || weight_decay < 0 || pairs_per_epoch < 0)
      throw ValidationError("asr config: invalid training parameters");
  }
};

// Probability map emitted by the refinement net.
struct RefinedMap {
  int side = 0;
  std::vector<float> values;  // in [0,1]
  ScoreKind kind = ScoreKind::RDual;

  ScoreMap as_score_map() const { return ScoreMap{side, values, kind}; }
};

// Three 3x3 convolutions (in -> 32 -> 32 -> 1) with BN+ReLU between them
// and a sigmoid output; spatial dims preserved.
template <typename T>
class AsrNet {
 public:
  AsrNet(const AsrConfig& cfg, uint64_t init_seed)
      : cfg_(cfg), init_seed_(init_seed),
        conv1_("asr1", cfg.in_channels, cfg.hidden_channels, 3, 1, 1),
        bn1_("asr1_bn", cfg.hidden_channels),
        conv2_("asr2", cfg.hidden_channels, cfg.hidden_channels, 3, 1, 1),
        bn2_("asr2_bn", cfg.hidden_channels),
        conv3_("asr3", cfg.hidden_channels, 1, 3, 1, 1) {
    cfg_.validate();
    Rng rng(derive_seed(init_seed, "asr.init"));
    conv1_.init(rng);
    conv2_.init(rng);
    conv3_.init(rng);
    conv1_.collect(params_);
    bn1_.collect(params_);
    conv2_.collect(params_);
    bn2_.collect(params_);
    conv3_.collect(params_);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (x.rank() != 4 || x.dim(1) != cfg_.in_channels)
      throw ContractError("asr: expected " + std::to_string(cfg_.in_channels) +
                          " input channels");
    Tensor<T> h = conv1_.forward(x);
    h = bn1_.forward(h, train);
    h = relu1_.forward(h);
    h = conv2_.forward(h);
    h = bn2_.forward(h, train);
    h = relu2_.forward(h);
    h = conv3_.forward(h);
    return sigmoid_.forward(h);
  }

  void backward(const Tensor<T>& d_prob) {
    Tensor<T> d = sigmoid_.backward(d_prob);
    d = conv3_.backward(d);
    d = relu2_.backward(d);
    d = bn2_.backward(d);
    d = conv2_.backward(d);
    d = relu1_.backward(d);
    d = bn1_.backward(d);
    conv1_.backward(d);
  }

  std::vector<ParamRef<T>>& params() { return params_; }
  const AsrConfig& config() const { return cfg_; }
  uint64_t init_seed() const { return init_seed_; }

 private:
  AsrConfig cfg_;
  uint64_t init_seed_;
  Conv2d<T> conv1_;
  BatchNorm<T> bn1_;
  Conv2d<T> conv2_;
  BatchNorm<T> bn2_;
  Conv2d<T> conv3_;
  ReLU<T> relu1_, relu2_;
  Sigmoid<T> sigmoid_;
  std::vector<ParamRef<T>> params_;
};

// Focal loss over probabilities: mean of -(1-p_t)^gamma * log(p_t) with
// p_t = pred where target is 1 and 1-pred elsewhere. Predictions are
// clamped to [1e-6, 1-1e-6] before the log.
template <typename T>
double focal_loss(const Tensor<T>& pred, const Tensor<T>& target, double gamma,
                  Tensor<T>* grad_pred = nullptr) {
  if (!pred.same_shape(target))
    throw ValidationError("focal_loss: shape mismatch");
  const int64_t n = pred.numel();
  if (n == 0) throw ValidationError("focal_loss: empty input");
  constexpr double eps = 1e-6;
  double acc = 0;
  if (grad_pred) *grad_pred = Tensor<T>(pred.shape());
  // (1-pt)^gamma via multiplication for the common integral gammas
  const int gi = (gamma == 0.0 || gamma == 1.0 || gamma == 2.0)
                     ? static_cast<int>(gamma)
                     : -1;
  for (int64_t i = 0; i < n; ++i) {
    const bool pos = target[i] > T(0.5);
    double p = std::clamp(static_cast<double>(pred[i]), eps, 1.0 - eps);
    const double pt = pos ? p : 1.0 - p;
    const double one_minus = 1.0 - pt;
    const double w = gi == 0   ? 1.0
                     : gi == 1 ? one_minus
                     : gi == 2 ? one_minus * one_minus
                               : std::pow(one_minus, gamma);
    const double log_pt = std::log(pt);
    acc += -w * log_pt;
    if (grad_pred) {
      // d/dpt [-(1-pt)^g log pt] = g (1-pt)^(g-1) log pt - (1-pt)^g / pt
      const double wm1 = gi == 0   ? 0.0
                         : gi == 1 ? 1.0
                         : gi == 2 ? one_minus
                                   : std::pow(one_minus, gamma - 1.0);
      double d_pt = gamma * wm1 * log_pt - w / pt;
      if (!pos) d_pt = -d_pt;
      (*grad_pred)[i] = static_cast<T>(d_pt / n);
    }
  }
  return acc / n;
}

// Persisted stage-2 checkpoint plus the stage-1 fingerprints it was
// trained against.
struct AsrCheckpoint {
  std::unique_ptr<AsrNet<float>> net;
  AsrConfig config;
  uint64_t seed = 0;
  std::string ndm_fingerprint;
  std::string udm_fingerprint;  // empty in intra-only mode
};

struct AsrTrainResult {
  AsrCheckpoint checkpoint;
  std::vector<double> epoch_losses;
};

using AsrProgressFn = std::function<void(int epoch, int epochs, double loss)>;

// Trains F() on synthetic pairs drawn from d_n. Stage-1 checkpoints stay
// frozen; their score maps (uncertainty-refined when the backbone is AE-U)
// form the input channels. udm must be present iff in_channels == 2.
AsrTrainResult train_asr(const EnsembleCheckpoint& ndm,
                         const EnsembleCheckpoint* udm,
                         const std::vector<Image>& d_n, const AsrConfig& cfg,
                         uint64_t seed, SigmaAgg agg = SigmaAgg::VarMean,
                         const AsrProgressFn& progress = nullptr);

// Provenance of the score maps handed to refine(); mismatches against the
// checkpoint's training fingerprints produce a warning, not an error.
struct MapProvenance {
  std::string ndm_fingerprint;
  std::string udm_fingerprint;
};

RefinedMap refine(AsrCheckpoint& asr, const std::vector<ScoreMap>& maps,
                  const MapProvenance* provenance = nullptr,
                  std::string* warning = nullptr);

void save_asr(const std::filesystem::path& dir, AsrCheckpoint& ckpt);
AsrCheckpoint load_asr(const std::filesystem::path& dir);

}  // namespace ddad
