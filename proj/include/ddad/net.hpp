#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ddad/layers.hpp"

namespace ddad {

enum class Backbone { AE, AEU };

inline std::string backbone_name(Backbone b) {
  return b == Backbone::AE ? "ae" : "aeu";
}
inline Backbone backbone_from_name(const std::string& s) {
  if (s == "ae") return Backbone::AE;
  if (s == "aeu") return Backbone::AEU;
  throw ValidationError("unknown backbone '" + s + "' (expected ae|aeu)");
}

struct NetworkConfig {
  int side = 64;
  std::vector<int> encoder_channels{16, 32, 64, 64};
  int kernel = 4;
  int stride = 2;
  int bottleneck_fc_layers = 3;  // fixed stack: flat -> 128 -> latent -> 8*b*b
  int fc_hidden = 128;
  int latent = 16;
  Backbone backbone = Backbone::AE;

  void validate() const {
    if (kernel <= 0 || stride <= 0)
      throw ValidationError("network config: kernel and stride must be positive");
    if (encoder_channels.empty())
      throw ValidationError("network config: encoder_channels empty");
    if (bottleneck_fc_layers != 3)
      throw ValidationError("network config: bottleneck is a fixed 3-layer stack");
    int down = 1;
    for (size_t i = 0; i < encoder_channels.size(); ++i) down *= stride;
    if (side <= 0 || side % down != 0)
      throw ValidationError("network config: side must be divisible by stride^" +
                            std::to_string(encoder_channels.size()));
    if (side / down < 1)
      throw ValidationError("network config: side too small for the encoder depth");
    if (fc_hidden <= 0 || latent <= 0)
      throw ValidationError("network config: fc widths must be positive");
  }

  int bottleneck_side() const {
    int down = 1;
    for (size_t i = 0; i < encoder_channels.size(); ++i) down *= stride;
    return side / down;
  }
  // 8 channels at the bottleneck grid; 8*b*b == 128 at the default side
  static constexpr int kDecoderInChannels = 8;
};

template <typename T>
struct ReconstructionOutput {
  Tensor<T> recon;                    // (N,1,side,side), sigmoid range
  std::optional<Tensor<T>> log_var;   // (N,1,side,side), clamped, AE-U only
};

// The reconstruction backbone. Encoder of stride-2 convolutions, a 3-layer
// fully connected bottleneck, and a mirrored transposed-convolution
// decoder; AE-U adds a second decoder emitting per-pixel log-variance.
// Batch norm + ReLU follow every layer except the output layers.
template <typename T>
class Autoencoder {
 public:
  Autoencoder(const NetworkConfig& cfg, uint64_t init_seed)
      : cfg_(cfg), init_seed_(init_seed) {
    cfg_.validate();
    build();
    Rng rng(derive_seed(init_seed, "net.init"));
    init_params(rng);
  }

  const NetworkConfig& config() const { return cfg_; }
  uint64_t init_seed() const { return init_seed_; }

  ReconstructionOutput<T> forward(const Tensor<T>& x, bool train) {
    if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != cfg_.side ||
        x.dim(3) != cfg_.side)
      throw ValidationError("autoencoder: input must be (N,1," +
                            std::to_string(cfg_.side) + "," +
                            std::to_string(cfg_.side) + ")");
    const int64_t N = x.dim(0);
    if (N == 0) {
      ReconstructionOutput<T> empty;
      empty.recon = Tensor<T>({0, 1, cfg_.side, cfg_.side});
      if (cfg_.backbone == Backbone::AEU)
        empty.log_var = Tensor<T>({0, 1, cfg_.side, cfg_.side});
      return empty;
    }
    Tensor<T> h = x;
    for (size_t i = 0; i < enc_.size(); ++i) {
      h = enc_[i]->forward(h);
      h = enc_bn_[i]->forward(h, train);
      h = enc_relu_[i].forward(h);
    }
    const int b = cfg_.bottleneck_side();
    const int64_t flat = static_cast<int64_t>(cfg_.encoder_channels.back()) * b * b;
    h = h.reshaped({N, flat});
    for (size_t i = 0; i < fc_.size(); ++i) {
      h = fc_[i]->forward(h);
      h = fc_bn_[i]->forward(h, train);
      h = fc_relu_[i].forward(h);
    }
    Tensor<T> z = h.reshaped({N, NetworkConfig::kDecoderInChannels, b, b});

    ReconstructionOutput<T> out;
    out.recon = run_decoder(dec_, dec_bn_, dec_relu_, dec_sigmoid_, z, train);
    if (cfg_.backbone == Backbone::AEU) {
      Tensor<T> lv = run_decoder_trunk(udec_, udec_bn_, udec_relu_, z, train);
      out.log_var = uclamp_.forward(lv);
    }
    return out;
  }

  // Gradients w.r.t. recon (and log_var for AE-U) propagate back through
  // the whole net, filling parameter grads. Input gradient is discarded.
  void backward(const Tensor<T>& d_recon, const Tensor<T>* d_log_var) {
    const int64_t N = d_recon.dim(0);
    Tensor<T> dz = backward_decoder(dec_, dec_bn_, dec_relu_, &dec_sigmoid_,
                                    d_recon);
    if (cfg_.backbone == Backbone::AEU) {
      if (!d_log_var)
        throw ContractError("autoencoder: AE-U backward needs log-var grads");
      Tensor<T> dlv = uclamp_.backward(*d_log_var);
      Tensor<T> dz_u = backward_decoder(udec_, udec_bn_, udec_relu_, nullptr,
                                        dlv);
      for (int64_t i = 0; i < dz.numel(); ++i) dz[i] += dz_u[i];
    }
    const int b = cfg_.bottleneck_side();
    Tensor<T> dh =
        dz.reshaped({N, static_cast<int64_t>(NetworkConfig::kDecoderInChannels) * b * b});
    for (size_t i = fc_.size(); i-- > 0;) {
      dh = fc_relu_[i].backward(dh);
      dh = fc_bn_[i]->backward(dh);
      dh = fc_[i]->backward(dh);
    }
    Tensor<T> dimg = dh.reshaped({N, static_cast<int64_t>(cfg_.encoder_channels.back()), b, b});
    for (size_t i = enc_.size(); i-- > 0;) {
      dimg = enc_relu_[i].backward(dimg);
      dimg = enc_bn_[i]->backward(dimg);
      dimg = enc_[i]->backward(dimg);
    }
  }

  std::vector<ParamRef<T>>& params() { return params_; }

  int64_t parameter_count() const {
    int64_t n = 0;
    for (const auto& p : params_)
      if (p.trainable) n += p.value->numel();
    return n;
  }

 private:
  using ConvPtr = std::unique_ptr<Conv2d<T>>;
  using ConvTPtr = std::unique_ptr<ConvTranspose2d<T>>;
  using BnPtr = std::unique_ptr<BatchNorm<T>>;
  using FcPtr = std::unique_ptr<Linear<T>>;

  void build() {
    const int k = cfg_.kernel, s = cfg_.stride, p = 1;
    int in_ch = 1;
    for (size_t i = 0; i < cfg_.encoder_channels.size(); ++i) {
      int out_ch = cfg_.encoder_channels[i];
      std::string nm = "enc" + std::to_string(i + 1);
      enc_.push_back(std::make_unique<Conv2d<T>>(nm, in_ch, out_ch, k, s, p));
      enc_bn_.push_back(std::make_unique<BatchNorm<T>>(nm + "_bn", out_ch));
      enc_relu_.emplace_back();
      in_ch = out_ch;
    }
    const int b = cfg_.bottleneck_side();
    const int flat = cfg_.encoder_channels.back() * b * b;
    const int dec_flat = NetworkConfig::kDecoderInChannels * b * b;
    const int widths[4] = {flat, cfg_.fc_hidden, cfg_.latent, dec_flat};
    for (int i = 0; i < 3; ++i) {
      std::string nm = "fc" + std::to_string(i + 1);
      fc_.push_back(std::make_unique<Linear<T>>(nm, widths[i], widths[i + 1]));
      fc_bn_.push_back(std::make_unique<BatchNorm<T>>(nm + "_bn", widths[i + 1]));
      fc_relu_.emplace_back();
    }
    build_decoder("dec", dec_, dec_bn_, dec_relu_);
    if (cfg_.backbone == Backbone::AEU)
      build_decoder("udec", udec_, udec_bn_, udec_relu_);

    for (size_t i = 0; i < enc_.size(); ++i) {
      enc_[i]->collect(params_);
      enc_bn_[i]->collect(params_);
    }
    for (size_t i = 0; i < fc_.size(); ++i) {
      fc_[i]->collect(params_);
      fc_bn_[i]->collect(params_);
    }
    for (size_t i = 0; i < dec_.size(); ++i) {
      dec_[i]->collect(params_);
      if (i + 1 < dec_.size()) dec_bn_[i]->collect(params_);
    }
    for (size_t i = 0; i < udec_.size(); ++i) {
      udec_[i]->collect(params_);
      if (i + 1 < udec_.size()) udec_bn_[i]->collect(params_);
    }
  }

  void build_decoder(const std::string& prefix, std::vector<ConvTPtr>& convs,
                     std::vector<BnPtr>& bns, std::vector<ReLU<T>>& relus) {
    const int k = cfg_.kernel, s = cfg_.stride, p = 1;
    // output channels mirror the encoder: e.g. 64-32-16-1
    std::vector<int> out_chs;
    for (size_t i = cfg_.encoder_channels.size() - 1; i-- > 0;)
      out_chs.push_back(cfg_.encoder_channels[i]);
    out_chs.push_back(1);
    int in_ch = NetworkConfig::kDecoderInChannels;
    for (size_t i = 0; i < out_chs.size(); ++i) {
      std::string nm = prefix + std::to_string(i + 1);
      convs.push_back(
          std::make_unique<ConvTranspose2d<T>>(nm, in_ch, out_chs[i], k, s, p));
      if (i + 1 < out_chs.size()) {
        bns.push_back(std::make_unique<BatchNorm<T>>(nm + "_bn", out_chs[i]));
        relus.emplace_back();
      }
      in_ch = out_chs[i];
    }
  }

  void init_params(Rng& rng) {
    for (auto& c : enc_) c->init(rng);
    for (auto& f : fc_) f->init(rng);
    for (auto& c : dec_) c->init(rng);
    for (auto& c : udec_) c->init(rng);
  }

  Tensor<T> run_decoder_trunk(std::vector<ConvTPtr>& convs,
                              std::vector<BnPtr>& bns,
                              std::vector<ReLU<T>>& relus, const Tensor<T>& z,
                              bool train) {
    Tensor<T> h = z;
    for (size_t i = 0; i < convs.size(); ++i) {
      h = convs[i]->forward(h);
      if (i + 1 < convs.size()) {
        h = bns[i]->forward(h, train);
        h = relus[i].forward(h);
      }
    }
    return h;
  }

  Tensor<T> run_decoder(std::vector<ConvTPtr>& convs, std::vector<BnPtr>& bns,
                        std::vector<ReLU<T>>& relus, Sigmoid<T>& sig,
                        const Tensor<T>& z, bool train) {
    return sig.forward(run_decoder_trunk(convs, bns, relus, z, train));
  }

  Tensor<T> backward_decoder(std::vector<ConvTPtr>& convs,
                             std::vector<BnPtr>& bns,
                             std::vector<ReLU<T>>& relus, Sigmoid<T>* sig,
                             const Tensor<T>& dy) {
    Tensor<T> d = sig ? sig->backward(dy) : dy;
    for (size_t i = convs.size(); i-- > 0;) {
      if (i + 1 < convs.size()) {
        d = relus[i].backward(d);
        d = bns[i]->backward(d);
      }
      d = convs[i]->backward(d);
    }
    return d;
  }

  NetworkConfig cfg_;
  uint64_t init_seed_;
  std::vector<ConvPtr> enc_;
  std::vector<BnPtr> enc_bn_;
  std::vector<ReLU<T>> enc_relu_;
  std::vector<FcPtr> fc_;
  std::vector<BnPtr> fc_bn_;
  std::vector<ReLU<T>> fc_relu_;
  std::vector<ConvTPtr> dec_, udec_;
  std::vector<BnPtr> dec_bn_, udec_bn_;
  std::vector<ReLU<T>> dec_relu_, udec_relu_;
  Sigmoid<T> dec_sigmoid_;
  Clamp<T> uclamp_{T(-10), T(10)};
  std::vector<ParamRef<T>> params_;
};

}  // namespace ddad
