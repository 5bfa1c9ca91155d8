#include "ddad/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "ddad/adam.hpp"
#include "ddad/losses.hpp"
#include "ddad/rng.hpp"

namespace ddad {

std::string fingerprint_split(std::vector<std::string> paths) {
  if (paths.empty()) return "empty-split";
  std::sort(paths.begin(), paths.end());
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& p : paths) {
    h ^= fnv1a64(p);
    h *= 0x100000001b3ull;
    h ^= p.size();
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::vector<uint64_t> default_member_seeds(uint64_t base_seed,
                                           const std::string& tag, int k) {
  std::vector<uint64_t> seeds(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i)
    seeds[static_cast<size_t>(i)] =
        derive_seed(base_seed, tag + ".member." + std::to_string(i));
  return seeds;
}

Tensor<float> make_batch(const std::vector<Image>& images,
                         const std::vector<int>& order, size_t begin,
                         size_t end, int side) {
  const int64_t n = static_cast<int64_t>(end - begin);
  Tensor<float> batch({n, 1, side, side});
  const size_t px = static_cast<size_t>(side) * side;
  for (size_t i = begin; i < end; ++i) {
    const Image& img = images[static_cast<size_t>(order[i])];
    if (img.side != side)
      throw ValidationError("batch: image side " + std::to_string(img.side) +
                            " != expected " + std::to_string(side));
    std::copy_n(img.pix.data(), px, batch.data() + (i - begin) * px);
  }
  return batch;
}

namespace {

void train_member(Autoencoder<float>& net, const std::vector<Image>& images,
                  const TrainConfig& cfg, uint64_t member_seed, ModuleTag tag,
                  int member_index, std::vector<double>& epoch_losses,
                  const ProgressFn& progress) {
  const int side = net.config().side;
  const bool aeu = cfg.loss == "aeu";
  Adam<float> opt(net.params(), cfg.learning_rate);
  Rng shuffle_rng = derive_rng(member_seed, "shuffle");

  std::vector<int> order(images.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_acc = 0.0;
    size_t seen = 0;
    for (size_t begin = 0; begin < order.size();
         begin += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(order.size(), begin + static_cast<size_t>(cfg.batch_size));
      Tensor<float> batch = make_batch(images, order, begin, end, side);
      auto out = net.forward(batch, /*train=*/true);
      Tensor<float> d_recon;
      double loss;
      if (aeu) {
        if (!out.log_var)
          throw ContractError("train: aeu loss requires an AE-U backbone");
        Tensor<float> d_log_var;
        loss = loss_aeu(batch, out.recon, *out.log_var, &d_recon, &d_log_var);
        net.backward(d_recon, &d_log_var);
      } else {
        loss = loss_mse(batch, out.recon, &d_recon);
        net.backward(d_recon, nullptr);
      }
      if (!std::isfinite(loss))
        throw DivergenceError("training diverged: module " +
                              module_tag_name(tag) + " member " +
                              std::to_string(member_index) + " epoch " +
                              std::to_string(epoch));
      opt.step();
      loss_acc += loss * static_cast<double>(end - begin);
      seen += end - begin;
    }
    const double epoch_loss = loss_acc / static_cast<double>(seen);
    epoch_losses.push_back(epoch_loss);
    if (progress)
      progress({module_tag_name(tag), member_index, epoch, cfg.epochs,
                epoch_loss});
  }
}

}  // namespace

TrainResult train_ensemble(const std::vector<Image>& images,
                           const std::vector<std::string>& image_paths,
                           const TrainConfig& cfg_in,
                           const NetworkConfig& net_cfg, ModuleTag tag,
                           const ProgressFn& progress) {
  TrainConfig cfg = cfg_in;
  cfg.validate();
  net_cfg.validate();
  if (images.empty())
    throw ValidationError("train_ensemble: training set is empty");
  if ((cfg.loss == "aeu") != (net_cfg.backbone == Backbone::AEU))
    throw ValidationError("train_ensemble: loss '" + cfg.loss +
                          "' does not match backbone");
  if (cfg.member_seeds.empty())
    throw ValidationError("train_ensemble: member_seeds must be resolved");
  for (size_t i = 0; i < cfg.member_seeds.size(); ++i)
    for (size_t j = i + 1; j < cfg.member_seeds.size(); ++j)
      if (cfg.member_seeds[i] == cfg.member_seeds[j])
        throw ValidationError("train_ensemble: member_seeds must be distinct");

  TrainResult result;
  result.checkpoint.module_tag = tag;
  result.checkpoint.train_config = cfg;
  result.checkpoint.net_config = net_cfg;
  result.checkpoint.data_fingerprint =
      fingerprint_split(std::vector<std::string>(image_paths));

  for (int k = 0; k < cfg.k; ++k) {
    auto net = std::make_unique<Autoencoder<float>>(
        net_cfg, cfg.member_seeds[static_cast<size_t>(k)]);
    std::vector<double> losses;
    train_member(*net, images, cfg, cfg.member_seeds[static_cast<size_t>(k)],
                 tag, k, losses, progress);
    result.checkpoint.members.push_back(std::move(net));
    result.epoch_losses.push_back(std::move(losses));
  }
  return result;
}

}  // namespace ddad
