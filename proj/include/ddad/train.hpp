#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ddad/checkpoint.hpp"
#include "ddad/image.hpp"

namespace ddad {

// Order-insensitive digest over a set of image paths; equal sets collide
// iff equal (up to 64-bit hashing). Empty set yields a fixed sentinel.
std::string fingerprint_split(std::vector<std::string> paths);

struct TrainProgress {
  std::string module_tag;
  int member = 0;
  int epoch = 0;   // 1-based
  int epochs = 0;
  double loss = 0.0;
};
using ProgressFn = std::function<void(const TrainProgress&)>;

struct TrainResult {
  EnsembleCheckpoint checkpoint;
  // per member, mean loss of each epoch
  std::vector<std::vector<double>> epoch_losses;
};

// Trains K members independently: each gets its own init seed and its own
// shuffle stream. NDM is fed D_n, UDM is fed D_n along with D_u; this
// function only sees the already-resolved image list.
TrainResult train_ensemble(const std::vector<Image>& images,
                           const std::vector<std::string>& image_paths,
                           const TrainConfig& cfg,
                           const NetworkConfig& net_cfg, ModuleTag tag,
                           const ProgressFn& progress = nullptr);

// Resolves defaulted member seeds: seed fan-out from (base_seed, tag).
std::vector<uint64_t> default_member_seeds(uint64_t base_seed,
                                           const std::string& tag, int k);

// Assemble a (N,1,side,side) batch tensor from images[idx[begin..end)].
Tensor<float> make_batch(const std::vector<Image>& images,
                         const std::vector<int>& order, size_t begin,
                         size_t end, int side);

}  // namespace ddad
