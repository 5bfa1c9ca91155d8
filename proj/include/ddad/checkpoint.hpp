#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ddad/net.hpp"

namespace ddad {

constexpr int kSchemaVersion = 1;

// One named float32 tensor inside a blob file.
struct LoadedTensor {
  std::string name;
  std::vector<int64_t> shape;
  std::vector<float> data;
};

// Blob layout: a directory holds tensors.json (ordered manifest of
// {name, shape, dtype, offset}) and tensors.bin (raw little-endian float32,
// concatenated at the listed byte offsets).
void write_tensor_blob(const std::filesystem::path& dir,
                       const std::vector<LoadedTensor>& tensors);
std::vector<LoadedTensor> read_tensor_blob(const std::filesystem::path& dir);

// Network member checkpoint: config.json + tensor blob (parameters and
// batch-norm running statistics, in declaration order).
void save_network(const std::filesystem::path& dir, Autoencoder<float>& net);
std::unique_ptr<Autoencoder<float>> load_network(const std::filesystem::path& dir);

std::string network_config_to_json(const NetworkConfig& cfg, uint64_t init_seed);

struct TrainConfig {
  int k = 3;
  int epochs = 250;
  double learning_rate = 5e-4;
  int batch_size = 64;
  std::vector<uint64_t> member_seeds;  // resolved to k entries
  std::string loss = "mse";            // mse | aeu

  void validate() const;
};

enum class ModuleTag { NDM, UDM };
inline std::string module_tag_name(ModuleTag t) {
  return t == ModuleTag::NDM ? "ndm" : "udm";
}
inline ModuleTag module_tag_from_name(const std::string& s) {
  if (s == "ndm") return ModuleTag::NDM;
  if (s == "udm") return ModuleTag::UDM;
  throw ValidationError("unknown module tag '" + s + "' (expected ndm|udm)");
}

// K trained members plus everything needed to reproduce them.
struct EnsembleCheckpoint {
  std::vector<std::unique_ptr<Autoencoder<float>>> members;
  ModuleTag module_tag = ModuleTag::NDM;
  TrainConfig train_config;
  NetworkConfig net_config;
  std::string data_fingerprint;

  int k() const { return static_cast<int>(members.size()); }
};

// Layout: <dir>/ensemble.json + <dir>/member_<i>/{config.json,tensors.*}
void save_ensemble(const std::filesystem::path& dir,
                   EnsembleCheckpoint& ckpt);
EnsembleCheckpoint load_ensemble(const std::filesystem::path& dir);

}  // namespace ddad
