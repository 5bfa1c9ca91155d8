#include "ddad/checkpoint.hpp"

#include <bit>
#include <fstream>

#include "nlohmann/json.hpp"

namespace ddad {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian; big-endian hosts are unsupported");

void write_tensor_blob(const std::filesystem::path& dir,
                       const std::vector<LoadedTensor>& tensors) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["dtype"] = "float32";
  manifest["byte_order"] = "little";
  json list = json::array();
  std::ofstream bin(dir / "tensors.bin", std::ios::binary);
  if (!bin) throw IoError("cannot write " + (dir / "tensors.bin").string());
  uint64_t offset = 0;
  for (const auto& t : tensors) {
    json entry;
    entry["name"] = t.name;
    entry["shape"] = t.shape;
    entry["dtype"] = "float32";
    entry["offset"] = offset;
    list.push_back(entry);
    bin.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    offset += t.data.size() * sizeof(float);
  }
  if (!bin) throw IoError("failed writing " + (dir / "tensors.bin").string());
  manifest["tensors"] = list;
  std::ofstream mf(dir / "tensors.json");
  if (!mf) throw IoError("cannot write " + (dir / "tensors.json").string());
  mf << manifest.dump(2) << "\n";
}

std::vector<LoadedTensor> read_tensor_blob(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "tensors.json");
  if (!mf) throw IoError("cannot open " + (dir / "tensors.json").string());
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw ValidationError("tensor manifest " + dir.string() + ": " + e.what());
  }
  if (manifest.at("dtype").get<std::string>() != "float32" ||
      manifest.at("byte_order").get<std::string>() != "little")
    throw ValidationError("tensor blob " + dir.string() +
                          ": unsupported dtype/byte order");
  std::ifstream bin(dir / "tensors.bin", std::ios::binary);
  if (!bin) throw IoError("cannot open " + (dir / "tensors.bin").string());
  std::vector<LoadedTensor> out;
  for (const auto& entry : manifest.at("tensors")) {
    LoadedTensor t;
    t.name = entry.at("name").get<std::string>();
    t.shape = entry.at("shape").get<std::vector<int64_t>>();
    int64_t numel = 1;
    for (int64_t d : t.shape) numel *= d;
    t.data.resize(static_cast<size_t>(numel));
    bin.seekg(static_cast<std::streamoff>(entry.at("offset").get<uint64_t>()));
    bin.read(reinterpret_cast<char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!bin)
      throw IoError("tensor blob " + dir.string() + ": short read for " + t.name);
    out.push_back(std::move(t));
  }
  return out;
}

std::string network_config_to_json(const NetworkConfig& cfg,
                                   uint64_t init_seed) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["side"] = cfg.side;
  j["encoder_channels"] = cfg.encoder_channels;
  j["kernel"] = cfg.kernel;
  j["stride"] = cfg.stride;
  j["bottleneck_fc_layers"] = cfg.bottleneck_fc_layers;
  j["fc_hidden"] = cfg.fc_hidden;
  j["latent"] = cfg.latent;
  j["backbone"] = backbone_name(cfg.backbone);
  j["init_seed"] = init_seed;
  return j.dump(2) + "\n";
}

namespace {

std::pair<NetworkConfig, uint64_t> network_config_from_file(
    const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("network config " + file.string() + ": " + e.what());
  }
  NetworkConfig cfg;
  cfg.side = j.at("side").get<int>();
  cfg.encoder_channels = j.at("encoder_channels").get<std::vector<int>>();
  cfg.kernel = j.at("kernel").get<int>();
  cfg.stride = j.at("stride").get<int>();
  cfg.bottleneck_fc_layers = j.at("bottleneck_fc_layers").get<int>();
  cfg.fc_hidden = j.at("fc_hidden").get<int>();
  cfg.latent = j.at("latent").get<int>();
  cfg.backbone = backbone_from_name(j.at("backbone").get<std::string>());
  return {cfg, j.at("init_seed").get<uint64_t>()};
}

}  // namespace

void save_network(const std::filesystem::path& dir, Autoencoder<float>& net) {
  std::filesystem::create_directories(dir);
  std::ofstream cf(dir / "config.json");
  if (!cf) throw IoError("cannot write " + (dir / "config.json").string());
  cf << network_config_to_json(net.config(), net.init_seed());
  std::vector<LoadedTensor> tensors;
  for (const auto& p : net.params()) {
    LoadedTensor t;
    t.name = p.name;
    t.shape = p.value->shape();
    t.data = p.value->vec();
    tensors.push_back(std::move(t));
  }
  write_tensor_blob(dir, tensors);
}

std::unique_ptr<Autoencoder<float>> load_network(
    const std::filesystem::path& dir) {
  auto [cfg, init_seed] = network_config_from_file(dir / "config.json");
  auto net = std::make_unique<Autoencoder<float>>(cfg, init_seed);
  auto tensors = read_tensor_blob(dir);
  auto& params = net->params();
  if (tensors.size() != params.size())
    throw ValidationError("checkpoint " + dir.string() + ": expected " +
                          std::to_string(params.size()) + " tensors, found " +
                          std::to_string(tensors.size()));
  for (size_t i = 0; i < params.size(); ++i) {
    if (tensors[i].name != params[i].name ||
        tensors[i].shape != params[i].value->shape())
      throw ValidationError("checkpoint " + dir.string() +
                            ": tensor mismatch at '" + tensors[i].name + "'");
    params[i].value->vec() = std::move(tensors[i].data);
  }
  return net;
}

void TrainConfig::validate() const {
  if (k < 1) throw ValidationError("train config: k must be >= 1");
  if (epochs < 0) throw ValidationError("train config: epochs must be >= 0");
  if (learning_rate <= 0)
    throw ValidationError("train config: learning_rate must be positive");
  if (batch_size < 1)
    throw ValidationError("train config: batch_size must be >= 1");
  if (!member_seeds.empty() && member_seeds.size() != static_cast<size_t>(k))
    throw ValidationError("train config: member_seeds must have k entries");
  if (loss != "mse" && loss != "aeu")
    throw ValidationError("train config: loss must be mse or aeu");
}

namespace {

json train_config_to_json(const TrainConfig& tc) {
  return json{{"k", tc.k},
              {"epochs", tc.epochs},
              {"learning_rate", tc.learning_rate},
              {"batch_size", tc.batch_size},
              {"member_seeds", tc.member_seeds},
              {"loss", tc.loss}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig tc;
  tc.k = j.at("k").get<int>();
  tc.epochs = j.at("epochs").get<int>();
  tc.learning_rate = j.at("learning_rate").get<double>();
  tc.batch_size = j.at("batch_size").get<int>();
  tc.member_seeds = j.at("member_seeds").get<std::vector<uint64_t>>();
  tc.loss = j.at("loss").get<std::string>();
  return tc;
}

}  // namespace

void save_ensemble(const std::filesystem::path& dir, EnsembleCheckpoint& ckpt) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < ckpt.k(); ++i)
    save_network(dir / ("member_" + std::to_string(i)), *ckpt.members[i]);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["module_tag"] = module_tag_name(ckpt.module_tag);
  j["k"] = ckpt.k();
  j["data_fingerprint"] = ckpt.data_fingerprint;
  j["train_config"] = train_config_to_json(ckpt.train_config);
  std::ofstream out(dir / "ensemble.json");
  if (!out) throw IoError("cannot write " + (dir / "ensemble.json").string());
  out << j.dump(2) << "\n";
}

EnsembleCheckpoint load_ensemble(const std::filesystem::path& dir) {
  std::ifstream in(dir / "ensemble.json");
  if (!in) throw IoError("cannot open " + (dir / "ensemble.json").string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("ensemble " + dir.string() + ": " + e.what());
  }
  EnsembleCheckpoint ckpt;
  ckpt.module_tag = module_tag_from_name(j.at("module_tag").get<std::string>());
  ckpt.data_fingerprint = j.at("data_fingerprint").get<std::string>();
  ckpt.train_config = train_config_from_json(j.at("train_config"));
  const int k = j.at("k").get<int>();
  for (int i = 0; i < k; ++i)
    ckpt.members.push_back(load_network(dir / ("member_" + std::to_string(i))));
  if (ckpt.members.empty())
    throw ValidationError("ensemble " + dir.string() + ": no members");
  ckpt.net_config = ckpt.members[0]->config();
  return ckpt;
}

}  // namespace ddad
