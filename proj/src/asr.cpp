#include "ddad/asr.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nlohmann/json.hpp"

namespace ddad {

using nlohmann::json;

namespace {

// Stack stage-1 maps of a synthetic batch into the (B, C, s, s) input and
// the (B, 1, s, s) pseudo-label target.
void assemble_asr_batch(const std::vector<Stage1MapSet>& maps,
                        const std::vector<const SynthPair*>& pairs,
                        int in_channels, int side, Tensor<float>& input,
                        Tensor<float>& target) {
  const int64_t b = static_cast<int64_t>(maps.size());
  const size_t px = static_cast<size_t>(side) * side;
  input = Tensor<float>({b, in_channels, side, side});
  target = Tensor<float>({b, 1, side, side});
  for (int64_t i = 0; i < b; ++i) {
    const auto& set = maps[static_cast<size_t>(i)];
    std::copy_n(set.intra.values.data(), px,
                input.data() + (i * in_channels) * static_cast<int64_t>(px));
    if (in_channels == 2)
      std::copy_n(set.inter->values.data(), px,
                  input.data() + (i * in_channels + 1) * static_cast<int64_t>(px));
    const auto& mask = pairs[static_cast<size_t>(i)]->y_s;
    float* t = target.data() + i * static_cast<int64_t>(px);
    for (size_t j = 0; j < px; ++j) t[j] = mask[j] ? 1.f : 0.f;
  }
}

}  // namespace

AsrTrainResult train_asr(const EnsembleCheckpoint& ndm,
                         const EnsembleCheckpoint* udm,
                         const std::vector<Image>& d_n, const AsrConfig& cfg,
                         uint64_t seed, SigmaAgg agg,
                         const AsrProgressFn& progress) {
  cfg.validate();
  if ((cfg.in_channels == 2) != (udm != nullptr))
    throw ContractError(
        "train_asr: dual mode requires a UDM checkpoint, intra-only forbids it");
  if (udm && udm->net_config.side != ndm.net_config.side)
    throw ValidationError("train_asr: NDM/UDM checkpoint sides differ");

  const int side = ndm.net_config.side;
  AsrTrainResult result;
  result.checkpoint.config = cfg;
  result.checkpoint.seed = seed;
  result.checkpoint.ndm_fingerprint = ndm.data_fingerprint;
  result.checkpoint.udm_fingerprint = udm ? udm->data_fingerprint : "";
  result.checkpoint.net =
      std::make_unique<AsrNet<float>>(cfg, derive_seed(seed, "asr.net"));
  AsrNet<float>& net = *result.checkpoint.net;

  Adam<float> opt(net.params(), cfg.learning_rate, cfg.weight_decay);
  SynthStream stream(&d_n, derive_seed(seed, "asr.synth"));
  const size_t per_epoch = cfg.pairs_per_epoch > 0
                               ? static_cast<size_t>(cfg.pairs_per_epoch)
                               : d_n.size();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_acc = 0.0;
    size_t seen = 0;
    size_t remaining = per_epoch;
    while (remaining > 0) {
      const size_t b = std::min(remaining, static_cast<size_t>(cfg.batch_size));
      remaining -= b;
      std::vector<SynthPair> pairs = stream.take(b);
      Tensor<float> xs({static_cast<int64_t>(b), 1, side, side});
      const size_t px = static_cast<size_t>(side) * side;
      std::vector<const SynthPair*> pair_ptrs;
      for (size_t i = 0; i < b; ++i) {
        std::copy_n(pairs[i].x_s.pix.data(), px, xs.data() + i * px);
        pair_ptrs.push_back(&pairs[i]);
      }
      // stage 1 stays frozen: eval-mode forward only
      auto maps = stage1_maps_batch(ndm, udm, xs, agg);
      Tensor<float> input, target;
      assemble_asr_batch(maps, pair_ptrs, cfg.in_channels, side, input, target);

      Tensor<float> prob = net.forward(input, /*train=*/true);
      Tensor<float> d_prob;
      const double loss = focal_loss(prob, target, cfg.gamma, &d_prob);
      if (!std::isfinite(loss))
        throw DivergenceError("asr training diverged at epoch " +
                              std::to_string(epoch));
      net.backward(d_prob);
      opt.step();
      loss_acc += loss * static_cast<double>(b);
      seen += b;
    }
    const double epoch_loss = loss_acc / static_cast<double>(seen);
    result.epoch_losses.push_back(epoch_loss);
    if (progress) progress(epoch, cfg.epochs, epoch_loss);
  }
  return result;
}

RefinedMap refine(AsrCheckpoint& asr, const std::vector<ScoreMap>& maps,
                  const MapProvenance* provenance, std::string* warning) {
  if (!asr.net) throw ContractError("refine: empty ASR checkpoint");
  const int in_ch = asr.config.in_channels;
  if (static_cast<int>(maps.size()) != in_ch)
    throw ContractError("refine: expected " + std::to_string(in_ch) +
                        " score maps, got " + std::to_string(maps.size()));
  const int side = maps[0].side;
  for (const auto& m : maps)
    if (m.side != side || m.values.size() != maps[0].values.size())
      throw ValidationError("refine: score maps not aligned");

  if (provenance) {
    std::string w;
    if (provenance->ndm_fingerprint != asr.ndm_fingerprint)
      w += "NDM fingerprint mismatch (maps " + provenance->ndm_fingerprint +
           ", asr trained on " + asr.ndm_fingerprint + "); ";
    if (in_ch == 2 && provenance->udm_fingerprint != asr.udm_fingerprint)
      w += "UDM fingerprint mismatch (maps " + provenance->udm_fingerprint +
           ", asr trained on " + asr.udm_fingerprint + "); ";
    if (!w.empty()) {
      w = "refine: " + w + "refined scores may not match training conditions";
      if (warning)
        *warning = w;
      else
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    }
  }

  const size_t px = maps[0].values.size();
  Tensor<float> input({1, in_ch, side, side});
  for (int c = 0; c < in_ch; ++c)
    std::copy_n(maps[static_cast<size_t>(c)].values.data(), px,
                input.data() + static_cast<size_t>(c) * px);
  Tensor<float> prob = asr.net->forward(input, /*train=*/false);
  RefinedMap out;
  out.side = side;
  out.kind = in_ch == 2 ? ScoreKind::RDual : ScoreKind::RIntra;
  out.values.assign(prob.data(), prob.data() + px);
  return out;
}

void save_asr(const std::filesystem::path& dir, AsrCheckpoint& ckpt) {
  std::filesystem::create_directories(dir);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["in_channels"] = ckpt.config.in_channels;
  j["conv_layers"] = ckpt.config.conv_layers;
  j["hidden_channels"] = ckpt.config.hidden_channels;
  j["epochs"] = ckpt.config.epochs;
  j["learning_rate"] = ckpt.config.learning_rate;
  j["weight_decay"] = ckpt.config.weight_decay;
  j["gamma"] = ckpt.config.gamma;
  j["batch_size"] = ckpt.config.batch_size;
  j["pairs_per_epoch"] = ckpt.config.pairs_per_epoch;
  j["seed"] = ckpt.seed;
  j["ndm_fingerprint"] = ckpt.ndm_fingerprint;
  j["udm_fingerprint"] = ckpt.udm_fingerprint;
  std::ofstream out(dir / "config.json");
  if (!out) throw IoError("cannot write " + (dir / "config.json").string());
  out << j.dump(2) << "\n";

  std::vector<LoadedTensor> tensors;
  for (const auto& p : ckpt.net->params())
    tensors.push_back({p.name, p.value->shape(), p.value->vec()});
  write_tensor_blob(dir, tensors);
}

AsrCheckpoint load_asr(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw IoError("cannot open " + (dir / "config.json").string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("asr checkpoint " + dir.string() + ": " + e.what());
  }
  AsrCheckpoint ckpt;
  ckpt.config.in_channels = j.at("in_channels").get<int>();
  ckpt.config.conv_layers = j.at("conv_layers").get<int>();
  ckpt.config.hidden_channels = j.at("hidden_channels").get<int>();
  ckpt.config.epochs = j.at("epochs").get<int>();
  ckpt.config.learning_rate = j.at("learning_rate").get<double>();
  ckpt.config.weight_decay = j.at("weight_decay").get<double>();
  ckpt.config.gamma = j.at("gamma").get<double>();
  ckpt.config.batch_size = j.at("batch_size").get<int>();
  ckpt.config.pairs_per_epoch = j.at("pairs_per_epoch").get<int>();
  ckpt.seed = j.at("seed").get<uint64_t>();
  ckpt.ndm_fingerprint = j.at("ndm_fingerprint").get<std::string>();
  ckpt.udm_fingerprint = j.at("udm_fingerprint").get<std::string>();
  ckpt.net = std::make_unique<AsrNet<float>>(ckpt.config,
                                             derive_seed(ckpt.seed, "asr.net"));
  auto tensors = read_tensor_blob(dir);
  auto& params = ckpt.net->params();
  if (tensors.size() != params.size())
    throw ValidationError("asr checkpoint " + dir.string() +
                          ": tensor count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    if (tensors[i].name != params[i].name ||
        tensors[i].shape != params[i].value->shape())
      throw ValidationError("asr checkpoint " + dir.string() +
                            ": tensor mismatch at '" + tensors[i].name + "'");
    params[i].value->vec() = std::move(tensors[i].data);
  }
  return ckpt;
}

}  // namespace ddad
