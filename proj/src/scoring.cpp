#include "ddad/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nlohmann/json.hpp"

namespace ddad {

namespace {
constexpr float kSigmaEps = 1e-8f;  // Eq. guards: division undefined at 0
}

std::string score_kind_name(ScoreKind k) {
  switch (k) {
    case ScoreKind::ARec: return "a_rec";
    case ScoreKind::AIntra: return "a_intra";
    case ScoreKind::AInter: return "a_inter";
    case ScoreKind::RIntra: return "r_intra";
    case ScoreKind::RDual: return "r_dual";
  }
  return "?";
}

ScoreKind score_kind_from_name(const std::string& s) {
  if (s == "a_rec") return ScoreKind::ARec;
  if (s == "a_intra") return ScoreKind::AIntra;
  if (s == "a_inter") return ScoreKind::AInter;
  if (s == "r_intra") return ScoreKind::RIntra;
  if (s == "r_dual") return ScoreKind::RDual;
  throw ValidationError("unknown score kind '" + s + "'");
}

std::vector<EnsembleForward> ensemble_forward_batch(
    const EnsembleCheckpoint& ckpt, const Tensor<float>& batch, SigmaAgg agg) {
  if (ckpt.members.empty())
    throw ValidationError("ensemble_forward: checkpoint has no members");
  const int side = ckpt.net_config.side;
  if (batch.rank() != 4 || batch.dim(2) != side || batch.dim(3) != side)
    throw ValidationError("ensemble_forward: input side does not match checkpoint");
  const int64_t n = batch.dim(0);
  const size_t px = static_cast<size_t>(side) * side;
  const int k = ckpt.k();
  const bool aeu = ckpt.net_config.backbone == Backbone::AEU;

  std::vector<EnsembleForward> out(static_cast<size_t>(n));
  for (auto& f : out) {
    f.side = side;
    f.recons.assign(static_cast<size_t>(k), {});
    f.mean.assign(px, 0.f);
    if (aeu) f.sigma.emplace(px, 0.f);
  }

  for (int m = 0; m < k; ++m) {
    auto res = ckpt.members[static_cast<size_t>(m)]->forward(batch, false);
    for (int64_t i = 0; i < n; ++i) {
      auto& f = out[static_cast<size_t>(i)];
      const float* rp = res.recon.data() + i * static_cast<int64_t>(px);
      f.recons[static_cast<size_t>(m)].assign(rp, rp + px);
      for (size_t j = 0; j < px; ++j) f.mean[j] += rp[j];
      if (aeu) {
        const float* lv = res.log_var->data() + i * static_cast<int64_t>(px);
        auto& sig = *f.sigma;
        if (agg == SigmaAgg::VarMean) {
          for (size_t j = 0; j < px; ++j) sig[j] += std::exp(lv[j]);
        } else {
          for (size_t j = 0; j < px; ++j) sig[j] += std::exp(0.5f * lv[j]);
        }
      }
    }
  }
  const float inv_k = 1.0f / static_cast<float>(k);
  for (auto& f : out) {
    for (float& v : f.mean) v *= inv_k;
    if (f.sigma) {
      for (float& v : *f.sigma) {
        v *= inv_k;
        if (agg == SigmaAgg::VarMean) v = std::sqrt(v);
      }
    }
  }
  return out;
}

EnsembleForward ensemble_forward(const EnsembleCheckpoint& ckpt,
                                 const Image& x, SigmaAgg agg) {
  const int side = ckpt.net_config.side;
  if (x.side != side)
    throw ValidationError("ensemble_forward: image side " +
                          std::to_string(x.side) + " != checkpoint side " +
                          std::to_string(side));
  Tensor<float> batch({1, 1, side, side});
  std::copy_n(x.pix.data(), x.size(), batch.data());
  return std::move(ensemble_forward_batch(ckpt, batch, agg)[0]);
}

ScoreMap score_rec(const Image& x, const std::vector<float>& recon) {
  if (recon.size() != x.size())
    throw ValidationError("score_rec: shape mismatch");
  ScoreMap m;
  m.side = x.side;
  m.kind = ScoreKind::ARec;
  m.values.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const float d = x.pix[i] - recon[i];
    m.values[i] = d * d;
  }
  return m;
}

ScoreMap score_intra(const EnsembleForward& ndm) {
  if (ndm.recons.empty())
    throw ValidationError("score_intra: no member reconstructions");
  const size_t px = ndm.mean.size();
  ScoreMap m;
  m.side = ndm.side;
  m.kind = ScoreKind::AIntra;
  m.values.assign(px, 0.f);
  const float inv_k = 1.0f / static_cast<float>(ndm.recons.size());
  for (const auto& r : ndm.recons) {
    if (r.size() != px) throw ValidationError("score_intra: ragged members");
    for (size_t i = 0; i < px; ++i) {
      const float d = ndm.mean[i] - r[i];
      m.values[i] += d * d;
    }
  }
  for (float& v : m.values) v = std::sqrt(v * inv_k);
  return m;
}

ScoreMap score_inter(const EnsembleForward& ndm, const EnsembleForward& udm) {
  if (ndm.mean.size() != udm.mean.size() || ndm.side != udm.side)
    throw ValidationError("score_inter: grids not aligned");
  ScoreMap m;
  m.side = ndm.side;
  m.kind = ScoreKind::AInter;
  m.values.resize(ndm.mean.size());
  for (size_t i = 0; i < m.values.size(); ++i)
    m.values[i] = std::fabs(ndm.mean[i] - udm.mean[i]);
  return m;
}

ScoreMap refine_by_uncertainty(const ScoreMap& map,
                               const std::vector<float>& sigma) {
  if (map.kind != ScoreKind::AIntra && map.kind != ScoreKind::AInter)
    throw ContractError(
        "refine_by_uncertainty: only a_intra/a_inter maps are refined");
  if (sigma.size() != map.values.size())
    throw ValidationError("refine_by_uncertainty: shape mismatch");
  for (float s : sigma)
    if (!(s > 0.f))
      throw ContractError("refine_by_uncertainty: sigma must be positive");
  ScoreMap out = map;
  for (size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = map.values[i] / (sigma[i] + kSigmaEps);
  return out;
}

double image_score(const ScoreMap& map) {
  if (map.values.empty()) throw ValidationError("image_score: empty map");
  double acc = 0;
  for (float v : map.values) acc += v;
  return acc / static_cast<double>(map.values.size());
}

std::vector<Stage1MapSet> stage1_maps_batch(const EnsembleCheckpoint& ndm,
                                            const EnsembleCheckpoint* udm,
                                            const Tensor<float>& batch,
                                            SigmaAgg agg) {
  auto ndm_fwd = ensemble_forward_batch(ndm, batch, agg);
  std::vector<EnsembleForward> udm_fwd;
  if (udm) udm_fwd = ensemble_forward_batch(*udm, batch, agg);

  std::vector<Stage1MapSet> out;
  out.reserve(ndm_fwd.size());
  for (size_t i = 0; i < ndm_fwd.size(); ++i) {
    Stage1MapSet set;
    set.intra = score_intra(ndm_fwd[i]);
    if (ndm_fwd[i].sigma)
      set.intra = refine_by_uncertainty(set.intra, *ndm_fwd[i].sigma);
    if (udm) {
      set.inter = score_inter(ndm_fwd[i], udm_fwd[i]);
      if (ndm_fwd[i].sigma)
        set.inter = refine_by_uncertainty(*set.inter, *ndm_fwd[i].sigma);
    }
    out.push_back(std::move(set));
  }
  return out;
}

void export_score_map(const ScoreMap& map, const std::filesystem::path& dir,
                      const std::string& stem) {
  std::filesystem::create_directories(dir);
  float lo = map.values.empty() ? 0.f : map.values[0];
  float hi = lo;
  for (float v : map.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const float range = hi - lo;
  std::vector<uint16_t> px(map.values.size());
  for (size_t i = 0; i < px.size(); ++i) {
    const float t = range > 0.f ? (map.values[i] - lo) / range : 0.f;
    px[i] = static_cast<uint16_t>(std::lround(t * 65535.0f));
  }
  write_png_gray16(dir / (stem + ".png"), px, map.side, map.side);

  nlohmann::json sidecar;
  sidecar["schema_version"] = kSchemaVersion;
  sidecar["kind"] = score_kind_name(map.kind);
  sidecar["min"] = lo;
  sidecar["max"] = hi;
  sidecar["encoding"] = "value = min + png/65535 * (max - min)";
  std::ofstream sf(dir / (stem + ".json"));
  if (!sf) throw IoError("cannot write " + (dir / (stem + ".json")).string());
  sf << sidecar.dump(2) << "\n";

  LoadedTensor t;
  t.name = stem;
  t.shape = {map.side, map.side};
  t.data = map.values;
  write_tensor_blob(dir / (stem + ".raw"), {t});
}

}  // namespace ddad
