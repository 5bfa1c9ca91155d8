#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ddad/checkpoint.hpp"
#include "ddad/image.hpp"

namespace ddad {

enum class ScoreKind { ARec, AIntra, AInter, RIntra, RDual };

std::string score_kind_name(ScoreKind k);
ScoreKind score_kind_from_name(const std::string& s);

// Per-pixel non-negative anomaly scores on the input grid.
struct ScoreMap {
  int side = 0;
  std::vector<float> values;  // side*side
  ScoreKind kind = ScoreKind::ARec;

  size_t size() const { return values.size(); }
};

// How the K per-member variance maps of an AE-U ensemble collapse into one
// sigma map: sqrt of the mean variance (default) or mean of the sigmas.
enum class SigmaAgg { VarMean, StdMean };

// All K reconstructions of one input plus their elementwise mean; sigma is
// present only for AE-U checkpoints.
struct EnsembleForward {
  int side = 0;
  std::vector<std::vector<float>> recons;   // K maps
  std::vector<float> mean;
  std::optional<std::vector<float>> sigma;  // aggregated, > 0
};

EnsembleForward ensemble_forward(const EnsembleCheckpoint& ckpt,
                                 const Image& x,
                                 SigmaAgg agg = SigmaAgg::VarMean);

// Batched variant used by evaluation and ASR training; one entry per input.
std::vector<EnsembleForward> ensemble_forward_batch(
    const EnsembleCheckpoint& ckpt, const Tensor<float>& batch,
    SigmaAgg agg = SigmaAgg::VarMean);

// (x - recon)^2 per pixel.
ScoreMap score_rec(const Image& x, const std::vector<float>& recon);

// Population standard deviation of the member reconstructions.
ScoreMap score_intra(const EnsembleForward& ndm);

// |mean_ndm - mean_udm| per pixel.
ScoreMap score_inter(const EnsembleForward& ndm, const EnsembleForward& udm);

// Elementwise division by sigma (plus a small epsilon); kind preserved.
ScoreMap refine_by_uncertainty(const ScoreMap& map,
                               const std::vector<float>& sigma);

// Image-level score: mean over pixels.
double image_score(const ScoreMap& map);

// Export: 16-bit grayscale PNG after min-max scaling, with the scale in a
// JSON sidecar, plus the raw grid in the tensor-blob format.
void export_score_map(const ScoreMap& map, const std::filesystem::path& dir,
                      const std::string& stem);

// Stage-1 map stack for one input: a_intra from the NDM, a_inter when a
// UDM is given; both divided by the NDM sigma when the backbone is AE-U.
struct Stage1MapSet {
  ScoreMap intra;
  std::optional<ScoreMap> inter;
};

std::vector<Stage1MapSet> stage1_maps_batch(const EnsembleCheckpoint& ndm,
                                            const EnsembleCheckpoint* udm,
                                            const Tensor<float>& batch,
                                            SigmaAgg agg = SigmaAgg::VarMean);

}  // namespace ddad
