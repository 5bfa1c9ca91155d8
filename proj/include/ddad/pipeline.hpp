#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddad/asr.hpp"
#include "ddad/report.hpp"
#include "ddad/splits.hpp"
#include "ddad/toy.hpp"
#include "ddad/train.hpp"

namespace ddad {

// Score kinds at the evaluation surface. a_rec is the single-member
// reconstruction baseline (member 0); a_rec_ens scores against the
// ensemble-mean reconstruction.
enum class EvalKind { ARec, ARecEnsemble, AIntra, AInter, RIntra, RDual };

std::string eval_kind_name(EvalKind k);
EvalKind eval_kind_from_name(const std::string& s);
std::vector<EvalKind> parse_eval_kinds(const std::string& csv);

struct RunConfig {
  std::filesystem::path out_dir;
  std::filesystem::path manifest_path;  // resolved after prepare
  uint64_t seed = 0;

  NetworkConfig net;
  TrainConfig train;
  AsrConfig asr;
  SplitConfig split;

  int eval_bins = 64;
  std::vector<EvalKind> eval_kinds;
  bool export_maps = false;
  SigmaAgg sigma_agg = SigmaAgg::VarMean;
  int dump_synth = 0;  // write this many synthetic pairs for inspection

  void validate() const;
};

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text,
                               const std::filesystem::path& base_dir);
RunConfig run_config_from_file(const std::filesystem::path& file);

// Digest over the semantic configuration (no paths), reported in run
// descriptors and metric metadata.
std::string config_digest(const RunConfig& cfg);

// --- run directory layout -------------------------------------------------
struct RunPaths {
  std::filesystem::path root;
  std::filesystem::path corpus() const { return root / "corpus"; }
  std::filesystem::path splits() const { return root / "splits.json"; }
  std::filesystem::path resolved_config() const {
    return root / "resolved_config.json";
  }
  std::filesystem::path stage1(ModuleTag tag) const {
    return root / "stage1" / module_tag_name(tag);
  }
  std::filesystem::path stage1_log(ModuleTag tag) const {
    return root / "stage1" / (module_tag_name(tag) + "_train_log.csv");
  }
  std::filesystem::path asr_dir(bool dual) const {
    return root / "asr" / (dual ? "dual" : "intra");
  }
  std::filesystem::path asr_log(bool dual) const {
    return root / "asr" / (std::string(dual ? "dual" : "intra") + "_train_log.csv");
  }
  std::filesystem::path report() const { return root / "report"; }
  std::filesystem::path sweep() const { return root / "sweep"; }
};

struct ToyParams {
  int n_normal = 0;
  int n_abnormal = 0;
  int side = 64;
};

// prepare: generate (toy) or validate (existing manifest) the corpus and
// persist the resolved splits under the run directory. Idempotent for a
// fixed seed.
DatasetSplit prepare_run(RunConfig& cfg, const std::optional<ToyParams>& toy);

// stage 1: train NDM (D_n) and/or UDM (D_n plus D_u), persist checkpoints.
void train_stage1_run(const RunConfig& cfg, bool do_ndm, bool do_udm,
                      const ProgressFn& progress = nullptr);

// stage 2: train the dual and/or intra-only refinement nets.
void train_asr_run(const RunConfig& cfg, bool do_dual, bool do_intra,
                   const AsrProgressFn& progress = nullptr);

struct KindResult {
  EvalKind kind = EvalKind::ARec;
  double auc_value = 0;
  double ap_value = 0;
  double chi2 = 0;
};

struct EvalOutput {
  std::vector<KindResult> results;
  std::vector<ScoreRow> scores;
  std::filesystem::path metrics_file;
};

EvalOutput evaluate_run(const RunConfig& cfg);

// Fig.-4 style protocol: for each anomaly ratio rebuild D_u, retrain UDM
// (NDM reused), recompute the requested kinds and their AUC. Kinds that
// need the refinement net retrain it per ratio.
std::vector<SweepRow> sweep_ar_run(const RunConfig& cfg,
                                   const std::vector<double>& ar_values,
                                   const ProgressFn& progress = nullptr);

// --- shared helpers ---------------------------------------------------------
std::vector<Image> load_images(const std::filesystem::path& base,
                               const std::vector<std::string>& paths, int side);

// Per-image scores of the requested kinds over the test split.
struct TestScores {
  // scores[kind][i] aligns with labels[i] / paths[i]
  std::map<EvalKind, std::vector<double>> scores;
  std::vector<int> labels;
  std::vector<std::string> paths;
};

TestScores score_test_set(const RunConfig& cfg, const DatasetSplit& split,
                          const EnsembleCheckpoint& ndm,
                          const EnsembleCheckpoint* udm,
                          AsrCheckpoint* asr_dual, AsrCheckpoint* asr_intra,
                          const std::vector<EvalKind>& kinds,
                          const std::filesystem::path* map_export_dir);

}  // namespace ddad
