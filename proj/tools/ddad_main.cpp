// Command-line front end for the dual-distribution anomaly detection
// pipeline: prepare / train-stage1 / train-asr / eval / sweep-ar.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ddad/pipeline.hpp"

namespace {

using namespace ddad;

struct CliOptions {
  RunConfig cfg;
  std::string config_file;
  std::string out_dir;
  std::string manifest;
  std::string kinds_csv;
  std::string sigma_agg = "var_mean";
  std::string backbone = "ae";
  bool dry_run = false;

  // prepare
  bool toy = false;
  ToyParams toy_params;

  // train-stage1
  std::string module = "both";

  // train-asr
  bool intra_only = false;
  bool dual_only = false;

  // sweep
  std::string sweep_csv;
};

RunConfig resolve_config(CliOptions& opt, const CLI::App& sub) {
  RunConfig cfg;
  if (!opt.config_file.empty()) cfg = run_config_from_file(opt.config_file);

  auto used = [&](const std::string& flag) {
    const CLI::Option* opt = sub.get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  if (used("--out") || cfg.out_dir.empty()) cfg.out_dir = opt.out_dir;
  if (used("--manifest")) cfg.manifest_path = opt.manifest;
  if (used("--seed")) cfg.seed = opt.cfg.seed;
  if (used("--side")) cfg.net.side = opt.cfg.net.side;
  if (used("--backbone")) cfg.net.backbone = backbone_from_name(opt.backbone);
  if (used("--k")) cfg.train.k = opt.cfg.train.k;
  if (used("--epochs")) cfg.train.epochs = opt.cfg.train.epochs;
  if (used("--lr")) cfg.train.learning_rate = opt.cfg.train.learning_rate;
  if (used("--batch")) cfg.train.batch_size = opt.cfg.train.batch_size;
  if (used("--asr-epochs")) cfg.asr.epochs = opt.cfg.asr.epochs;
  if (used("--asr-lr")) cfg.asr.learning_rate = opt.cfg.asr.learning_rate;
  if (used("--asr-batch")) cfg.asr.batch_size = opt.cfg.asr.batch_size;
  if (used("--asr-pairs")) cfg.asr.pairs_per_epoch = opt.cfg.asr.pairs_per_epoch;
  if (used("--gamma")) cfg.asr.gamma = opt.cfg.asr.gamma;
  if (used("--n-normal")) cfg.split.n_normal = opt.cfg.split.n_normal;
  if (used("--n-unlabeled")) cfg.split.n_unlabeled = opt.cfg.split.n_unlabeled;
  if (used("--ar")) cfg.split.anomaly_ratio = opt.cfg.split.anomaly_ratio;
  if (used("--n-test-normal"))
    cfg.split.n_test_normal = opt.cfg.split.n_test_normal;
  if (used("--n-test-abnormal"))
    cfg.split.n_test_abnormal = opt.cfg.split.n_test_abnormal;
  if (used("--bins")) cfg.eval_bins = opt.cfg.eval_bins;
  if (used("--export-maps")) cfg.export_maps = true;
  if (used("--kinds")) cfg.eval_kinds = parse_eval_kinds(opt.kinds_csv);
  if (used("--dump-synth")) cfg.dump_synth = opt.cfg.dump_synth;
  if (used("--sigma-agg"))
    cfg.sigma_agg = opt.sigma_agg == "std_mean" ? SigmaAgg::StdMean
                                                : SigmaAgg::VarMean;
  cfg.train.loss = cfg.net.backbone == Backbone::AEU ? "aeu" : "mse";
  return cfg;
}

void add_common_flags(CLI::App* sub, CliOptions& opt) {
  sub->add_option("--config", opt.config_file, "JSON run config (flags override)");
  sub->add_option("--out", opt.out_dir, "run output directory")->required();
  sub->add_option("--seed", opt.cfg.seed, "global seed (fans out to all stages)");
  sub->add_flag("--dry-run", opt.dry_run,
                "validate config and print the resolved plan, no side effects");
}

bool announce_dry_run(const CliOptions& opt, const RunConfig& cfg,
                      const std::string& action) {
  if (!opt.dry_run) return false;
  cfg.validate();
  std::printf("dry-run: %s\n%s", action.c_str(),
              run_config_to_json(cfg).c_str());
  return true;
}

void print_stage1_progress(const TrainProgress& p) {
  if (p.epoch == 1 || p.epoch == p.epochs || p.epoch % 10 == 0)
    std::fprintf(stderr, "[%s member %d] epoch %d/%d loss %.6f\n",
                 p.module_tag.c_str(), p.member, p.epoch, p.epochs, p.loss);
}

void print_asr_progress(int epoch, int epochs, double loss) {
  if (epoch == 1 || epoch == epochs || epoch % 10 == 0)
    std::fprintf(stderr, "[asr] epoch %d/%d focal loss %.6f\n", epoch, epochs,
                 loss);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Dual-distribution discrepancy anomaly detection pipeline"};
  app.require_subcommand(1);
  CliOptions opt;

  auto* prepare = app.add_subcommand(
      "prepare", "Generate or validate a corpus and resolve the data splits");
  add_common_flags(prepare, opt);
  prepare->add_option("--manifest", opt.manifest,
                      "manifest of an existing corpus");
  prepare->add_flag("--toy", opt.toy, "generate the procedural toy corpus");
  prepare->add_option("--normal", opt.toy_params.n_normal,
                      "toy: number of normal images");
  prepare->add_option("--abnormal", opt.toy_params.n_abnormal,
                      "toy: number of abnormal images");
  prepare->add_option("--side", opt.cfg.net.side, "image side in pixels");
  prepare->add_option("--n-normal", opt.cfg.split.n_normal, "|D_n|");
  prepare->add_option("--n-unlabeled", opt.cfg.split.n_unlabeled, "|D_u|");
  prepare->add_option("--ar", opt.cfg.split.anomaly_ratio,
                      "anomaly ratio of D_u");
  prepare->add_option("--n-test-normal", opt.cfg.split.n_test_normal,
                      "test normals");
  prepare->add_option("--n-test-abnormal", opt.cfg.split.n_test_abnormal,
                      "test abnormals");

  auto* train1 = app.add_subcommand("train-stage1",
                                    "Train the NDM/UDM reconstruction ensembles");
  add_common_flags(train1, opt);
  train1->add_option("--module", opt.module, "ndm|udm|both")
      ->check(CLI::IsMember({"ndm", "udm", "both"}));
  train1->add_option("--backbone", opt.backbone, "ae|aeu")
      ->check(CLI::IsMember({"ae", "aeu"}));
  train1->add_option("--k", opt.cfg.train.k, "ensemble size");
  train1->add_option("--epochs", opt.cfg.train.epochs, "training epochs");
  train1->add_option("--lr", opt.cfg.train.learning_rate, "learning rate");
  train1->add_option("--batch", opt.cfg.train.batch_size, "batch size");
  train1->add_option("--side", opt.cfg.net.side, "image side in pixels");

  auto* train2 = app.add_subcommand("train-asr",
                                    "Train the anomaly score refinement nets");
  add_common_flags(train2, opt);
  train2->add_flag("--intra-only", opt.intra_only,
                   "train only the single-channel net");
  train2->add_flag("--dual-only", opt.dual_only,
                   "train only the two-channel net");
  train2->add_option("--backbone", opt.backbone, "ae|aeu")
      ->check(CLI::IsMember({"ae", "aeu"}));
  train2->add_option("--asr-epochs", opt.cfg.asr.epochs, "epochs");
  train2->add_option("--asr-lr", opt.cfg.asr.learning_rate, "learning rate");
  train2->add_option("--asr-batch", opt.cfg.asr.batch_size, "batch size");
  train2->add_option("--asr-pairs", opt.cfg.asr.pairs_per_epoch,
                     "synthetic pairs per epoch (0: one per normal image)");
  train2->add_option("--gamma", opt.cfg.asr.gamma, "focal focusing parameter");
  train2->add_option("--side", opt.cfg.net.side, "image side in pixels");
  train2->add_option("--dump-synth", opt.cfg.dump_synth,
                     "write N synthetic pairs for inspection");

  auto* eval = app.add_subcommand(
      "eval", "Score the test split and report AUC/AP per score kind");
  add_common_flags(eval, opt);
  eval->add_option("--kinds", opt.kinds_csv,
                   "comma list: a_rec,a_rec_ens,a_intra,a_inter,r_intra,r_dual");
  eval->add_option("--bins", opt.cfg.eval_bins, "histogram bins");
  eval->add_flag("--export-maps", "export per-image score maps");
  eval->add_option("--backbone", opt.backbone, "ae|aeu")
      ->check(CLI::IsMember({"ae", "aeu"}));
  eval->add_option("--sigma-agg", opt.sigma_agg, "var_mean|std_mean")
      ->check(CLI::IsMember({"var_mean", "std_mean"}));
  eval->add_option("--side", opt.cfg.net.side, "image side in pixels");

  auto* sweep = app.add_subcommand(
      "sweep-ar", "Retrain the UDM across anomaly ratios and tabulate AUC");
  add_common_flags(sweep, opt);
  sweep->add_option("--sweep-ar", opt.sweep_csv,
                    "comma list of anomaly ratios, e.g. 0,0.5,1.0")
      ->required();
  sweep->add_option("--manifest", opt.manifest, "manifest of the corpus");
  sweep->add_option("--ar", opt.cfg.split.anomaly_ratio,
                    "base anomaly ratio (overridden per sweep value)");
  sweep->add_option("--kinds", opt.kinds_csv, "score kinds (default a_inter)");
  sweep->add_option("--backbone", opt.backbone, "ae|aeu")
      ->check(CLI::IsMember({"ae", "aeu"}));
  sweep->add_option("--k", opt.cfg.train.k, "ensemble size");
  sweep->add_option("--epochs", opt.cfg.train.epochs, "UDM training epochs");
  sweep->add_option("--lr", opt.cfg.train.learning_rate, "learning rate");
  sweep->add_option("--batch", opt.cfg.train.batch_size, "batch size");
  sweep->add_option("--n-normal", opt.cfg.split.n_normal, "|D_n|");
  sweep->add_option("--n-unlabeled", opt.cfg.split.n_unlabeled, "|D_u|");
  sweep->add_option("--n-test-normal", opt.cfg.split.n_test_normal,
                    "test normals");
  sweep->add_option("--n-test-abnormal", opt.cfg.split.n_test_abnormal,
                    "test abnormals");
  sweep->add_option("--side", opt.cfg.net.side, "image side in pixels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (prepare->parsed()) {
    RunConfig cfg = resolve_config(opt, *prepare);
    if (opt.toy) {
      opt.toy_params.side = cfg.net.side;
      if (announce_dry_run(opt, cfg, "prepare toy corpus + splits")) return 0;
      DatasetSplit split = prepare_run(cfg, opt.toy_params);
      std::printf("corpus: %s\nsplits: %zu normal / %zu unlabeled / %zu test\n",
                  cfg.manifest_path.string().c_str(), split.d_n.size(),
                  split.d_u.size(), split.d_t.size());
    } else {
      if (cfg.manifest_path.empty())
        throw ValidationError("prepare: --toy or --manifest is required");
      if (announce_dry_run(opt, cfg, "resolve splits from manifest")) return 0;
      DatasetSplit split = prepare_run(cfg, std::nullopt);
      std::printf("splits: %zu normal / %zu unlabeled / %zu test\n",
                  split.d_n.size(), split.d_u.size(), split.d_t.size());
    }
    return 0;
  }

  if (train1->parsed()) {
    RunConfig cfg = resolve_config(opt, *train1);
    const bool do_ndm = opt.module != "udm";
    const bool do_udm = opt.module != "ndm";
    if (announce_dry_run(opt, cfg, "train stage-1 module(s): " + opt.module))
      return 0;
    train_stage1_run(cfg, do_ndm, do_udm, print_stage1_progress);
    std::printf("stage-1 checkpoints written under %s\n",
                (cfg.out_dir / "stage1").string().c_str());
    return 0;
  }

  if (train2->parsed()) {
    RunConfig cfg = resolve_config(opt, *train2);
    if (opt.intra_only && opt.dual_only)
      throw ValidationError("train-asr: --intra-only and --dual-only conflict");
    const bool do_dual = !opt.intra_only;
    const bool do_intra = !opt.dual_only;
    if (announce_dry_run(opt, cfg, "train refinement net(s)")) return 0;
    train_asr_run(cfg, do_dual, do_intra, print_asr_progress);
    std::printf("refinement checkpoints written under %s\n",
                (cfg.out_dir / "asr").string().c_str());
    return 0;
  }

  if (eval->parsed()) {
    RunConfig cfg = resolve_config(opt, *eval);
    if (announce_dry_run(opt, cfg, "evaluate test split")) return 0;
    EvalOutput out = evaluate_run(cfg);
    std::printf("%-12s %8s %8s %8s\n", "kind", "auc", "ap", "chi2");
    for (const auto& r : out.results)
      std::printf("%-12s %8.4f %8.4f %8.4f\n",
                  eval_kind_name(r.kind).c_str(), r.auc_value, r.ap_value,
                  r.chi2);
    std::printf("report: %s\n", out.metrics_file.string().c_str());
    return 0;
  }

  if (sweep->parsed()) {
    RunConfig cfg = resolve_config(opt, *sweep);
    std::vector<double> ars;
    std::stringstream ss(opt.sweep_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      try {
        size_t pos = 0;
        double v = std::stod(item, &pos);
        if (pos != item.size()) throw std::invalid_argument(item);
        ars.push_back(v);
      } catch (const std::exception&) {
        throw ValidationError("sweep: bad anomaly ratio '" + item + "'");
      }
    }
    if (announce_dry_run(opt, cfg, "anomaly-ratio sweep")) return 0;
    auto rows = sweep_ar_run(cfg, ars, print_stage1_progress);
    std::printf("%-8s %-10s %8s\n", "ar", "kind", "auc");
    for (const auto& r : rows)
      std::printf("%-8g %-10s %8.4f\n", r.anomaly_ratio, r.score_kind.c_str(),
                  r.auc_value);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ddad::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ddad::ContractError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
