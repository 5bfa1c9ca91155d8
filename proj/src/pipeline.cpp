#include "ddad/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"

namespace ddad {

using nlohmann::json;

std::string eval_kind_name(EvalKind k) {
  switch (k) {
    case EvalKind::ARec: return "a_rec";
    case EvalKind::ARecEnsemble: return "a_rec_ens";
    case EvalKind::AIntra: return "a_intra";
    case EvalKind::AInter: return "a_inter";
    case EvalKind::RIntra: return "r_intra";
    case EvalKind::RDual: return "r_dual";
  }
  return "?";
}

EvalKind eval_kind_from_name(const std::string& s) {
  if (s == "a_rec") return EvalKind::ARec;
  if (s == "a_rec_ens") return EvalKind::ARecEnsemble;
  if (s == "a_intra") return EvalKind::AIntra;
  if (s == "a_inter") return EvalKind::AInter;
  if (s == "r_intra") return EvalKind::RIntra;
  if (s == "r_dual") return EvalKind::RDual;
  throw ValidationError(
      "unknown score kind '" + s +
      "' (valid: a_rec, a_rec_ens, a_intra, a_inter, r_intra, r_dual)");
}

std::vector<EvalKind> parse_eval_kinds(const std::string& csv) {
  std::vector<EvalKind> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(eval_kind_from_name(item));
  }
  if (out.empty()) throw ValidationError("no score kinds given");
  return out;
}

void RunConfig::validate() const {
  net.validate();
  train.validate();
  asr.validate();
  split.validate();
  if (eval_bins < 2) throw ValidationError("config: eval_bins must be >= 2");
  if (out_dir.empty()) throw ValidationError("config: out_dir is required");
}

namespace {

json run_config_semantic_json(const RunConfig& cfg) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = cfg.seed;
  j["net"] = {{"side", cfg.net.side},
              {"encoder_channels", cfg.net.encoder_channels},
              {"kernel", cfg.net.kernel},
              {"stride", cfg.net.stride},
              {"bottleneck_fc_layers", cfg.net.bottleneck_fc_layers},
              {"fc_hidden", cfg.net.fc_hidden},
              {"latent", cfg.net.latent},
              {"backbone", backbone_name(cfg.net.backbone)}};
  j["train"] = {{"k", cfg.train.k},
                {"epochs", cfg.train.epochs},
                {"learning_rate", cfg.train.learning_rate},
                {"batch_size", cfg.train.batch_size},
                {"member_seeds", cfg.train.member_seeds},
                {"loss", cfg.train.loss}};
  j["asr"] = {{"conv_layers", cfg.asr.conv_layers},
              {"hidden_channels", cfg.asr.hidden_channels},
              {"epochs", cfg.asr.epochs},
              {"learning_rate", cfg.asr.learning_rate},
              {"weight_decay", cfg.asr.weight_decay},
              {"gamma", cfg.asr.gamma},
              {"batch_size", cfg.asr.batch_size},
              {"pairs_per_epoch", cfg.asr.pairs_per_epoch}};
  j["split"] = {{"n_normal", cfg.split.n_normal},
                {"n_unlabeled", cfg.split.n_unlabeled},
                {"anomaly_ratio", cfg.split.anomaly_ratio},
                {"n_test_normal", cfg.split.n_test_normal},
                {"n_test_abnormal", cfg.split.n_test_abnormal}};
  json kinds = json::array();
  for (auto k : cfg.eval_kinds) kinds.push_back(eval_kind_name(k));
  j["eval"] = {{"bins", cfg.eval_bins},
               {"kinds", kinds},
               {"export_maps", cfg.export_maps},
               {"sigma_agg",
                cfg.sigma_agg == SigmaAgg::VarMean ? "var_mean" : "std_mean"}};
  return j;
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
  json j = run_config_semantic_json(cfg);
  j["out_dir"] = cfg.out_dir.string();
  j["manifest"] = cfg.manifest_path.string();
  j["config_digest"] = config_digest(cfg);
  return j.dump(2) + "\n";
}

std::string config_digest(const RunConfig& cfg) {
  const std::string canonical = run_config_semantic_json(cfg).dump();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical)));
  return buf;
}

RunConfig run_config_from_json(const std::string& text,
                               const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  }
  RunConfig cfg;
  cfg.seed = j.value("seed", uint64_t{0});
  if (j.contains("out_dir"))
    cfg.out_dir = base_dir / j.at("out_dir").get<std::string>();
  if (j.contains("manifest"))
    cfg.manifest_path = base_dir / j.at("manifest").get<std::string>();
  if (j.contains("net")) {
    const auto& n = j.at("net");
    cfg.net.side = n.value("side", cfg.net.side);
    if (n.contains("encoder_channels"))
      cfg.net.encoder_channels = n.at("encoder_channels").get<std::vector<int>>();
    cfg.net.kernel = n.value("kernel", cfg.net.kernel);
    cfg.net.stride = n.value("stride", cfg.net.stride);
    cfg.net.fc_hidden = n.value("fc_hidden", cfg.net.fc_hidden);
    cfg.net.latent = n.value("latent", cfg.net.latent);
    if (n.contains("backbone"))
      cfg.net.backbone = backbone_from_name(n.at("backbone").get<std::string>());
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    cfg.train.k = t.value("k", cfg.train.k);
    cfg.train.epochs = t.value("epochs", cfg.train.epochs);
    cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    if (t.contains("member_seeds"))
      cfg.train.member_seeds = t.at("member_seeds").get<std::vector<uint64_t>>();
  }
  if (j.contains("asr")) {
    const auto& a = j.at("asr");
    cfg.asr.hidden_channels = a.value("hidden_channels", cfg.asr.hidden_channels);
    cfg.asr.epochs = a.value("epochs", cfg.asr.epochs);
    cfg.asr.learning_rate = a.value("learning_rate", cfg.asr.learning_rate);
    cfg.asr.weight_decay = a.value("weight_decay", cfg.asr.weight_decay);
    cfg.asr.gamma = a.value("gamma", cfg.asr.gamma);
    cfg.asr.batch_size = a.value("batch_size", cfg.asr.batch_size);
    cfg.asr.pairs_per_epoch = a.value("pairs_per_epoch", cfg.asr.pairs_per_epoch);
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    cfg.split.n_normal = s.value("n_normal", cfg.split.n_normal);
    cfg.split.n_unlabeled = s.value("n_unlabeled", cfg.split.n_unlabeled);
    cfg.split.anomaly_ratio = s.value("anomaly_ratio", cfg.split.anomaly_ratio);
    cfg.split.n_test_normal = s.value("n_test_normal", cfg.split.n_test_normal);
    cfg.split.n_test_abnormal =
        s.value("n_test_abnormal", cfg.split.n_test_abnormal);
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    cfg.eval_bins = e.value("bins", cfg.eval_bins);
    cfg.export_maps = e.value("export_maps", cfg.export_maps);
    if (e.contains("kinds")) {
      cfg.eval_kinds.clear();
      for (const auto& k : e.at("kinds"))
        cfg.eval_kinds.push_back(eval_kind_from_name(k.get<std::string>()));
    }
    if (e.contains("sigma_agg")) {
      const std::string agg = e.at("sigma_agg").get<std::string>();
      if (agg == "var_mean")
        cfg.sigma_agg = SigmaAgg::VarMean;
      else if (agg == "std_mean")
        cfg.sigma_agg = SigmaAgg::StdMean;
      else
        throw ValidationError("run config: sigma_agg must be var_mean|std_mean");
    }
  }
  return cfg;
}

RunConfig run_config_from_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open config: " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return run_config_from_json(ss.str(), file.parent_path());
}

std::vector<Image> load_images(const std::filesystem::path& base,
                               const std::vector<std::string>& paths,
                               int side) {
  std::vector<Image> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(load_image(base / p, side));
  return out;
}

namespace {

// Rebase split paths from the manifest directory to the run directory so
// splits.json is self-contained relative to where it lives.
DatasetSplit rebase_split(DatasetSplit s, const std::filesystem::path& manifest_dir,
                          const std::filesystem::path& out_dir) {
  auto rebase = [&](const std::string& p) {
    return (manifest_dir / p).lexically_proximate(out_dir).generic_string();
  };
  for (auto& p : s.d_n) p = rebase(p);
  for (auto& p : s.d_u) p = rebase(p);
  for (auto& t : s.d_t) t.path = rebase(t.path);
  s.base_dir = out_dir;
  return s;
}

TrainConfig resolved_train_config(const RunConfig& cfg, ModuleTag tag) {
  TrainConfig tc = cfg.train;
  tc.loss = cfg.net.backbone == Backbone::AEU ? "aeu" : "mse";
  if (tc.member_seeds.empty())
    tc.member_seeds =
        default_member_seeds(cfg.seed, module_tag_name(tag), tc.k);
  return tc;
}

void write_train_log(const std::filesystem::path& file,
                     const std::vector<std::vector<double>>& losses) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << "member,epoch,loss\n";
  char buf[40];
  for (size_t m = 0; m < losses.size(); ++m)
    for (size_t e = 0; e < losses[m].size(); ++e) {
      std::snprintf(buf, sizeof(buf), "%.17g", losses[m][e]);
      out << m << "," << e + 1 << "," << buf << "\n";
    }
}

}  // namespace

DatasetSplit prepare_run(RunConfig& cfg, const std::optional<ToyParams>& toy) {
  std::filesystem::create_directories(cfg.out_dir);
  if (toy) {
    cfg.manifest_path = RunPaths{cfg.out_dir}.corpus() / "manifest.csv";
    generate_toy_corpus(RunPaths{cfg.out_dir}.corpus(), toy->n_normal,
                        toy->n_abnormal, toy->side,
                        derive_seed(cfg.seed, "data.toy"));
  }
  if (cfg.manifest_path.empty())
    throw ValidationError("prepare: either --toy or a manifest is required");
  if (!std::filesystem::exists(cfg.manifest_path))
    throw ValidationError("prepare: manifest does not exist: " +
                          cfg.manifest_path.string());
  Manifest manifest = parse_manifest(cfg.manifest_path);

  SplitConfig sc = cfg.split;
  sc.seed = derive_seed(cfg.seed, "data.split");
  DatasetSplit split = build_splits(manifest, sc);
  split = rebase_split(std::move(split), manifest.base_dir, cfg.out_dir);
  write_splits(split, RunPaths{cfg.out_dir}.splits());

  std::ofstream rc(RunPaths{cfg.out_dir}.resolved_config());
  if (!rc) throw IoError("cannot write resolved config");
  rc << run_config_to_json(cfg);
  return split;
}

void train_stage1_run(const RunConfig& cfg, bool do_ndm, bool do_udm,
                      const ProgressFn& progress) {
  RunPaths paths{cfg.out_dir};
  DatasetSplit split = read_splits(paths.splits());
  const int side = cfg.net.side;

  std::filesystem::create_directories(cfg.out_dir / "stage1");
  {
    TrainConfig tc = resolved_train_config(cfg, ModuleTag::NDM);
    json j;
    j["schema_version"] = kSchemaVersion;
    j["k"] = tc.k;
    j["epochs"] = tc.epochs;
    j["learning_rate"] = tc.learning_rate;
    j["batch_size"] = tc.batch_size;
    j["loss"] = tc.loss;
    j["ndm_member_seeds"] = tc.member_seeds;
    j["udm_member_seeds"] = resolved_train_config(cfg, ModuleTag::UDM).member_seeds;
    std::ofstream out(cfg.out_dir / "stage1" / "train_config.json");
    if (!out) throw IoError("cannot write stage1 train_config");
    out << j.dump(2) << "\n";
  }

  std::vector<Image> d_n = load_images(split.base_dir, split.d_n, side);

  if (do_ndm) {
    TrainResult res = train_ensemble(d_n, split.d_n,
                                     resolved_train_config(cfg, ModuleTag::NDM),
                                     cfg.net, ModuleTag::NDM, progress);
    save_ensemble(paths.stage1(ModuleTag::NDM), res.checkpoint);
    write_train_log(paths.stage1_log(ModuleTag::NDM), res.epoch_losses);
  }
  if (do_udm) {
    std::vector<Image> joint = d_n;
    std::vector<Image> d_u = load_images(split.base_dir, split.d_u, side);
    joint.insert(joint.end(), d_u.begin(), d_u.end());
    std::vector<std::string> joint_paths = split.d_n;
    joint_paths.insert(joint_paths.end(), split.d_u.begin(), split.d_u.end());
    TrainResult res = train_ensemble(joint, joint_paths,
                                     resolved_train_config(cfg, ModuleTag::UDM),
                                     cfg.net, ModuleTag::UDM, progress);
    save_ensemble(paths.stage1(ModuleTag::UDM), res.checkpoint);
    write_train_log(paths.stage1_log(ModuleTag::UDM), res.epoch_losses);
  }
}

void train_asr_run(const RunConfig& cfg, bool do_dual, bool do_intra,
                   const AsrProgressFn& progress) {
  RunPaths paths{cfg.out_dir};
  DatasetSplit split = read_splits(paths.splits());
  EnsembleCheckpoint ndm = load_ensemble(paths.stage1(ModuleTag::NDM));
  std::vector<Image> d_n = load_images(split.base_dir, split.d_n, cfg.net.side);

  if (cfg.dump_synth > 0)
    dump_synth_pairs(d_n, static_cast<size_t>(cfg.dump_synth),
                     derive_seed(cfg.seed, "asr.dump"),
                     cfg.out_dir / "asr" / "synth_samples");

  if (do_dual) {
    EnsembleCheckpoint udm = load_ensemble(paths.stage1(ModuleTag::UDM));
    AsrConfig ac = cfg.asr;
    ac.in_channels = 2;
    AsrTrainResult res = train_asr(ndm, &udm, d_n, ac,
                                   derive_seed(cfg.seed, "asr.dual"),
                                   cfg.sigma_agg, progress);
    save_asr(paths.asr_dir(true), res.checkpoint);
    write_train_log(paths.asr_log(true), {res.epoch_losses});
  }
  if (do_intra) {
    AsrConfig ac = cfg.asr;
    ac.in_channels = 1;
    AsrTrainResult res = train_asr(ndm, nullptr, d_n, ac,
                                   derive_seed(cfg.seed, "asr.intra"),
                                   cfg.sigma_agg, progress);
    save_asr(paths.asr_dir(false), res.checkpoint);
    write_train_log(paths.asr_log(false), {res.epoch_losses});
  }
}

TestScores score_test_set(const RunConfig& cfg, const DatasetSplit& split,
                          const EnsembleCheckpoint& ndm,
                          const EnsembleCheckpoint* udm,
                          AsrCheckpoint* asr_dual, AsrCheckpoint* asr_intra,
                          const std::vector<EvalKind>& kinds,
                          const std::filesystem::path* map_export_dir) {
  const int side = cfg.net.side;
  const size_t px = static_cast<size_t>(side) * side;
  const bool aeu = ndm.net_config.backbone == Backbone::AEU;

  const std::set<EvalKind> want(kinds.begin(), kinds.end());
  const bool need_udm = want.count(EvalKind::AInter) || want.count(EvalKind::RDual);
  if (need_udm && !udm)
    throw ContractError("evaluate: a_inter/r_dual need a UDM checkpoint");
  if (want.count(EvalKind::RDual) && !asr_dual)
    throw ContractError("evaluate: r_dual needs the dual refinement net");
  if (want.count(EvalKind::RIntra) && !asr_intra)
    throw ContractError("evaluate: r_intra needs the intra refinement net");
  if (split.d_t.empty()) throw ValidationError("evaluate: empty test split");

  TestScores out;
  for (auto k : kinds) out.scores[k] = {};
  MapProvenance prov{ndm.data_fingerprint,
                     udm ? udm->data_fingerprint : std::string()};

  constexpr size_t kEvalBatch = 64;
  for (size_t begin = 0; begin < split.d_t.size(); begin += kEvalBatch) {
    const size_t end = std::min(split.d_t.size(), begin + kEvalBatch);
    const size_t b = end - begin;
    Tensor<float> batch({static_cast<int64_t>(b), 1, side, side});
    std::vector<Image> images;
    images.reserve(b);
    for (size_t i = begin; i < end; ++i) {
      images.push_back(load_image(split.base_dir / split.d_t[i].path, side));
      std::copy_n(images.back().pix.data(), px,
                  batch.data() + (i - begin) * px);
    }

    auto ndm_fwd = ensemble_forward_batch(ndm, batch, cfg.sigma_agg);
    std::vector<EnsembleForward> udm_fwd;
    if (need_udm) udm_fwd = ensemble_forward_batch(*udm, batch, cfg.sigma_agg);

    for (size_t i = 0; i < b; ++i) {
      const auto& item = split.d_t[begin + i];
      out.labels.push_back(item.label);
      out.paths.push_back(item.path);

      // raw discrepancy maps, uncertainty-refined for AE-U backbones
      ScoreMap intra = score_intra(ndm_fwd[i]);
      if (aeu) intra = refine_by_uncertainty(intra, *ndm_fwd[i].sigma);
      ScoreMap inter;
      if (need_udm) {
        inter = score_inter(ndm_fwd[i], udm_fwd[i]);
        if (aeu) inter = refine_by_uncertainty(inter, *ndm_fwd[i].sigma);
      }

      for (auto kind : kinds) {
        ScoreMap map;
        switch (kind) {
          case EvalKind::ARec:
            map = score_rec(images[i], ndm_fwd[i].recons[0]);
            break;
          case EvalKind::ARecEnsemble:
            map = score_rec(images[i], ndm_fwd[i].mean);
            break;
          case EvalKind::AIntra:
            map = intra;
            break;
          case EvalKind::AInter:
            map = inter;
            break;
          case EvalKind::RIntra:
            map = refine(*asr_intra, {intra}, &prov).as_score_map();
            break;
          case EvalKind::RDual:
            map = refine(*asr_dual, {intra, inter}, &prov).as_score_map();
            break;
        }
        out.scores[kind].push_back(image_score(map));
        if (map_export_dir) {
          std::string stem = std::filesystem::path(item.path).stem().string();
          export_score_map(map, *map_export_dir / eval_kind_name(kind), stem);
        }
      }
    }
  }
  return out;
}

EvalOutput evaluate_run(const RunConfig& cfg) {
  RunPaths paths{cfg.out_dir};
  DatasetSplit split = read_splits(paths.splits());
  std::vector<EvalKind> kinds = cfg.eval_kinds;
  if (kinds.empty())
    kinds = {EvalKind::ARec, EvalKind::ARecEnsemble, EvalKind::AIntra,
             EvalKind::AInter, EvalKind::RIntra, EvalKind::RDual};

  const std::set<EvalKind> want(kinds.begin(), kinds.end());
  EnsembleCheckpoint ndm = load_ensemble(paths.stage1(ModuleTag::NDM));
  std::optional<EnsembleCheckpoint> udm;
  if (want.count(EvalKind::AInter) || want.count(EvalKind::RDual))
    udm = load_ensemble(paths.stage1(ModuleTag::UDM));
  std::optional<AsrCheckpoint> asr_dual, asr_intra;
  if (want.count(EvalKind::RDual)) asr_dual = load_asr(paths.asr_dir(true));
  if (want.count(EvalKind::RIntra)) asr_intra = load_asr(paths.asr_dir(false));

  std::filesystem::path maps_dir = paths.report() / "maps";
  TestScores ts = score_test_set(
      cfg, split, ndm, udm ? &*udm : nullptr,
      asr_dual ? &*asr_dual : nullptr, asr_intra ? &*asr_intra : nullptr,
      kinds, cfg.export_maps ? &maps_dir : nullptr);

  EvalOutput out;
  std::vector<MetricRow> metric_rows;
  std::filesystem::create_directories(paths.report());
  for (auto kind : kinds) {
    const auto& scores = ts.scores.at(kind);
    ScoredSet set;
    std::vector<double> normal_scores, abnormal_scores;
    for (size_t i = 0; i < scores.size(); ++i) {
      set.push_back({ts.paths[i], scores[i], ts.labels[i]});
      (ts.labels[i] == 1 ? abnormal_scores : normal_scores).push_back(scores[i]);
      out.scores.push_back(
          {ts.paths[i], eval_kind_name(kind), scores[i], ts.labels[i]});
    }
    KindResult r;
    r.kind = kind;
    r.auc_value = auc(set);
    r.ap_value = ap(set);
    HistogramPair hist =
        build_histogram_pair(normal_scores, abnormal_scores, cfg.eval_bins);
    r.chi2 = histogram_chi2(hist);
    write_histogram_csv(paths.report() / ("histogram_" + eval_kind_name(kind) +
                                          ".csv"),
                        hist, r.chi2);
    out.results.push_back(r);
    metric_rows.push_back({eval_kind_name(kind), r.auc_value, r.ap_value});
  }

  std::map<std::string, std::string> meta;
  meta["config_digest"] = config_digest(cfg);
  meta["seed"] = std::to_string(cfg.seed);
  meta["anomaly_ratio"] = std::to_string(split.anomaly_ratio);
  meta["backbone"] = backbone_name(cfg.net.backbone);
  meta["k"] = std::to_string(cfg.train.k);
  meta["bins"] = std::to_string(cfg.eval_bins);
  meta["ap_convention"] = "precision-at-each-positive, ties by stable id order";
  out.metrics_file = paths.report() / "metrics.csv";
  write_metrics_csv(out.metrics_file, metric_rows, meta);
  write_scores_csv(paths.report() / "scores.csv", out.scores);
  return out;
}

std::vector<SweepRow> sweep_ar_run(const RunConfig& cfg,
                                   const std::vector<double>& ar_values,
                                   const ProgressFn& progress) {
  RunPaths paths{cfg.out_dir};
  std::vector<SweepRow> rows;
  if (ar_values.empty()) {
    write_sweep_csv(paths.sweep() / "sweep.csv", rows,
                    {{"config_digest", config_digest(cfg)}});
    return rows;
  }

  Manifest manifest = parse_manifest(cfg.manifest_path);
  EnsembleCheckpoint ndm = load_ensemble(paths.stage1(ModuleTag::NDM));
  std::vector<EvalKind> kinds = cfg.eval_kinds;
  if (kinds.empty()) kinds = {EvalKind::AInter};
  const std::set<EvalKind> want(kinds.begin(), kinds.end());
  const bool need_udm =
      want.count(EvalKind::AInter) || want.count(EvalKind::RDual);
  const bool need_asr_dual = want.count(EvalKind::RDual);
  const bool need_asr_intra = want.count(EvalKind::RIntra);

  for (double ar : ar_values) {
    if (ar < 0.0 || ar > 1.0)
      throw ValidationError("sweep: anomaly ratio must be in [0,1]");
    char tag[32];
    std::snprintf(tag, sizeof(tag), "ar_%g", ar);
    const std::filesystem::path ar_dir = paths.sweep() / tag;
    std::filesystem::create_directories(ar_dir);

    SplitConfig sc = cfg.split;
    sc.anomaly_ratio = ar;
    sc.seed = derive_seed(cfg.seed, "data.split");
    DatasetSplit split = build_splits(manifest, sc);
    split = rebase_split(std::move(split), manifest.base_dir, ar_dir);
    write_splits(split, ar_dir / "splits.json");

    std::vector<Image> d_n = load_images(split.base_dir, split.d_n, cfg.net.side);

    std::optional<EnsembleCheckpoint> udm;
    if (need_udm) {
      std::vector<Image> joint = d_n;
      std::vector<Image> d_u = load_images(split.base_dir, split.d_u, cfg.net.side);
      joint.insert(joint.end(), d_u.begin(), d_u.end());
      std::vector<std::string> joint_paths = split.d_n;
      joint_paths.insert(joint_paths.end(), split.d_u.begin(), split.d_u.end());
      TrainResult res =
          train_ensemble(joint, joint_paths,
                         resolved_train_config(cfg, ModuleTag::UDM), cfg.net,
                         ModuleTag::UDM, progress);
      save_ensemble(ar_dir / "udm", res.checkpoint);
      udm = load_ensemble(ar_dir / "udm");
    }

    std::optional<AsrCheckpoint> asr_dual, asr_intra;
    if (need_asr_dual) {
      AsrConfig ac = cfg.asr;
      ac.in_channels = 2;
      auto res = train_asr(ndm, &*udm, d_n, ac,
                           derive_seed(cfg.seed, "asr.dual"), cfg.sigma_agg);
      save_asr(ar_dir / "asr_dual", res.checkpoint);
      asr_dual = std::move(res.checkpoint);
    }
    if (need_asr_intra) {
      AsrConfig ac = cfg.asr;
      ac.in_channels = 1;
      auto res = train_asr(ndm, nullptr, d_n, ac,
                           derive_seed(cfg.seed, "asr.intra"), cfg.sigma_agg);
      save_asr(ar_dir / "asr_intra", res.checkpoint);
      asr_intra = std::move(res.checkpoint);
    }

    TestScores ts = score_test_set(cfg, split, ndm, udm ? &*udm : nullptr,
                                   asr_dual ? &*asr_dual : nullptr,
                                   asr_intra ? &*asr_intra : nullptr, kinds,
                                   nullptr);
    for (auto kind : kinds) {
      ScoredSet set;
      const auto& scores = ts.scores.at(kind);
      for (size_t i = 0; i < scores.size(); ++i)
        set.push_back({ts.paths[i], scores[i], ts.labels[i]});
      rows.push_back({ar, eval_kind_name(kind), auc(set)});
    }
  }

  std::map<std::string, std::string> meta;
  meta["config_digest"] = config_digest(cfg);
  meta["seed"] = std::to_string(cfg.seed);
  write_sweep_csv(paths.sweep() / "sweep.csv", rows, meta);
  return rows;
}

}  // namespace ddad
