// Python bindings for the dual-distribution anomaly detection core.
// Exposes the data layer, the pure scoring/metric/synthesis operations on
// numpy arrays, and the coarse pipeline stages (prepare / train / eval).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ddad/pipeline.hpp"

namespace py = pybind11;
using namespace ddad;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Image image_from_array(const FloatArray& arr) {
  if (arr.ndim() != 2 || arr.shape(0) != arr.shape(1))
    throw ValidationError("expected a square 2-D float array");
  Image img(static_cast<int>(arr.shape(0)));
  std::copy_n(arr.data(), img.size(), img.pix.data());
  return img;
}

py::array_t<float> array_from_grid(const std::vector<float>& v, int side) {
  py::array_t<float> out({side, side});
  std::copy_n(v.data(), v.size(), out.mutable_data());
  return out;
}

ScoreMap map_from_array(const FloatArray& arr, ScoreKind kind) {
  ScoreMap m;
  if (arr.ndim() != 2 || arr.shape(0) != arr.shape(1))
    throw ValidationError("expected a square 2-D float array");
  m.side = static_cast<int>(arr.shape(0));
  m.kind = kind;
  m.values.assign(arr.data(), arr.data() + m.side * m.side);
  return m;
}

ScoredSet scored_set(const std::vector<double>& scores,
                     const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw ValidationError("scores and labels must have equal length");
  ScoredSet set;
  for (size_t i = 0; i < scores.size(); ++i)
    set.push_back({std::to_string(i), scores[i], labels[i]});
  return set;
}

RunConfig config_from_kwargs(const py::dict& d) {
  RunConfig cfg;
  if (d.contains("out_dir"))
    cfg.out_dir = d["out_dir"].cast<std::string>();
  if (d.contains("manifest"))
    cfg.manifest_path = d["manifest"].cast<std::string>();
  if (d.contains("seed")) cfg.seed = d["seed"].cast<uint64_t>();
  if (d.contains("side")) cfg.net.side = d["side"].cast<int>();
  if (d.contains("backbone"))
    cfg.net.backbone = backbone_from_name(d["backbone"].cast<std::string>());
  if (d.contains("k")) cfg.train.k = d["k"].cast<int>();
  if (d.contains("epochs")) cfg.train.epochs = d["epochs"].cast<int>();
  if (d.contains("learning_rate"))
    cfg.train.learning_rate = d["learning_rate"].cast<double>();
  if (d.contains("batch_size"))
    cfg.train.batch_size = d["batch_size"].cast<int>();
  if (d.contains("asr_epochs")) cfg.asr.epochs = d["asr_epochs"].cast<int>();
  if (d.contains("asr_batch_size"))
    cfg.asr.batch_size = d["asr_batch_size"].cast<int>();
  if (d.contains("asr_pairs_per_epoch"))
    cfg.asr.pairs_per_epoch = d["asr_pairs_per_epoch"].cast<int>();
  if (d.contains("gamma")) cfg.asr.gamma = d["gamma"].cast<double>();
  if (d.contains("n_normal")) cfg.split.n_normal = d["n_normal"].cast<int>();
  if (d.contains("n_unlabeled"))
    cfg.split.n_unlabeled = d["n_unlabeled"].cast<int>();
  if (d.contains("anomaly_ratio"))
    cfg.split.anomaly_ratio = d["anomaly_ratio"].cast<double>();
  if (d.contains("n_test_normal"))
    cfg.split.n_test_normal = d["n_test_normal"].cast<int>();
  if (d.contains("n_test_abnormal"))
    cfg.split.n_test_abnormal = d["n_test_abnormal"].cast<int>();
  if (d.contains("bins")) cfg.eval_bins = d["bins"].cast<int>();
  if (d.contains("kinds")) {
    cfg.eval_kinds.clear();
    for (auto k : d["kinds"])
      cfg.eval_kinds.push_back(eval_kind_from_name(k.cast<std::string>()));
  }
  if (d.contains("export_maps"))
    cfg.export_maps = d["export_maps"].cast<bool>();
  cfg.train.loss = cfg.net.backbone == Backbone::AEU ? "aeu" : "mse";
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_ddad, m) {
  m.doc() =
      "Dual-distribution discrepancy anomaly detection: reconstruction "
      "ensembles, discrepancy scores, self-supervised refinement.";

  py::register_exception<ValidationError>(m, "ValidationError",
                                          PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<DivergenceError>(m, "DivergenceError",
                                          PyExc_RuntimeError);

  // --- data -----------------------------------------------------------
  m.def(
      "generate_toy_corpus",
      [](const std::string& out_dir, int n_normal, int n_abnormal, int side,
         uint64_t seed) {
        generate_toy_corpus(out_dir, n_normal, n_abnormal, side, seed);
        return (std::filesystem::path(out_dir) / "manifest.csv").string();
      },
      py::arg("out_dir"), py::arg("n_normal"), py::arg("n_abnormal"),
      py::arg("side") = 64, py::arg("seed") = 0,
      "Write a procedural toy corpus and return the manifest path.");

  m.def(
      "load_image",
      [](const std::string& path, int side) {
        Image img = load_image(path, side);
        return array_from_grid(img.pix, img.side);
      },
      py::arg("path"), py::arg("side") = 64,
      "Load PNG/JPEG as grayscale [0,1], bilinearly resized to side x side.");

  m.def(
      "parse_manifest",
      [](const std::string& path) {
        Manifest man = parse_manifest(path);
        py::list out;
        for (const auto& e : man.entries) {
          py::dict d;
          d["path"] = e.path;
          d["split"] = split_name(e.split);
          if (e.label)
            d["label"] = *e.label;
          else
            d["label"] = py::none();
          out.append(d);
        }
        return out;
      },
      py::arg("path"), "Parse and validate a corpus manifest.");

  m.def(
      "build_splits",
      [](const std::string& manifest_path, int n_normal, int n_unlabeled,
         double anomaly_ratio, int n_test_normal, int n_test_abnormal,
         uint64_t seed) {
        Manifest man = parse_manifest(manifest_path);
        SplitConfig cfg;
        cfg.n_normal = n_normal;
        cfg.n_unlabeled = n_unlabeled;
        cfg.anomaly_ratio = anomaly_ratio;
        cfg.n_test_normal = n_test_normal;
        cfg.n_test_abnormal = n_test_abnormal;
        cfg.seed = seed;
        DatasetSplit s = build_splits(man, cfg);
        py::dict out;
        out["d_n"] = s.d_n;
        out["d_u"] = s.d_u;
        py::list dt;
        for (const auto& t : s.d_t) {
          py::dict item;
          item["path"] = t.path;
          item["label"] = t.label;
          dt.append(item);
        }
        out["d_t"] = dt;
        out["unlabeled_abnormal"] = s.unlabeled_abnormal;
        return out;
      },
      py::arg("manifest"), py::arg("n_normal"), py::arg("n_unlabeled"),
      py::arg("anomaly_ratio"), py::arg("n_test_normal"),
      py::arg("n_test_abnormal"), py::arg("seed") = 0,
      "Resolve (D_n, D_u, D_t) from a manifest with anomaly-ratio control.");

  // --- pure operations --------------------------------------------------
  m.def(
      "score_rec",
      [](const FloatArray& x, const FloatArray& recon) {
        Image img = image_from_array(x);
        std::vector<float> r(recon.data(), recon.data() + recon.size());
        ScoreMap map = score_rec(img, r);
        return array_from_grid(map.values, map.side);
      },
      py::arg("x"), py::arg("recon"), "Per-pixel squared error.");

  m.def(
      "score_intra",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>&
             recons) {
        if (recons.ndim() != 3)
          throw ValidationError("expected (K, side, side) array");
        EnsembleForward f;
        const int k = static_cast<int>(recons.shape(0));
        f.side = static_cast<int>(recons.shape(1));
        const size_t px = static_cast<size_t>(f.side) * f.side;
        f.mean.assign(px, 0.f);
        for (int i = 0; i < k; ++i) {
          const float* p = recons.data() + static_cast<size_t>(i) * px;
          f.recons.emplace_back(p, p + px);
          for (size_t j = 0; j < px; ++j) f.mean[j] += p[j];
        }
        for (float& v : f.mean) v /= static_cast<float>(k);
        ScoreMap map = score_intra(f);
        return array_from_grid(map.values, map.side);
      },
      py::arg("recons"),
      "Per-pixel population std over a (K, side, side) reconstruction stack.");

  m.def(
      "score_inter",
      [](const FloatArray& mean_a, const FloatArray& mean_b) {
        EnsembleForward a, b;
        a.side = b.side = static_cast<int>(mean_a.shape(0));
        a.mean.assign(mean_a.data(), mean_a.data() + mean_a.size());
        b.mean.assign(mean_b.data(), mean_b.data() + mean_b.size());
        a.recons = {a.mean};
        b.recons = {b.mean};
        ScoreMap map = score_inter(a, b);
        return array_from_grid(map.values, map.side);
      },
      py::arg("mean_a"), py::arg("mean_b"),
      "Per-pixel |mean_a - mean_b| between module mean reconstructions.");

  m.def(
      "refine_by_uncertainty",
      [](const FloatArray& map, const FloatArray& sigma, const std::string& kind) {
        ScoreMap sm = map_from_array(map, score_kind_from_name(kind));
        std::vector<float> s(sigma.data(), sigma.data() + sigma.size());
        ScoreMap out = refine_by_uncertainty(sm, s);
        return array_from_grid(out.values, out.side);
      },
      py::arg("map"), py::arg("sigma"), py::arg("kind") = "a_intra");

  m.def(
      "image_score",
      [](const FloatArray& map) {
        return image_score(map_from_array(map, ScoreKind::AIntra));
      },
      py::arg("map"), "Mean over pixels.");

  m.def(
      "sample_patch",
      [](int side, uint64_t seed) {
        Rng rng(seed);
        PatchSpec p = sample_patch(side, rng);
        py::dict d;
        d["cx"] = p.cx;
        d["cy"] = p.cy;
        d["size"] = p.size;
        d["box"] = py::make_tuple(p.x0, p.y0, p.x1, p.y1);
        return d;
      },
      py::arg("side"), py::arg("seed") = 0);

  m.def(
      "fpi_blend",
      [](const FloatArray& x, const FloatArray& x_f, double alpha,
         uint64_t seed) {
        Image a = image_from_array(x);
        Image b = image_from_array(x_f);
        Rng rng(seed);
        PatchSpec p = sample_patch(a.side, rng);
        SynthPair pair = fpi_blend(a, b, p, alpha);
        std::vector<float> mask(pair.y_s.begin(), pair.y_s.end());
        return py::make_tuple(array_from_grid(pair.x_s.pix, a.side),
                              array_from_grid(mask, a.side));
      },
      py::arg("x"), py::arg("x_f"), py::arg("alpha"), py::arg("seed") = 0,
      "Foreign-patch interpolation; returns (x_s, y_s mask).");

  // --- losses & metrics -------------------------------------------------
  m.def(
      "focal_loss",
      [](const FloatArray& pred, const FloatArray& target, double gamma) {
        Tensor<float> p({pred.shape(0), pred.shape(1)});
        Tensor<float> t({target.shape(0), target.shape(1)});
        std::copy_n(pred.data(), pred.size(), p.data());
        std::copy_n(target.data(), target.size(), t.data());
        return focal_loss(p, t, gamma);
      },
      py::arg("pred"), py::arg("target"), py::arg("gamma") = 2.0);

  m.def(
      "auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        return auc(scored_set(scores, labels));
      },
      py::arg("scores"), py::arg("labels"),
      "Mann-Whitney AUC with 0.5 tie credit.");

  m.def(
      "ap",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        return ap(scored_set(scores, labels));
      },
      py::arg("scores"), py::arg("labels"),
      "Average precision (precision at each positive's rank).");

  m.def(
      "histogram_chi2",
      [](const std::vector<double>& normal, const std::vector<double>& abnormal,
         int bins) { return histogram_chi2(normal, abnormal, bins); },
      py::arg("normal_scores"), py::arg("abnormal_scores"), py::arg("bins") = 64);

  // --- pipeline stages ----------------------------------------------------
  m.def(
      "prepare",
      [](const py::kwargs& kw) {
        py::dict d(**kw);
        RunConfig cfg = config_from_kwargs(d);
        std::optional<ToyParams> toy;
        if (d.contains("toy_normal")) {
          ToyParams t;
          t.n_normal = d["toy_normal"].cast<int>();
          t.n_abnormal = d["toy_abnormal"].cast<int>();
          t.side = cfg.net.side;
          toy = t;
        }
        DatasetSplit split = prepare_run(cfg, toy);
        py::dict out;
        out["manifest"] = cfg.manifest_path.string();
        out["d_n"] = split.d_n.size();
        out["d_u"] = split.d_u.size();
        out["d_t"] = split.d_t.size();
        return out;
      },
      "Generate/validate the corpus and resolve splits under out_dir.");

  m.def(
      "train_stage1",
      [](const py::kwargs& kw) {
        py::dict d(**kw);
        RunConfig cfg = config_from_kwargs(d);
        bool ndm = !d.contains("module") ||
                   d["module"].cast<std::string>() != "udm";
        bool udm = !d.contains("module") ||
                   d["module"].cast<std::string>() != "ndm";
        train_stage1_run(cfg, ndm, udm);
      },
      "Train the NDM/UDM reconstruction ensembles.");

  m.def(
      "train_asr",
      [](const py::kwargs& kw) {
        py::dict d(**kw);
        RunConfig cfg = config_from_kwargs(d);
        bool dual = !d.contains("which") ||
                    d["which"].cast<std::string>() != "intra";
        bool intra = !d.contains("which") ||
                     d["which"].cast<std::string>() != "dual";
        train_asr_run(cfg, dual, intra);
      },
      "Train the anomaly score refinement nets.");

  m.def(
      "evaluate",
      [](const py::kwargs& kw) {
        py::dict d(**kw);
        RunConfig cfg = config_from_kwargs(d);
        EvalOutput out = evaluate_run(cfg);
        py::dict res;
        for (const auto& r : out.results) {
          py::dict row;
          row["auc"] = r.auc_value;
          row["ap"] = r.ap_value;
          row["chi2"] = r.chi2;
          res[py::str(eval_kind_name(r.kind))] = row;
        }
        return res;
      },
      "Score the test split; returns {kind: {auc, ap, chi2}}.");

  m.def(
      "sweep_ar",
      [](const std::vector<double>& ar_values, const py::kwargs& kw) {
        py::dict d(**kw);
        RunConfig cfg = config_from_kwargs(d);
        auto rows = sweep_ar_run(cfg, ar_values);
        py::list out;
        for (const auto& r : rows) {
          py::dict row;
          row["anomaly_ratio"] = r.anomaly_ratio;
          row["kind"] = r.score_kind;
          row["auc"] = r.auc_value;
          out.append(row);
        }
        return out;
      },
      py::arg("ar_values"),
      "Retrain the UDM across anomaly ratios and tabulate AUC.");

  m.attr("__version__") = "0.1.0";
}
