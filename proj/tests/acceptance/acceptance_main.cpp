// Acceptance gate: one pass/fail line per criterion.
//
//   1  formula unit suite (hand-evaluated cases, 1e-6)
//   2  metric oracle equivalence (brute force + monotone invariance)
//   3  gradient checks (analytic vs central finite differences, 1e-4)
//   4  degenerate-structure invariants
//   5  end-to-end toy run: score-kind AUC orderings
//   6  anomaly-ratio trend (Spearman > 0, AR=0 beats the baseline)
//   7  determinism: two runs, byte-identical checkpoints and reports
//   8  offline reproduction recipe (documented, not gated here)
//
// Criteria 5-7 train the full toy pipeline on the CPU and take the bulk
// of the runtime. `--criteria 1,2,3` restricts the set; `--out DIR` picks
// the work directory.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ddad/losses.hpp"
#include "ddad/pipeline.hpp"

using namespace ddad;
namespace fs = std::filesystem;

namespace {

int checks_failed = 0;
int checks_run = 0;

void expect(bool ok, const std::string& what) {
  ++checks_run;
  if (!ok) {
    ++checks_failed;
    std::printf("    FAILED check: %s\n", what.c_str());
  }
}

void expect_near(double got, double want, double tol, const std::string& what) {
  std::ostringstream ss;
  ss << what << " (got " << got << ", want " << want << " +- " << tol << ")";
  expect(std::fabs(got - want) <= tol, ss.str());
}

template <typename T>
Tensor<T> filled(std::vector<int64_t> shape, T v) {
  Tensor<T> t(std::move(shape));
  t.fill(v);
  return t;
}

// ---------------------------------------------------------------------------
// criterion 1: formula hand cases at 1e-6
// ---------------------------------------------------------------------------
bool criterion1() {
  const double tol = 1e-6;

  // reconstruction objective: mean squared error over batch and pixels
  {
    auto x = filled<double>({1, 1, 2, 2}, 1.0);
    expect_near(loss_mse(x, x), 0.0, tol, "mse: perfect reconstruction");
    auto zero = filled<double>({1, 1, 2, 2}, 0.0);
    expect_near(loss_mse(x, zero), 1.0, tol, "mse: unit residual");
    auto half = filled<double>({1, 1, 2, 2}, 0.5);
    expect_near(loss_mse(x, zero), 4.0 * loss_mse(x, half), tol,
                "mse: quadratic in the residual");
  }
  // uncertainty-weighted objective
  {
    auto x = filled<double>({1, 1, 2, 2}, 0.7);
    auto lv0 = filled<double>({1, 1, 2, 2}, 0.0);
    expect_near(loss_aeu(x, x, lv0), 0.0, tol, "aeu: zero residual, unit var");
    const double e = 0.3;
    auto x1 = filled<double>({1, 1, 1, 1}, 0.0);
    auto r1 = filled<double>({1, 1, 1, 1}, e);
    auto lv_opt = filled<double>({1, 1, 1, 1}, std::log(e * e));
    expect_near(loss_aeu(x1, r1, lv_opt), 1.0 + std::log(e * e), tol,
                "aeu: optimum at var = residual^2 is 1 + log e^2");
    Rng rng(1);
    auto xs = filled<double>({1, 1, 3, 3}, 0.0);
    auto rs = filled<double>({1, 1, 3, 3}, 0.0);
    for (int64_t i = 0; i < xs.numel(); ++i) {
      xs[i] = rng.uniform();
      rs[i] = rng.uniform();
    }
    auto lv = filled<double>({1, 1, 3, 3}, 0.0);
    expect_near(loss_aeu(xs, rs, lv), loss_mse(xs, rs), tol,
                "aeu: reduces to mse at unit variance");
  }
  // per-pixel scores
  {
    Image x(1, 0.5f);
    expect_near(score_rec(x, {0.2f}).values[0], 0.09, tol,
                "rec score: (0.5-0.2)^2");
    EnsembleForward two;
    two.side = 1;
    two.recons = {{0.4f}, {0.6f}};
    two.mean = {0.5f};
    expect_near(score_intra(two).values[0], 0.1, tol,
                "intra: two members 0.4/0.6");
    EnsembleForward three;
    three.side = 1;
    three.recons = {{0.1f}, {0.2f}, {0.3f}};
    three.mean = {0.2f};
    expect_near(score_intra(three).values[0], std::sqrt(0.02 / 3.0), tol,
                "intra: three members 0.1/0.2/0.3");
    EnsembleForward a, b;
    a.side = b.side = 1;
    a.recons = {{0.5f}};
    a.mean = {0.5f};
    b.recons = {{0.8f}};
    b.mean = {0.8f};
    expect_near(score_inter(a, b).values[0], 0.3, tol, "inter: |0.5-0.8|");
    expect_near(score_inter(b, a).values[0], 0.3, tol, "inter: symmetric");
  }
  // uncertainty refinement
  {
    ScoreMap m;
    m.side = 1;
    m.kind = ScoreKind::AIntra;
    m.values = {0.2f};
    expect_near(refine_by_uncertainty(m, {1.f}).values[0], 0.2, tol,
                "refine: sigma 1 is identity");
    expect_near(refine_by_uncertainty(m, {2.f}).values[0], 0.1, tol,
                "refine: 0.2 / 2");
    ScoreMap big;
    big.side = 2;
    big.kind = ScoreKind::AInter;
    big.values = {0.2f, 0.6f, 0.4f, 0.8f};
    auto r1 = refine_by_uncertainty(big, {0.5f, 0.5f, 0.5f, 0.5f});
    auto r2 = refine_by_uncertainty(big, {1.0f, 1.0f, 1.0f, 1.0f});
    for (int i = 0; i < 4; ++i)
      expect_near(r1.values[i], 2.0 * r2.values[i], tol,
                  "refine: doubling sigma halves the score");
  }
  // image-level aggregation
  {
    ScoreMap m;
    m.side = 2;
    m.values = {0.f, 0.f, 0.4f, 0.f};
    expect_near(image_score(m), 0.1, tol, "image score: 2x2 mean");
    m.values = {0.7f, 0.7f, 0.7f, 0.7f};
    expect_near(image_score(m), 0.7, tol, "image score: constant map");
  }
  // patch synthesis
  {
    Image x(32, 0.2f), xf(32, 0.8f);
    Rng rng(5);
    PatchSpec p = sample_patch(32, rng);
    expect_near(fpi_blend(x, xf, p, 0.5).x_s.at(p.y0, p.x0), 0.5, tol,
                "blend: 0.2/0.8 at alpha 0.5");
    expect(fpi_blend(x, xf, p, 0.0).x_s.pix == x.pix,
           "blend: alpha 0 is identity");
    auto one = fpi_blend(x, xf, p, 1.0);
    expect(one.x_s.at(p.y0, p.x0) == xf.at(p.y0, p.x0),
           "blend: alpha 1 copies the patch");
    Rng rng64(7);
    bool bounds_ok = true;
    for (int i = 0; i < 10000; ++i) {
      PatchSpec q = sample_patch(64, rng64);
      bounds_ok = bounds_ok && q.cx >= 6.4 && q.cx <= 57.6 && q.cy >= 6.4 &&
                  q.cy <= 57.6 && q.size >= 6.4 && q.size <= 25.6;
    }
    expect(bounds_ok, "patch: d=64 bounds [6.4,57.6] / [6.4,25.6]");
  }
  // focal loss
  {
    auto pred = filled<double>({1, 1, 1, 1}, 0.5);
    auto pos = filled<double>({1, 1, 1, 1}, 1.0);
    expect_near(focal_loss(pred, pos, 0.0), 0.6931472, tol,
                "focal: gamma 0 at p_t 0.5 is ln 2");
    expect_near(focal_loss(pred, pos, 2.0), 0.25 * std::log(2.0), tol,
                "focal: gamma 2 at p_t 0.5 is 0.25 ln 2");
    auto perfect = filled<double>({1, 1, 1, 1}, 1.0);
    expect(focal_loss(perfect, pos, 2.0) < 1e-9,
           "focal: perfect prediction -> 0");
  }
  return checks_failed == 0;
}

// ---------------------------------------------------------------------------
// criterion 2: metric oracles
// ---------------------------------------------------------------------------
double auc_bruteforce(const ScoredSet& set) {
  double wins = 0;
  int64_t pairs = 0;
  for (const auto& p : set) {
    if (p.label != 1) continue;
    for (const auto& n : set) {
      if (n.label != 0) continue;
      ++pairs;
      if (p.score > n.score)
        wins += 1.0;
      else if (p.score == n.score)
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

double ap_bruteforce(const ScoredSet& set) {
  const size_t n = set.size();
  std::vector<size_t> rank(n);
  for (size_t i = 0; i < n; ++i) {
    size_t r = 1;
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (set[j].score > set[i].score ||
          (set[j].score == set[i].score && j < i))
        ++r;
    }
    rank[i] = r;
  }
  double acc = 0;
  size_t n_pos = 0;
  for (size_t i = 0; i < n; ++i) {
    if (set[i].label != 1) continue;
    ++n_pos;
    size_t tp = 0;
    for (size_t j = 0; j < n; ++j)
      if (set[j].label == 1 && rank[j] <= rank[i]) ++tp;
    acc += static_cast<double>(tp) / static_cast<double>(rank[i]);
  }
  return acc / static_cast<double>(n_pos);
}

bool criterion2() {
  Rng rng(12345);
  auto random_set = [&]() {
    while (true) {
      const size_t n = 2 + rng.below(49);
      ScoredSet set;
      bool pos = false, neg = false;
      for (size_t i = 0; i < n; ++i) {
        ScoredItem item;
        item.id = "i" + std::to_string(i);
        item.score = static_cast<double>(rng.below(12)) / 11.0;
        item.label = rng.below(2) ? 1 : 0;
        (item.label ? pos : neg) = true;
        set.push_back(item);
      }
      if (pos && neg) return set;
    }
  };

  bool auc_ok = true, ap_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    ScoredSet set = random_set();
    if (std::fabs(auc(set) - auc_bruteforce(set)) > 1e-12) auc_ok = false;
    if (std::fabs(ap(set) - ap_bruteforce(set)) > 1e-12) ap_ok = false;
  }
  expect(auc_ok, "auc matches the all-pairs oracle on 1000 random sets");
  expect(ap_ok, "ap matches the rank-walk oracle on 1000 random sets");

  bool invariant_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    ScoredSet set = random_set();
    const double base = auc(set);
    const double a = rng.uniform(0.1, 3.0), b = rng.uniform(0.1, 2.0);
    const double c = rng.uniform(0.0, 2.0), d = rng.uniform(-5.0, 5.0);
    for (auto& item : set)
      item.score = a * std::exp(b * item.score) + c * item.score + d;
    if (std::fabs(auc(set) - base) > 1e-12) invariant_ok = false;
  }
  expect(invariant_ok, "auc invariant under 100 monotone transforms");
  return checks_failed == 0;
}

// ---------------------------------------------------------------------------
// criterion 3: gradient checks at 1e-4 relative
// ---------------------------------------------------------------------------
bool criterion3() {
  Rng rng(777);
  auto rel_ok = [](double fd, double an) {
    const double scale = std::max({std::fabs(fd), std::fabs(an), 1e-6});
    return std::fabs(fd - an) / scale < 1e-4;
  };
  const double h = 1e-6;

  Tensor<double> x({1, 1, 4, 4}), recon({1, 1, 4, 4}), lv({1, 1, 4, 4});
  Tensor<double> target({1, 1, 4, 4});
  for (int64_t i = 0; i < x.numel(); ++i) {
    x[i] = rng.uniform();
    recon[i] = rng.uniform(0.1, 0.9);
    lv[i] = rng.uniform(-1.0, 1.0);
    target[i] = rng.below(2) ? 1.0 : 0.0;
  }

  {
    Tensor<double> g;
    loss_mse(x, recon, &g);
    bool ok = true;
    for (int64_t i = 0; i < recon.numel(); ++i) {
      const double keep = recon[i];
      recon[i] = keep + h;
      const double up = loss_mse(x, recon);
      recon[i] = keep - h;
      const double down = loss_mse(x, recon);
      recon[i] = keep;
      ok = ok && rel_ok((up - down) / (2 * h), g[i]);
    }
    expect(ok, "loss_mse gradient vs central differences");
  }
  {
    Tensor<double> gr, gl;
    loss_aeu(x, recon, lv, &gr, &gl);
    bool ok = true;
    for (int64_t i = 0; i < recon.numel(); ++i) {
      const double keep = recon[i];
      recon[i] = keep + h;
      const double up = loss_aeu(x, recon, lv);
      recon[i] = keep - h;
      const double down = loss_aeu(x, recon, lv);
      recon[i] = keep;
      ok = ok && rel_ok((up - down) / (2 * h), gr[i]);
    }
    for (int64_t i = 0; i < lv.numel(); ++i) {
      const double keep = lv[i];
      lv[i] = keep + h;
      const double up = loss_aeu(x, recon, lv);
      lv[i] = keep - h;
      const double down = loss_aeu(x, recon, lv);
      lv[i] = keep;
      ok = ok && rel_ok((up - down) / (2 * h), gl[i]);
    }
    expect(ok, "loss_aeu gradients (recon and log-variance)");
  }
  for (double gamma : {0.0, 2.0}) {
    Tensor<double> pred({1, 1, 4, 4});
    for (int64_t i = 0; i < pred.numel(); ++i) pred[i] = rng.uniform(0.1, 0.9);
    Tensor<double> g;
    focal_loss(pred, target, gamma, &g);
    bool ok = true;
    for (int64_t i = 0; i < pred.numel(); ++i) {
      const double keep = pred[i];
      pred[i] = keep + h;
      const double up = focal_loss(pred, target, gamma);
      pred[i] = keep - h;
      const double down = focal_loss(pred, target, gamma);
      pred[i] = keep;
      ok = ok && rel_ok((up - down) / (2 * h), g[i]);
    }
    expect(ok, "focal_loss gradient at gamma " + std::to_string(gamma));
  }
  return checks_failed == 0;
}

// ---------------------------------------------------------------------------
// criterion 4: degenerate-structure invariants
// ---------------------------------------------------------------------------
bool criterion4() {
  NetworkConfig nc;
  nc.side = 16;

  {
    EnsembleCheckpoint single;
    single.net_config = nc;
    single.members.push_back(std::make_unique<Autoencoder<float>>(nc, 3));
    Image x(16, 0.5f);
    ScoreMap m = score_intra(ensemble_forward(single, x));
    bool all_zero = true;
    for (float v : m.values) all_zero = all_zero && v == 0.f;
    expect(all_zero, "K=1 makes a_intra identically zero");
  }
  {
    EnsembleCheckpoint ndm, udm;
    ndm.net_config = udm.net_config = nc;
    for (uint64_t s : {5ull, 6ull}) {
      ndm.members.push_back(std::make_unique<Autoencoder<float>>(nc, s));
      udm.members.push_back(std::make_unique<Autoencoder<float>>(nc, s));
    }
    Image x(16, 0.25f);
    ScoreMap m = score_inter(ensemble_forward(ndm, x), ensemble_forward(udm, x));
    bool all_zero = true;
    for (float v : m.values) all_zero = all_zero && v == 0.f;
    expect(all_zero, "identical NDM/UDM checkpoints make a_inter zero");
  }
  {
    ScoreMap m;
    m.side = 4;
    m.kind = ScoreKind::AInter;
    Rng rng(8);
    m.values.resize(16);
    for (auto& v : m.values) v = static_cast<float>(rng.uniform());
    ScoreMap r = refine_by_uncertainty(m, std::vector<float>(16, 1.f));
    bool same = true;
    for (size_t i = 0; i < 16; ++i)
      same = same && std::fabs(r.values[i] - m.values[i]) <= 1e-6f;
    expect(same, "sigma == 1 refinement is the identity");
  }
  {
    Rng rng(9);
    Tensor<double> pred({1, 1, 8, 8}), target({1, 1, 8, 8});
    for (int64_t i = 0; i < pred.numel(); ++i) {
      pred[i] = rng.uniform(0.02, 0.98);
      target[i] = rng.below(2) ? 1.0 : 0.0;
    }
    double bce = 0;
    for (int64_t i = 0; i < pred.numel(); ++i)
      bce += target[i] > 0.5 ? -std::log(pred[i]) : -std::log(1.0 - pred[i]);
    bce /= pred.numel();
    expect(std::fabs(focal_loss(pred, target, 0.0) - bce) < 1e-9,
           "gamma == 0 focal loss equals cross-entropy");
  }
  return checks_failed == 0;
}

// ---------------------------------------------------------------------------
// criteria 5-7: the end-to-end toy protocol
// ---------------------------------------------------------------------------
RunConfig toy_run_config(const fs::path& out) {
  RunConfig cfg;
  cfg.out_dir = out;
  cfg.seed = 1;
  cfg.net.side = 64;
  cfg.net.backbone = Backbone::AE;
  cfg.train.k = 3;
  cfg.train.epochs = 50;
  cfg.train.batch_size = 64;
  cfg.train.learning_rate = 5e-4;
  cfg.asr.epochs = 50;
  cfg.asr.batch_size = 64;
  cfg.asr.pairs_per_epoch = 0;  // one pair per normal image
  cfg.split.n_normal = 1000;
  cfg.split.n_unlabeled = 600;
  cfg.split.anomaly_ratio = 0.6;
  cfg.split.n_test_normal = 200;
  cfg.split.n_test_abnormal = 200;
  cfg.eval_kinds = {EvalKind::ARec, EvalKind::ARecEnsemble, EvalKind::AIntra,
                    EvalKind::AInter, EvalKind::RIntra, EvalKind::RDual};
  return cfg;
}

void progress_line(const TrainProgress& p) {
  if (p.epoch == p.epochs || p.epoch % 10 == 0)
    std::fprintf(stderr, "    [%s m%d] epoch %d/%d loss %.6f\n",
                 p.module_tag.c_str(), p.member, p.epoch, p.epochs, p.loss);
}

void asr_progress_line(int epoch, int epochs, double loss) {
  if (epoch == epochs || epoch % 10 == 0)
    std::fprintf(stderr, "    [asr] epoch %d/%d loss %.6f\n", epoch, epochs,
                 loss);
}

std::map<std::string, double> run_toy_pipeline(const fs::path& out) {
  RunConfig cfg = toy_run_config(out);
  ToyParams toy{1800, 800, 64};
  prepare_run(cfg, toy);
  train_stage1_run(cfg, true, true, progress_line);
  train_asr_run(cfg, true, true, asr_progress_line);
  EvalOutput eval = evaluate_run(cfg);
  std::map<std::string, double> aucs;
  for (const auto& r : eval.results) {
    aucs[eval_kind_name(r.kind)] = r.auc_value;
    std::printf("    %-10s auc %.4f  ap %.4f  chi2 %.4f\n",
                eval_kind_name(r.kind).c_str(), r.auc_value, r.ap_value,
                r.chi2);
  }
  return aucs;
}

bool criterion5(const fs::path& work, std::map<std::string, double>& aucs_out) {
  const fs::path run_a = work / "run_a";
  aucs_out = run_toy_pipeline(run_a);
  const double a_rec = aucs_out.at("a_rec");
  const double a_intra = aucs_out.at("a_intra");
  const double a_inter = aucs_out.at("a_inter");
  const double r_intra = aucs_out.at("r_intra");
  const double r_dual = aucs_out.at("r_dual");
  expect(a_inter > a_rec + 0.05,
         "a_inter beats the reconstruction baseline by > 5 AUC points (got " +
             std::to_string(a_inter) + " vs " + std::to_string(a_rec) + ")");
  expect(r_dual >= a_inter - 0.01,
         "r_dual holds a_inter within 1 point (got " + std::to_string(r_dual) +
             " vs " + std::to_string(a_inter) + ")");
  expect(r_intra >= a_intra,
         "r_intra improves on a_intra (got " + std::to_string(r_intra) +
             " vs " + std::to_string(a_intra) + ")");
  return checks_failed == 0;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  auto ranks = [](const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<double> r(n);
    for (size_t i = 0; i < n; ++i) {
      double less = 0, equal = 0;
      for (size_t j = 0; j < n; ++j) {
        if (v[j] < v[i]) ++less;
        if (v[j] == v[i]) ++equal;
      }
      r[i] = less + (equal + 1.0) / 2.0;  // average rank over ties
    }
    return r;
  };
  auto rx = ranks(xs), ry = ranks(ys);
  const size_t n = xs.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double num = 0, dx = 0, dy = 0;
  for (size_t i = 0; i < n; ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0 || dy == 0) return 0.0;
  return num / std::sqrt(dx * dy);
}

bool criterion6(const fs::path& work,
                const std::map<std::string, double>& run_a_aucs) {
  // reuses run A's corpus and NDM checkpoint; retrains the UDM per ratio
  RunConfig cfg = toy_run_config(work / "run_a");
  cfg.manifest_path = RunPaths{cfg.out_dir}.corpus() / "manifest.csv";
  cfg.eval_kinds = {EvalKind::AInter};
  std::vector<SweepRow> rows =
      sweep_ar_run(cfg, {0.0, 0.5, 1.0}, progress_line);

  std::vector<double> ars, aucs;
  for (const auto& r : rows) {
    if (r.score_kind != "a_inter") continue;
    ars.push_back(r.anomaly_ratio);
    aucs.push_back(r.auc_value);
    std::printf("    ar %.1f  a_inter auc %.4f\n", r.anomaly_ratio,
                r.auc_value);
  }
  expect(ars.size() == 3, "sweep produced one a_inter row per ratio");
  const double rho = spearman(ars, aucs);
  std::printf("    spearman rho %.3f\n", rho);
  expect(rho > 0.0, "a_inter AUC trends upward with AR (rho > 0)");
  expect(aucs.front() >= run_a_aucs.at("a_rec"),
         "a_inter at AR=0 still beats the reconstruction baseline (got " +
             std::to_string(aucs.front()) + " vs " +
             std::to_string(run_a_aucs.at("a_rec")) + ")");
  return checks_failed == 0;
}

std::vector<uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("acceptance: cannot read " + p.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

bool criterion7(const fs::path& work) {
  const fs::path run_a = work / "run_a";
  const fs::path run_b = work / "run_b";
  run_toy_pipeline(run_b);

  // every checkpoint tensor, descriptor and report must match byte for byte
  std::vector<std::string> rel_files;
  for (const std::string& tag : {"ndm", "udm"}) {
    for (int m = 0; m < 3; ++m) {
      rel_files.push_back("stage1/" + tag + "/member_" + std::to_string(m) +
                          "/tensors.bin");
      rel_files.push_back("stage1/" + tag + "/member_" + std::to_string(m) +
                          "/tensors.json");
      rel_files.push_back("stage1/" + tag + "/member_" + std::to_string(m) +
                          "/config.json");
    }
    rel_files.push_back("stage1/" + tag + "/ensemble.json");
  }
  for (const std::string& which : {"dual", "intra"}) {
    rel_files.push_back("asr/" + which + "/tensors.bin");
    rel_files.push_back("asr/" + which + "/config.json");
  }
  rel_files.push_back("report/metrics.csv");
  rel_files.push_back("report/scores.csv");

  bool all_same = true;
  for (const auto& rel : rel_files) {
    if (file_bytes(run_a / rel) != file_bytes(run_b / rel)) {
      all_same = false;
      std::printf("    differs: %s\n", rel.c_str());
    }
  }
  expect(all_same, "two seeded runs produce byte-identical checkpoints and reports");
  return checks_failed == 0;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = "acceptance_work";
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
      work = argv[++i];
    } else if (std::strcmp(argv[i], "--criteria") == 0 && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) selected.insert(std::stoi(item));
    } else {
      std::fprintf(stderr,
                   "usage: acceptance [--out DIR] [--criteria 1,2,...]\n");
      return 2;
    }
  }
  fs::create_directories(work);

  auto enabled = [&](int id) { return selected.empty() || selected.count(id); };
  int failed_criteria = 0;
  std::map<std::string, double> run_a_aucs;

  auto report = [&](int id, const std::string& name, bool pass) {
    std::printf("criterion %d (%s): %s\n", id, name.c_str(),
                pass ? "PASS" : "FAIL");
    std::fflush(stdout);
    if (!pass) ++failed_criteria;
  };

  try {
    if (enabled(1)) {
      checks_failed = 0;
      report(1, "formula unit suite", criterion1());
    }
    if (enabled(2)) {
      checks_failed = 0;
      report(2, "metric oracle equivalence", criterion2());
    }
    if (enabled(3)) {
      checks_failed = 0;
      report(3, "gradient checks", criterion3());
    }
    if (enabled(4)) {
      checks_failed = 0;
      report(4, "degenerate-structure invariants", criterion4());
    }
    if (enabled(5)) {
      checks_failed = 0;
      report(5, "end-to-end toy run orderings", criterion5(work, run_a_aucs));
    }
    if (enabled(6)) {
      checks_failed = 0;
      if (run_a_aucs.empty()) {
        // criterion 5 did not run in this invocation; evaluate run_a anew
        RunConfig cfg = toy_run_config(work / "run_a");
        if (!fs::exists(RunPaths{cfg.out_dir}.splits()))
          run_a_aucs = run_toy_pipeline(work / "run_a");
        else
          for (const auto& r : evaluate_run(cfg).results)
            run_a_aucs[eval_kind_name(r.kind)] = r.auc_value;
      }
      report(6, "anomaly-ratio trend", criterion6(work, run_a_aucs));
    }
    if (enabled(7)) {
      checks_failed = 0;
      if (!fs::exists(work / "run_a" / "report" / "metrics.csv")) {
        std::map<std::string, double> tmp;
        run_toy_pipeline(work / "run_a");
      }
      report(7, "seeded determinism", criterion7(work));
    }
    if (enabled(8)) {
      std::printf(
          "criterion 8 (offline reproduction): SKIP (documented recipe; see "
          "README 'Reproducing the reported numbers', requires the RSNA data "
          "locally)\n");
    }
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }

  std::printf("%s (%d criteria failed)\n",
              failed_criteria == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
              failed_criteria);
  return failed_criteria == 0 ? 0 : 1;
}
