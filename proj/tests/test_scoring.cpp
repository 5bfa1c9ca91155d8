#include "ddad/scoring.hpp"

#include <cmath>
#include <filesystem>

#include "doctest.h"

using namespace ddad;

namespace {

EnsembleForward make_forward(int side, std::vector<std::vector<float>> recons) {
  EnsembleForward f;
  f.side = side;
  f.recons = std::move(recons);
  f.mean.assign(f.recons[0].size(), 0.f);
  for (const auto& r : f.recons)
    for (size_t i = 0; i < r.size(); ++i) f.mean[i] += r[i];
  for (float& v : f.mean) v /= static_cast<float>(f.recons.size());
  return f;
}

}  // namespace

TEST_CASE("score_rec hand cases") {
  Image x(2, 0.f);
  std::vector<float> recon(4, 0.f);

  SUBCASE("perfect reconstruction maps to zero") {
    ScoreMap m = score_rec(x, recon);
    for (float v : m.values) CHECK(v == 0.f);
    CHECK(m.kind == ScoreKind::ARec);
  }
  SUBCASE("unit residual") {
    x.pix.assign(4, 1.f);
    ScoreMap m = score_rec(x, recon);
    for (float v : m.values) CHECK(v == 1.f);
  }
  SUBCASE("0.5 vs 0.2 gives 0.09") {
    x.pix.assign(4, 0.5f);
    recon.assign(4, 0.2f);
    ScoreMap m = score_rec(x, recon);
    for (float v : m.values) CHECK(v == doctest::Approx(0.09f).epsilon(1e-6));
  }
  SUBCASE("shape mismatch") {
    recon.resize(5);
    CHECK_THROWS_AS(score_rec(x, recon), ValidationError);
  }
}

TEST_CASE("score_intra hand cases") {
  SUBCASE("single member has zero deviation") {
    auto f = make_forward(2, {{0.1f, 0.9f, 0.4f, 0.3f}});
    ScoreMap m = score_intra(f);
    for (float v : m.values) CHECK(v == 0.f);
  }
  SUBCASE("two members 0.4/0.6 give 0.1") {
    auto f = make_forward(1, {{0.4f}, {0.6f}});
    ScoreMap m = score_intra(f);
    CHECK(m.values[0] == doctest::Approx(0.1f).epsilon(1e-6));
  }
  SUBCASE("three members 0.1/0.2/0.3 give sqrt(0.02/3)") {
    auto f = make_forward(1, {{0.1f}, {0.2f}, {0.3f}});
    CHECK(f.mean[0] == doctest::Approx(0.2f).epsilon(1e-6));
    ScoreMap m = score_intra(f);
    CHECK(m.values[0] ==
          doctest::Approx(std::sqrt(0.02 / 3.0)).epsilon(1e-5));
    CHECK(m.values[0] == doctest::Approx(0.0816497f).epsilon(1e-4));
  }
}

TEST_CASE("score_intra equals a brute-force per-pixel std oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(5));
    std::vector<std::vector<float>> recons(static_cast<size_t>(k));
    for (auto& r : recons) {
      r.resize(16);
      for (auto& v : r) v = static_cast<float>(rng.uniform());
    }
    auto f = make_forward(4, recons);
    ScoreMap m = score_intra(f);
    for (size_t p = 0; p < 16; ++p) {
      double mean = 0;
      for (int i = 0; i < k; ++i) mean += recons[static_cast<size_t>(i)][p];
      mean /= k;
      double var = 0;
      for (int i = 0; i < k; ++i) {
        const double d = mean - recons[static_cast<size_t>(i)][p];
        var += d * d;
      }
      var /= k;  // population variance, divide by K
      CHECK(m.values[p] == doctest::Approx(std::sqrt(var)).epsilon(1e-5));
    }
  }
}

TEST_CASE("score_intra is invariant under member permutation") {
  Rng rng(6);
  std::vector<std::vector<float>> recons(4, std::vector<float>(9));
  for (auto& r : recons)
    for (auto& v : r) v = static_cast<float>(rng.uniform());
  auto f = make_forward(3, recons);
  std::swap(recons[0], recons[3]);
  std::swap(recons[1], recons[2]);
  auto g = make_forward(3, recons);
  ScoreMap mf = score_intra(f), mg = score_intra(g);
  for (size_t i = 0; i < mf.values.size(); ++i)
    CHECK(mf.values[i] == doctest::Approx(mg.values[i]).epsilon(1e-6));
}

TEST_CASE("score_inter hand cases and symmetry") {
  auto a = make_forward(1, {{0.5f}});
  auto b = make_forward(1, {{0.8f}});
  ScoreMap ab = score_inter(a, b);
  CHECK(ab.values[0] == doctest::Approx(0.3f).epsilon(1e-6));
  CHECK(ab.kind == ScoreKind::AInter);

  ScoreMap ba = score_inter(b, a);
  CHECK(ab.values[0] == ba.values[0]);

  ScoreMap aa = score_inter(a, a);
  CHECK(aa.values[0] == 0.f);

  Rng rng(9);
  std::vector<float> r1(25), r2(25);
  for (auto& v : r1) v = static_cast<float>(rng.uniform());
  for (auto& v : r2) v = static_cast<float>(rng.uniform());
  auto f1 = make_forward(5, {r1});
  auto f2 = make_forward(5, {r2});
  ScoreMap m12 = score_inter(f1, f2), m21 = score_inter(f2, f1);
  for (size_t i = 0; i < 25; ++i) {
    CHECK(m12.values[i] == m21.values[i]);
    CHECK(m12.values[i] >= 0.f);
  }
}

TEST_CASE("refine_by_uncertainty") {
  ScoreMap m;
  m.side = 2;
  m.kind = ScoreKind::AInter;
  m.values = {0.2f, 0.4f, 0.0f, 1.0f};

  SUBCASE("sigma of one is the identity") {
    std::vector<float> ones(4, 1.f);
    ScoreMap r = refine_by_uncertainty(m, ones);
    for (size_t i = 0; i < 4; ++i)
      CHECK(r.values[i] == doctest::Approx(m.values[i]).epsilon(1e-6));
    CHECK(r.kind == ScoreKind::AInter);
  }
  SUBCASE("score 0.2 over sigma 2 gives 0.1") {
    std::vector<float> twos(4, 2.f);
    ScoreMap r = refine_by_uncertainty(m, twos);
    CHECK(r.values[0] == doctest::Approx(0.1f).epsilon(1e-6));
  }
  SUBCASE("doubling sigma halves every value, argmax preserved") {
    std::vector<float> s1(4, 0.7f), s2(4, 1.4f);
    ScoreMap r1 = refine_by_uncertainty(m, s1);
    ScoreMap r2 = refine_by_uncertainty(m, s2);
    for (size_t i = 0; i < 4; ++i)
      CHECK(r2.values[i] == doctest::Approx(0.5f * r1.values[i]).epsilon(1e-6));
    const auto argmax = [](const ScoreMap& sm) {
      return std::distance(sm.values.begin(),
                           std::max_element(sm.values.begin(), sm.values.end()));
    };
    CHECK(argmax(r1) == argmax(m));
    CHECK(argmax(r2) == argmax(m));
  }
  SUBCASE("non-positive sigma is a contract error") {
    std::vector<float> bad = {1.f, 0.f, 1.f, 1.f};
    CHECK_THROWS_AS(refine_by_uncertainty(m, bad), ContractError);
  }
  SUBCASE("only discrepancy maps are refined") {
    m.kind = ScoreKind::ARec;
    std::vector<float> ones(4, 1.f);
    CHECK_THROWS_AS(refine_by_uncertainty(m, ones), ContractError);
  }
}

TEST_CASE("image_score") {
  ScoreMap m;
  m.side = 2;
  m.kind = ScoreKind::AIntra;

  SUBCASE("all-zero map") {
    m.values = {0, 0, 0, 0};
    CHECK(image_score(m) == 0.0);
  }
  SUBCASE("constant map") {
    m.values = {0.37f, 0.37f, 0.37f, 0.37f};
    CHECK(image_score(m) == doctest::Approx(0.37).epsilon(1e-6));
  }
  SUBCASE("2x2 with one hot pixel") {
    m.values = {0.f, 0.f, 0.4f, 0.f};
    CHECK(image_score(m) == doctest::Approx(0.1).epsilon(1e-6));
  }
  SUBCASE("empty map rejected") {
    m.values.clear();
    CHECK_THROWS_AS(image_score(m), ValidationError);
  }
}

TEST_CASE("ensemble_forward on real checkpoints") {
  NetworkConfig nc;
  nc.side = 16;
  EnsembleCheckpoint ckpt;
  ckpt.net_config = nc;
  ckpt.module_tag = ModuleTag::NDM;

  Image x(16, 0.5f);

  SUBCASE("k=1: mean equals the single reconstruction") {
    ckpt.members.push_back(std::make_unique<Autoencoder<float>>(nc, 1));
    EnsembleForward f = ensemble_forward(ckpt, x);
    REQUIRE(f.recons.size() == 1);
    CHECK(f.mean == f.recons[0]);
    CHECK_FALSE(f.sigma.has_value());
  }
  SUBCASE("identical members: mean equals each reconstruction") {
    ckpt.members.push_back(std::make_unique<Autoencoder<float>>(nc, 1));
    ckpt.members.push_back(std::make_unique<Autoencoder<float>>(nc, 1));
    EnsembleForward f = ensemble_forward(ckpt, x);
    for (size_t i = 0; i < f.mean.size(); ++i)
      CHECK(f.mean[i] == doctest::Approx(f.recons[0][i]).epsilon(1e-7));
    // and intra-discrepancy vanishes (within float accumulation noise)
    ScoreMap m = score_intra(f);
    for (float v : m.values) CHECK(v <= 1e-6f);
  }
  SUBCASE("mean is the elementwise average over members") {
    for (uint64_t s : {1ull, 2ull, 3ull})
      ckpt.members.push_back(std::make_unique<Autoencoder<float>>(nc, s));
    EnsembleForward f = ensemble_forward(ckpt, x);
    for (size_t i = 0; i < f.mean.size(); ++i) {
      const float avg =
          (f.recons[0][i] + f.recons[1][i] + f.recons[2][i]) / 3.0f;
      CHECK(f.mean[i] == doctest::Approx(avg).epsilon(1e-6));
    }
  }
  SUBCASE("side mismatch is rejected") {
    ckpt.members.push_back(std::make_unique<Autoencoder<float>>(nc, 1));
    Image wrong(32, 0.5f);
    CHECK_THROWS_AS(ensemble_forward(ckpt, wrong), ValidationError);
  }
}

TEST_CASE("aeu checkpoints expose a positive sigma under both aggregations") {
  NetworkConfig nc;
  nc.side = 16;
  nc.backbone = Backbone::AEU;
  EnsembleCheckpoint ckpt;
  ckpt.net_config = nc;
  for (uint64_t s : {4ull, 5ull})
    ckpt.members.push_back(std::make_unique<Autoencoder<float>>(nc, s));
  Image x(16, 0.25f);
  for (auto agg : {SigmaAgg::VarMean, SigmaAgg::StdMean}) {
    EnsembleForward f = ensemble_forward(ckpt, x, agg);
    REQUIRE(f.sigma.has_value());
    for (float v : *f.sigma) {
      CHECK(v > 0.f);
      CHECK(std::isfinite(v));
    }
  }
}

TEST_CASE("score map export writes png, sidecar and raw blob") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "ddad_test_mapexport";
  fs::remove_all(dir);
  ScoreMap m;
  m.side = 4;
  m.kind = ScoreKind::AInter;
  m.values.resize(16);
  for (size_t i = 0; i < 16; ++i) m.values[i] = static_cast<float>(i) * 0.01f;
  export_score_map(m, dir, "img0");
  CHECK(fs::exists(dir / "img0.png"));
  CHECK(fs::exists(dir / "img0.json"));
  CHECK(fs::exists(dir / "img0.raw" / "tensors.bin"));
  auto tensors = read_tensor_blob(dir / "img0.raw");
  REQUIRE(tensors.size() == 1);
  CHECK(tensors[0].shape == std::vector<int64_t>{4, 4});
  CHECK(tensors[0].data == m.values);
}
