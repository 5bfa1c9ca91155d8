#include "ddad/toy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ddad/image.hpp"
#include "ddad/rng.hpp"
#include "ddad/splits.hpp"

namespace ddad {

namespace {

constexpr double kTau = 6.283185307179586;

inline double smoothstep01(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// soft ellipse membership in [0,1]; edge is the falloff width in units of
// the normalized radius
struct SoftEllipse {
  double cx, cy, ax, ay, cos_t, sin_t, edge;

  double operator()(double x, double y) const {
    double dx = x - cx, dy = y - cy;
    double u = (dx * cos_t + dy * sin_t) / ax;
    double v = (-dx * sin_t + dy * cos_t) / ay;
    double r = std::sqrt(u * u + v * v);
    return smoothstep01((1.0 + edge - r) / (2.0 * edge));
  }
};

SoftEllipse random_ellipse(Rng& rng, double cx, double cy, double ax,
                           double ay, double edge) {
  double theta = rng.uniform(0.0, kTau / 2.0);
  return SoftEllipse{cx, cy, ax, ay, std::cos(theta), std::sin(theta), edge};
}

void add_ellipse(Image& img, const SoftEllipse& e, double amount) {
  for (int y = 0; y < img.side; ++y)
    for (int x = 0; x < img.side; ++x)
      img.at(y, x) += static_cast<float>(amount * e(x, y));
}

void clamp01(Image& img) {
  for (float& v : img.pix) v = std::clamp(v, 0.0f, 1.0f);
}

}  // namespace

Image render_toy_normal(int side, uint64_t image_seed) {
  Rng rng(image_seed);
  const double d = side;
  Image img(side);

  // smooth background with a gentle diagonal gradient
  double base = rng.uniform(0.06, 0.16);
  double gx = rng.uniform(-0.05, 0.05) / d;
  double gy = rng.uniform(-0.05, 0.05) / d;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      img.at(y, x) = static_cast<float>(base + gx * x + gy * y);

  // main body: a roughly centered bright ellipse. The family is kept
  // homogeneous (like anatomy across patients) so reconstruction networks
  // can actually model it at this capacity.
  double cx = rng.uniform(0.47 * d, 0.53 * d);
  double cy = rng.uniform(0.47 * d, 0.53 * d);
  double ax = rng.uniform(0.29 * d, 0.36 * d);
  double ay = rng.uniform(0.29 * d, 0.36 * d);
  double body = rng.uniform(0.48, 0.60);
  double rim = rng.uniform(0.04, 0.08);
  SoftEllipse main_e = random_ellipse(rng, cx, cy, ax, ay, rim);
  add_ellipse(img, main_e, body);

  // two interior structures with loosely fixed anatomy: one upper-left,
  // one lower-right
  const double quadrant[2][2] = {{-0.45, -0.35}, {0.35, 0.45}};
  for (int i = 0; i < 2; ++i) {
    double scx = cx + (quadrant[i][0] + rng.uniform(-0.15, 0.15)) * ax;
    double scy = cy + (quadrant[i][1] + rng.uniform(-0.15, 0.15)) * ay;
    double sax = rng.uniform(0.05 * d, 0.09 * d);
    double say = rng.uniform(0.05 * d, 0.09 * d);
    double amp = rng.uniform(0.08, 0.20) * (i == 0 ? 1.0 : -1.0);
    add_ellipse(img, random_ellipse(rng, scx, scy, sax, say, 0.12), amp);
  }

  // low-frequency shading field
  double fa = rng.uniform(0.02, 0.04);
  double fx = rng.uniform(0.7, 1.8) / d;
  double fy = rng.uniform(0.7, 1.8) / d;
  double ph = rng.uniform(0.0, kTau);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      img.at(y, x) +=
          static_cast<float>(fa * std::sin(kTau * (fx * x + fy * y) + ph));

  // benign speckle: a per-image count of 1-2 px bright dots, well below
  // the bottleneck resolution. No reconstruction at this capacity responds
  // to them, so they inflate and spread the reconstruction-error baseline
  // across normal images while model-to-model discrepancies stay clean.
  int n_dots = static_cast<int>(rng.below(51));
  for (int i = 0; i < n_dots; ++i) {
    double px = rng.uniform(0.12 * d, 0.88 * d);
    double py = rng.uniform(0.12 * d, 0.88 * d);
    double r = rng.uniform(0.015 * d, 0.035 * d);
    double amp = rng.uniform(0.5, 0.85);
    add_ellipse(img, random_ellipse(rng, px, py, r, r, 0.02), amp);
  }

  // pixel noise with a per-image level: raises the reconstruction-error
  // floor and spreads it across images, like sensor noise does on the
  // real modalities
  double sigma = rng.uniform(0.01, 0.03);
  for (float& v : img.pix) v += static_cast<float>(sigma * rng.normal());

  clamp01(img);
  return img;
}

Image render_toy_abnormal(int side, uint64_t image_seed, Image* mask_out) {
  uint64_t s = image_seed;
  Image img = render_toy_normal(side, derive_seed(s, "base"));
  Rng rng = derive_rng(s, "lesion");
  const double d = side;

  double cx = rng.uniform(0.28 * d, 0.72 * d);
  double cy = rng.uniform(0.28 * d, 0.72 * d);
  double rx = rng.uniform(0.18 * d, 0.26 * d);
  double ry = rng.uniform(0.18 * d, 0.26 * d);
  SoftEllipse region = random_ellipse(rng, cx, cy, rx, ry, 0.08);

  // out-of-family content: a brightening stripe texture, or a partial
  // intensity inversion. Both leave a smooth bright mass — one consistent
  // pattern a module exposed to such images can pick up at this network
  // capacity — with enough area and amplitude to survive ensemble
  // blurring.
  int kind = static_cast<int>(rng.below(2));
  double stripe_shift = rng.uniform(0.35, 0.50);
  double stripe_amp = rng.uniform(0.16, 0.22);
  double stripe_lambda = rng.uniform(8.0, 13.0);
  double stripe_theta = rng.uniform(0.0, kTau / 2.0);
  double stripe_phase = rng.uniform(0.0, kTau);
  double invert_w = rng.uniform(0.60, 0.80);

  Image mask(side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      double m = region(x, y);
      if (m <= 0.0) continue;
      double cur = img.at(y, x);
      double lesion;
      if (kind == 0) {  // stripe texture riding on the local content
        double t = (x * std::cos(stripe_theta) + y * std::sin(stripe_theta));
        lesion = cur + stripe_shift +
                 stripe_amp * std::sin(kTau * t / stripe_lambda + stripe_phase);
      } else {  // partial inversion
        lesion = (1.0 - invert_w) * cur + invert_w * (1.0 - cur);
      }
      img.at(y, x) = static_cast<float>((1.0 - m) * cur + m * lesion);
      if (m > 0.5) mask.at(y, x) = 1.0f;
    }
  }
  clamp01(img);
  if (mask_out) *mask_out = std::move(mask);
  return img;
}

ToyAllocation toy_allocation(int n_normal, int n_abnormal) {
  ToyAllocation a;
  a.test_abnormal = round_half_away(0.25 * n_abnormal);
  a.unl_abnormal = n_abnormal - a.test_abnormal;
  a.test_normal = std::min(a.test_abnormal, n_normal);
  a.unl_normal = std::min(a.unl_abnormal, n_normal - a.test_normal);
  a.pool_normal = n_normal - a.test_normal - a.unl_normal;
  return a;
}

Manifest generate_toy_corpus(const std::filesystem::path& out_dir,
                             int n_normal, int n_abnormal, int side,
                             uint64_t seed) {
  if (side < 16) throw ValidationError("toy corpus: side must be >= 16");
  if (n_normal < 0 || n_abnormal < 0)
    throw ValidationError("toy corpus: counts must be non-negative");

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (n_abnormal > 0) fs::create_directories(out_dir / "masks", ec);
  if (ec) throw IoError("toy corpus: cannot create " + out_dir.string());

  Manifest m;
  m.base_dir = out_dir;
  ToyAllocation alloc = toy_allocation(n_normal, n_abnormal);

  char name[64];
  for (int i = 0; i < n_normal; ++i) {
    std::snprintf(name, sizeof(name), "images/normal_%05d.png", i);
    Image img = render_toy_normal(
        side, derive_seed(seed, "toy.normal." + std::to_string(i)));
    write_image_png(out_dir / name, img);
    ManifestEntry e;
    e.path = name;
    if (i < alloc.pool_normal) {
      e.split = Split::Normal;
    } else if (i < alloc.pool_normal + alloc.unl_normal) {
      e.split = Split::Unlabeled;
      e.label = 0;  // hidden ground truth for AR mixing
    } else {
      e.split = Split::Test;
      e.label = 0;
    }
    m.entries.push_back(std::move(e));
  }

  for (int i = 0; i < n_abnormal; ++i) {
    std::snprintf(name, sizeof(name), "images/abnormal_%05d.png", i);
    Image mask;
    Image img = render_toy_abnormal(
        side, derive_seed(seed, "toy.abnormal." + std::to_string(i)), &mask);
    write_image_png(out_dir / name, img);
    char mask_name[64];
    std::snprintf(mask_name, sizeof(mask_name), "masks/abnormal_%05d.png", i);
    write_image_png(out_dir / mask_name, mask);
    ManifestEntry e;
    e.path = name;
    if (i < alloc.unl_abnormal) {
      e.split = Split::Unlabeled;
      e.label = 1;
    } else {
      e.split = Split::Test;
      e.label = 1;
    }
    m.entries.push_back(std::move(e));
  }

  write_manifest(m, out_dir / "manifest.csv");
  return m;
}

}  // namespace ddad
