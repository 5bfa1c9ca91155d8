#include "ddad/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "ddad/checkpoint.hpp"
#include "nlohmann/json.hpp"

namespace ddad {

PatchSpec sample_patch(int d, Rng& rng) {
  if (d < 16) throw ValidationError("sample_patch: side must be >= 16");
  PatchSpec p;
  p.cx = rng.uniform(0.1 * d, 0.9 * d);
  p.cy = rng.uniform(0.1 * d, 0.9 * d);
  p.size = rng.uniform(0.1 * d, 0.4 * d);
  const double half = p.size / 2.0;
  p.x0 = std::clamp(static_cast<int>(std::lround(p.cx - half)), 0, d - 1);
  p.y0 = std::clamp(static_cast<int>(std::lround(p.cy - half)), 0, d - 1);
  p.x1 = std::clamp(static_cast<int>(std::lround(p.cx + half)), p.x0 + 1, d);
  p.y1 = std::clamp(static_cast<int>(std::lround(p.cy + half)), p.y0 + 1, d);
  return p;
}

SynthPair fpi_blend(const Image& x, const Image& x_f, const PatchSpec& patch,
                    double alpha) {
  if (x.side != x_f.side)
    throw ValidationError("fpi_blend: image sides differ");
  if (alpha < 0.0 || alpha > 1.0)
    throw ValidationError("fpi_blend: alpha must be in [0,1]");
  if (patch.x0 < 0 || patch.y0 < 0 || patch.x1 > x.side || patch.y1 > x.side ||
      patch.area() <= 0)
    throw ValidationError("fpi_blend: patch box outside image");
  SynthPair out;
  out.x_s = x;
  out.y_s.assign(x.size(), 0);
  out.alpha = alpha;
  const float a = static_cast<float>(alpha);
  for (int y = patch.y0; y < patch.y1; ++y) {
    for (int xx = patch.x0; xx < patch.x1; ++xx) {
      out.x_s.at(y, xx) = (1.0f - a) * x.at(y, xx) + a * x_f.at(y, xx);
      out.y_s[static_cast<size_t>(y) * x.side + xx] = 1;
    }
  }
  return out;
}

SynthStream::SynthStream(const std::vector<Image>* d_n, uint64_t seed)
    : d_n_(d_n), rng_(seed) {
  if (!d_n_ || d_n_->size() < 2)
    throw ValidationError("synthesis: need at least 2 normal images");
  order_.resize(d_n_->size());
  std::iota(order_.begin(), order_.end(), 0);
  rng_.shuffle(order_);
}

SynthPair SynthStream::next() {
  if (cursor_ >= order_.size()) {
    cursor_ = 0;
    rng_.shuffle(order_);
  }
  const int xi = order_[cursor_++];
  // distinct partner
  int fi = static_cast<int>(rng_.below(d_n_->size() - 1));
  if (fi >= xi) ++fi;
  const Image& x = (*d_n_)[static_cast<size_t>(xi)];
  const Image& x_f = (*d_n_)[static_cast<size_t>(fi)];
  PatchSpec patch = sample_patch(x.side, rng_);
  const double alpha = rng_.uniform();
  SynthPair pair = fpi_blend(x, x_f, patch, alpha);
  pair.source_x = xi;
  pair.source_xf = fi;
  return pair;
}

std::vector<SynthPair> SynthStream::take(size_t count) {
  std::vector<SynthPair> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) out.push_back(next());
  return out;
}

void dump_synth_pairs(const std::vector<Image>& d_n, size_t count,
                      uint64_t seed, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  SynthStream stream(&d_n, seed);
  char stem[32];
  for (size_t i = 0; i < count; ++i) {
    SynthPair pair = stream.next();
    std::snprintf(stem, sizeof(stem), "pair_%04zu", i);
    const int side = pair.x_s.side;

    std::vector<uint16_t> px(pair.x_s.size());
    for (size_t j = 0; j < px.size(); ++j)
      px[j] = static_cast<uint16_t>(
          std::lround(std::clamp(pair.x_s.pix[j], 0.f, 1.f) * 65535.f));
    write_png_gray16(out_dir / (std::string(stem) + "_image.png"), px, side,
                     side);

    std::vector<uint8_t> mask(pair.y_s.size());
    for (size_t j = 0; j < mask.size(); ++j) mask[j] = pair.y_s[j] ? 255 : 0;
    write_png_gray8(out_dir / (std::string(stem) + "_mask.png"), mask, side,
                    side);

    LoadedTensor t;
    t.name = stem;
    t.shape = {side, side};
    t.data = pair.x_s.pix;
    write_tensor_blob(out_dir / (std::string(stem) + ".raw"), {t});

    nlohmann::json sidecar;
    sidecar["schema_version"] = kSchemaVersion;
    sidecar["alpha"] = pair.alpha;
    sidecar["source_x"] = pair.source_x;
    sidecar["source_xf"] = pair.source_xf;
    sidecar["min"] = 0.0;
    sidecar["max"] = 1.0;
    std::ofstream sf(out_dir / (std::string(stem) + ".json"));
    if (!sf) throw IoError("cannot write synth dump sidecar");
    sf << sidecar.dump(2) << "\n";
  }
}

}  // namespace ddad
