#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ddad/image.hpp"
#include "ddad/rng.hpp"

namespace ddad {

// Random square patch: center uniform on [0.1d, 0.9d] per axis, side
// uniform on [0.1d, 0.4d]; the realized box is the integer rectangle after
// clipping to image bounds (half-open [x0,x1) x [y0,y1)).
struct PatchSpec {
  double cx = 0, cy = 0;
  double size = 0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int area() const { return (x1 - x0) * (y1 - y0); }
  bool contains(int x, int y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
};

PatchSpec sample_patch(int d, Rng& rng);

// Synthetic abnormal image with its binary pseudo-label mask.
struct SynthPair {
  Image x_s;
  std::vector<uint8_t> y_s;  // side*side box indicator
  double alpha = 0;
  int source_x = -1;   // index of x in the normal set
  int source_xf = -1;  // index of x_f
};

// Convex blend of x_f into x inside the patch; identity outside.
SynthPair fpi_blend(const Image& x, const Image& x_f, const PatchSpec& patch,
                    double alpha);

// Deterministic stream of synthetic pairs over a normal set: each pair
// takes the next image x (set order reshuffled every full cycle), a
// distinct partner x_f, a fresh patch and alpha ~ U(0,1).
class SynthStream {
 public:
  SynthStream(const std::vector<Image>* d_n, uint64_t seed);

  SynthPair next();
  std::vector<SynthPair> take(size_t count);

 private:
  const std::vector<Image>* d_n_;
  Rng rng_;
  std::vector<int> order_;
  size_t cursor_ = 0;
};

// Inspection dump: writes count pairs as 16-bit PNGs with JSON sidecars
// plus raw float grids (the score-map export formats) and 8-bit masks.
void dump_synth_pairs(const std::vector<Image>& d_n, size_t count,
                      uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace ddad
