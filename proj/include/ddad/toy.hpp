#pragma once

#include <cstdint>
#include <filesystem>

#include "ddad/image.hpp"
#include "ddad/manifest.hpp"

namespace ddad {

// Procedural grayscale corpus standing in for the medical benchmarks at
// desk scale. Normal images are smooth blob/ellipse composites with mild
// texture and pixel noise; abnormal images take a normal image and insert
// an out-of-family patch (bright/dark blob, intensity inversion, or
// stripes). Binary masks for abnormal images are persisted next to the
// images for inspection.
//
// Pool allocation (documented contract): a quarter of the abnormal images
// (rounded) goes to the test pool and the rest to the unlabeled pool;
// normal images fill the test pool to class balance, then mirror the
// unlabeled abnormal count, and the remainder becomes the normal pool.
// generate_toy_corpus(1800, 800, ...) therefore yields pools of
// 1000 normal / (600+600) unlabeled / (200+200) test.
//
// Deterministic: same (counts, side, seed) reproduce byte-identical files.
Manifest generate_toy_corpus(const std::filesystem::path& out_dir,
                             int n_normal, int n_abnormal, int side,
                             uint64_t seed);

struct ToyAllocation {
  int test_normal = 0, test_abnormal = 0;
  int unl_normal = 0, unl_abnormal = 0;
  int pool_normal = 0;
};
ToyAllocation toy_allocation(int n_normal, int n_abnormal);

// Exposed for tests: the two generator families.
Image render_toy_normal(int side, uint64_t image_seed);
Image render_toy_abnormal(int side, uint64_t image_seed, Image* mask_out);

}  // namespace ddad
