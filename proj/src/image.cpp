#include "ddad/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

namespace ddad {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

bool has_magic(FILE* f, const unsigned char* magic, size_t n) {
  unsigned char buf[8];
  size_t got = std::fread(buf, 1, n, f);
  std::rewind(f);
  return got == n && std::memcmp(buf, magic, n) == 0;
}

RasterImage decode_png(FILE* f, const std::string& name) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: allocation failure for " + name);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png: allocation failure for " + name);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: failed to decode " + name);
  }
  png_init_io(png, f);
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  int channels = png_get_channels(png, info);
  RasterImage img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.channels = channels >= 3 ? 3 : 1;
  img.data.resize(static_cast<size_t>(w) * h * channels);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = img.data.data() + static_cast<size_t>(y) * w * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  if (channels != img.channels) {
    // e.g. gray+alpha already stripped to 1, nothing to do
  }
  return img;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}

RasterImage decode_jpeg(FILE* f, const std::string& name) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError("jpeg: failed to decode " + name);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f);
  jpeg_read_header(&cinfo, TRUE);
  jpeg_start_decompress(&cinfo);

  RasterImage img;
  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  img.channels = cinfo.output_components >= 3 ? 3 : 1;
  int comps = cinfo.output_components;
  img.data.resize(static_cast<size_t>(img.width) * img.height * comps);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.data.data() +
                   static_cast<size_t>(cinfo.output_scanline) * img.width * comps;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

}  // namespace

RasterImage decode_image_file(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.string().c_str(), "rb"));
  if (!f) throw IoError("cannot open image file: " + path.string());
  static const unsigned char png_magic[4] = {0x89, 'P', 'N', 'G'};
  static const unsigned char jpg_magic[2] = {0xFF, 0xD8};
  RasterImage img;
  if (has_magic(f.get(), png_magic, 4)) {
    img = decode_png(f.get(), path.string());
  } else if (has_magic(f.get(), jpg_magic, 2)) {
    img = decode_jpeg(f.get(), path.string());
  } else {
    throw IoError("unsupported image format (expected PNG or JPEG): " +
                  path.string());
  }
  if (img.width <= 0 || img.height <= 0)
    throw ValidationError("zero-sized image: " + path.string());
  return img;
}

std::vector<float> resize_bilinear(const std::vector<float>& src, int sw,
                                   int sh, int dw, int dh) {
  std::vector<float> dst(static_cast<size_t>(dw) * dh);
  const double sx = static_cast<double>(sw) / dw;
  const double sy = static_cast<double>(sh) / dh;
  for (int y = 0; y < dh; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y1 = y0 + 1;
    y0 = std::min(std::max(y0, 0), sh - 1);
    y1 = std::min(std::max(y1, 0), sh - 1);
    for (int x = 0; x < dw; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x1 = x0 + 1;
      x0 = std::min(std::max(x0, 0), sw - 1);
      x1 = std::min(std::max(x1, 0), sw - 1);
      double top = src[static_cast<size_t>(y0) * sw + x0] * (1.0 - wx) +
                   src[static_cast<size_t>(y0) * sw + x1] * wx;
      double bot = src[static_cast<size_t>(y1) * sw + x0] * (1.0 - wx) +
                   src[static_cast<size_t>(y1) * sw + x1] * wx;
      dst[static_cast<size_t>(y) * dw + x] =
          static_cast<float>(top * (1.0 - wy) + bot * wy);
    }
  }
  return dst;
}

Image load_image(const std::filesystem::path& path, int side) {
  if (side <= 0) throw ValidationError("load_image: side must be positive");
  RasterImage raw = decode_image_file(path);

  std::vector<float> gray(static_cast<size_t>(raw.width) * raw.height);
  const size_t n = gray.size();
  if (raw.channels == 1) {
    for (size_t i = 0; i < n; ++i) gray[i] = raw.data[i] / 255.0f;
  } else {
    // BT.601 luminance
    for (size_t i = 0; i < n; ++i) {
      const uint8_t* px = &raw.data[i * 3];
      gray[i] =
          (0.299f * px[0] + 0.587f * px[1] + 0.114f * px[2]) / 255.0f;
    }
  }

  Image out(side);
  if (raw.width == side && raw.height == side) {
    out.pix = std::move(gray);
  } else {
    out.pix = resize_bilinear(gray, raw.width, raw.height, side, side);
  }
  for (float& v : out.pix) {
    if (v < 0.f) v = 0.f;
    if (v > 1.f) v = 1.f;
  }
  return out;
}

namespace {

void write_png_rows(const std::filesystem::path& path, int width, int height,
                    int bit_depth, const std::vector<png_bytep>& rows) {
  FilePtr f(std::fopen(path.string().c_str(), "wb"));
  if (!f) throw IoError("cannot open for writing: " + path.string());
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: allocation failure for " + path.string());
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: allocation failure for " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: failed to write " + path.string());
  }
  png_init_io(png, f.get());
  // fixed settings, no timestamps: output is byte-stable for equal input
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);  // in-memory is little-endian
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png_gray8(const std::filesystem::path& path,
                     const std::vector<uint8_t>& pix, int width, int height) {
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(pix.data() + static_cast<size_t>(y) * width);
  write_png_rows(path, width, height, 8, rows);
}

void write_png_gray16(const std::filesystem::path& path,
                      const std::vector<uint16_t>& pix, int width, int height) {
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(reinterpret_cast<const png_byte*>(
        pix.data() + static_cast<size_t>(y) * width));
  write_png_rows(path, width, height, 16, rows);
}

void write_image_png(const std::filesystem::path& path, const Image& img) {
  std::vector<uint8_t> bytes(img.size());
  for (size_t i = 0; i < img.size(); ++i) bytes[i] = to_byte(img.pix[i]);
  write_png_gray8(path, bytes, img.side, img.side);
}

}  // namespace ddad
