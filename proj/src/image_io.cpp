#include "licb/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace licb::io {

using diff::Tensor;

namespace {

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ImageError("cannot open " + path);
  return std::vector<uint8_t>{std::istreambuf_iterator<char>(f),
                              std::istreambuf_iterator<char>()};
}

// --- PPM --------------------------------------------------------------------

int ppm_token(const std::vector<uint8_t>& b, size_t& pos) {
  while (pos < b.size()) {
    if (std::isspace(b[pos])) {
      ++pos;
    } else if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  if (pos >= b.size() || !std::isdigit(b[pos]))
    throw ImageError("ppm: corrupt header");
  int v = 0;
  while (pos < b.size() && std::isdigit(b[pos])) v = v * 10 + (b[pos++] - '0');
  return v;
}

ImageRecord load_ppm(const std::vector<uint8_t>& b, const std::string& path) {
  size_t pos = 2;
  int w = ppm_token(b, pos);
  int h = ppm_token(b, pos);
  int maxval = ppm_token(b, pos);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    throw ImageError("ppm: corrupt header");
  ++pos;  // single whitespace before raster
  int bytes = maxval > 255 ? 2 : 1;
  size_t need = static_cast<size_t>(w) * h * 3 * bytes;
  if (pos + need > b.size()) throw ImageError("ppm: truncated raster");

  std::vector<float> px(static_cast<size_t>(3) * h * w);
  size_t plane = static_cast<size_t>(h) * w;
  for (size_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) {
      size_t o = pos + (i * 3 + c) * bytes;
      int v = bytes == 2 ? (b[o] << 8) | b[o + 1] : b[o];
      px[c * plane + i] = static_cast<float>(v) / static_cast<float>(maxval);
    }
  ImageRecord rec;
  rec.pixels = Tensor::from_data({1, 3, h, w}, std::move(px));
  rec.source = path;
  rec.bit_depth = bytes == 2 ? 16 : 8;
  return rec;
}

// --- PNG (8-bit RGB, non-interlaced) ----------------------------------------

uint32_t be32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) |
         (uint32_t(p[2]) << 8) | p[3];
}

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

ImageRecord load_png(const std::vector<uint8_t>& b, const std::string& path) {
  if (b.size() < 45) throw ImageError("png: truncated");
  size_t pos = 8;
  int w = 0, h = 0;
  std::vector<uint8_t> idat;
  bool saw_ihdr = false, saw_iend = false;
  while (pos + 8 <= b.size() && !saw_iend) {
    uint32_t len = be32(&b[pos]);
    if (pos + 12 + len > b.size()) throw ImageError("png: truncated chunk");
    const uint8_t* type = &b[pos + 4];
    const uint8_t* data = &b[pos + 8];
    if (!std::memcmp(type, "IHDR", 4)) {
      if (len != 13) throw ImageError("png: corrupt header");
      w = static_cast<int>(be32(data));
      h = static_cast<int>(be32(data + 4));
      if (data[8] != 8 || data[9] != 2 || data[12] != 0)
        throw ImageError("png: only 8-bit non-interlaced RGB is supported");
      saw_ihdr = true;
    } else if (!std::memcmp(type, "IDAT", 4)) {
      idat.insert(idat.end(), data, data + len);
    } else if (!std::memcmp(type, "IEND", 4)) {
      saw_iend = true;
    }
    pos += 12 + len;
  }
  if (!saw_ihdr || idat.empty() || w <= 0 || h <= 0)
    throw ImageError("png: corrupt file");

  size_t stride = static_cast<size_t>(w) * 3;
  std::vector<uint8_t> raw((stride + 1) * h);
  uLongf out_len = raw.size();
  if (uncompress(raw.data(), &out_len, idat.data(), idat.size()) != Z_OK ||
      out_len != raw.size())
    throw ImageError("png: bad compressed data");

  std::vector<uint8_t> img(stride * h);
  for (int y = 0; y < h; ++y) {
    uint8_t filt = raw[y * (stride + 1)];
    const uint8_t* src = &raw[y * (stride + 1) + 1];
    uint8_t* dst = &img[y * stride];
    const uint8_t* up = y ? &img[(y - 1) * stride] : nullptr;
    for (size_t i = 0; i < stride; ++i) {
      int a = i >= 3 ? dst[i - 3] : 0;
      int u = up ? up[i] : 0;
      int c = (up && i >= 3) ? up[i - 3] : 0;
      int v = src[i];
      switch (filt) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += u; break;
        case 3: v += (a + u) / 2; break;
        case 4: v += paeth(a, u, c); break;
        default: throw ImageError("png: bad filter type");
      }
      dst[i] = static_cast<uint8_t>(v);
    }
  }

  std::vector<float> px(static_cast<size_t>(3) * h * w);
  size_t plane = static_cast<size_t>(h) * w;
  for (size_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c)
      px[c * plane + i] = static_cast<float>(img[i * 3 + c]) / 255.0f;
  ImageRecord rec;
  rec.pixels = Tensor::from_data({1, 3, h, w}, std::move(px));
  rec.source = path;
  rec.bit_depth = 8;
  return rec;
}

}  // namespace

Tensor center_crop8(const Tensor& img) {
  const auto& s = img.shape();
  int H = s[2], W = s[3];
  int ch = H - H % 8, cw = W - W % 8;
  if (ch == H && cw == W) return img;
  int top = (H - ch) / 2, left = (W - cw) / 2;
  std::vector<float> out(static_cast<size_t>(3) * ch * cw);
  const float* src = img.data().data();
  size_t pos = 0;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < ch; ++y) {
      const float* row =
          src + (static_cast<size_t>(c) * H + top + y) * W + left;
      std::copy(row, row + cw, out.data() + pos);
      pos += cw;
    }
  return Tensor::from_data({1, 3, ch, cw}, std::move(out));
}

ImageRecord load_image(const std::string& path) {
  std::vector<uint8_t> b = read_file(path);
  ImageRecord rec;
  if (b.size() >= 2 && b[0] == 'P' && b[1] == '6') {
    rec = load_ppm(b, path);
  } else if (b.size() >= 8 && !std::memcmp(b.data(), "\x89PNG\r\n\x1a\n", 8)) {
    rec = load_png(b, path);
  } else {
    throw ImageError("unsupported image format: " + path);
  }
  rec.pixels = center_crop8(rec.pixels);
  const auto& s = rec.pixels.shape();
  if (s[2] < 64 || s[3] < 64)
    throw ImageError("image too small after cropping (need >= 64 per side): " +
                     path);
  return rec;
}

void save_ppm(const std::string& path, const Tensor& img) {
  const auto& s = img.shape();
  size_t off = s.size() == 4 ? 1 : 0;
  if (s.size() < 3 || s[off] != 3)
    throw ImageError("save_ppm: expected a 3-channel image");
  int h = s[off + 1], w = s[off + 2];
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ImageError("cannot write " + path);
  f << "P6\n" << w << " " << h << "\n255\n";
  const float* px = img.data().data();
  size_t plane = static_cast<size_t>(h) * w;
  std::vector<uint8_t> row(3);
  for (size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      float v = std::clamp(px[c * plane + i], 0.0f, 1.0f);
      row[c] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
    f.write(reinterpret_cast<const char*>(row.data()), 3);
  }
}

void save_pgm_heatmap(const std::string& path, std::span<const double> vals,
                      int h, int w) {
  if (vals.size() != static_cast<size_t>(h) * w)
    throw ImageError("save_pgm_heatmap: size mismatch");
  double lo = *std::min_element(vals.begin(), vals.end());
  double hi = *std::max_element(vals.begin(), vals.end());
  double span = hi > lo ? hi - lo : 1.0;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ImageError("cannot write " + path);
  f << "P5\n" << w << " " << h << "\n255\n";
  for (double v : vals) {
    uint8_t g = static_cast<uint8_t>(std::lround((v - lo) / span * 255.0));
    f.write(reinterpret_cast<const char*>(&g), 1);
  }
}

}  // namespace licb::io
