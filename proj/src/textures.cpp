#include "licb/textures.hpp"

#include <algorithm>
#include <cmath>

namespace licb::textures {

using diff::Tensor;

namespace {

float smoothstep(float t) { return t * t * (3.0f - 2.0f * t); }

// bilinear value noise on a coarse lattice
void add_octave(std::vector<float>& plane, int size, int cells, float amp,
                Rng& rng) {
  int g = cells + 1;
  std::vector<float> lattice(static_cast<size_t>(g) * g);
  for (float& v : lattice) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      float fy = static_cast<float>(y) * cells / size;
      float fx = static_cast<float>(x) * cells / size;
      int iy = static_cast<int>(fy), ix = static_cast<int>(fx);
      float ty = smoothstep(fy - iy), tx = smoothstep(fx - ix);
      float v00 = lattice[iy * g + ix];
      float v01 = lattice[iy * g + ix + 1];
      float v10 = lattice[(iy + 1) * g + ix];
      float v11 = lattice[(iy + 1) * g + ix + 1];
      float v = (v00 * (1 - tx) + v01 * tx) * (1 - ty) +
                (v10 * (1 - tx) + v11 * tx) * ty;
      plane[static_cast<size_t>(y) * size + x] += amp * v;
    }
}

}  // namespace

Tensor noise_texture(int size, uint64_t seed) {
  Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<float> px(static_cast<size_t>(3) * size * size);
  size_t plane = static_cast<size_t>(size) * size;
  for (int c = 0; c < 3; ++c) {
    std::vector<float> p(plane, 0.0f);
    int cells = 4;
    float amp = 0.5f;
    for (int oct = 0; oct < 3; ++oct) {
      add_octave(p, size, cells, amp, rng);
      cells *= 2;
      amp *= 0.5f;
    }
    for (size_t i = 0; i < plane; ++i)
      px[c * plane + i] = std::clamp(0.5f + 0.5f * p[i], 0.0f, 1.0f);
  }
  return Tensor::from_data({1, 3, size, size}, std::move(px));
}

Tensor edge_texture(int size, uint64_t seed) {
  Rng rng(seed ^ 0xD1B54A32D192ED03ULL);
  std::vector<float> px(static_cast<size_t>(3) * size * size);
  size_t plane = static_cast<size_t>(size) * size;
  float base[3];
  for (float& b : base) b = static_cast<float>(rng.uniform(0.2, 0.8));
  for (int c = 0; c < 3; ++c)
    std::fill(px.begin() + c * plane, px.begin() + (c + 1) * plane, base[c]);

  int boxes = rng.uniform_int(4, 8);
  for (int b = 0; b < boxes; ++b) {
    int x0 = rng.uniform_int(0, size - 2);
    int y0 = rng.uniform_int(0, size - 2);
    int x1 = rng.uniform_int(x0 + 1, size - 1);
    int y1 = rng.uniform_int(y0 + 1, size - 1);
    float col[3];
    for (float& v : col) v = static_cast<float>(rng.uniform(0.0, 1.0));
    for (int c = 0; c < 3; ++c)
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
          px[c * plane + static_cast<size_t>(y) * size + x] = col[c];
  }
  // one diagonal step edge for oriented high-frequency content
  float ang = static_cast<float>(rng.uniform(0.0, 3.14159265));
  float nx = std::cos(ang), ny = std::sin(ang);
  float off = static_cast<float>(rng.uniform(0.3, 0.7)) * size * (nx + ny);
  float shade = static_cast<float>(rng.uniform(-0.3, 0.3));
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        if (nx * x + ny * y > off) {
          float& v = px[c * plane + static_cast<size_t>(y) * size + x];
          v = std::clamp(v + shade, 0.0f, 1.0f);
        }
  return Tensor::from_data({1, 3, size, size}, std::move(px));
}

std::vector<Tensor> make_dataset(int count, int size, uint64_t seed) {
  std::vector<Tensor> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i)
    out.push_back(i % 2 == 0 ? noise_texture(size, seed + i)
                             : edge_texture(size, seed + i));
  return out;
}

}  // namespace licb::textures
