#pragma once

#include <span>
#include <string>

#include "licb/tensor.hpp"

namespace licb::io {

class ImageError : public std::runtime_error {
 public:
  explicit ImageError(const std::string& m) : std::runtime_error(m) {}
};

struct ImageRecord {
  diff::Tensor pixels;  // (1,3,H,W) in [0,1], sides multiples of 8 and >= 64
  std::string source;
  int bit_depth = 8;
};

// Binary PPM (P6) or 8-bit RGB PNG. Values scaled to [0,1], then
// center-cropped so both sides are multiples of 8.
ImageRecord load_image(const std::string& path);

// writes 8-bit P6; accepts (1,3,H,W) or (3,H,W), clamps to [0,1]
void save_ppm(const std::string& path, const diff::Tensor& img);

// grayscale heat image, min-max normalized over vals
void save_pgm_heatmap(const std::string& path, std::span<const double> vals,
                      int h, int w);

diff::Tensor center_crop8(const diff::Tensor& img);

}  // namespace licb::io
