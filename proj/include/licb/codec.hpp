#pragma once

#include <span>
#include <vector>

#include "licb/model.hpp"
#include "licb/range_coder.hpp"

namespace licb::coder {

// File container: header, then length-prefixed z and y segments. All
// multi-byte integers little-endian.
struct Bitstream {
  uint8_t version = 1;
  models::Family family = models::Family::kFactorized;
  uint32_t lambda_index = 0;
  uint32_t height = 0, width = 0;
  std::vector<uint8_t> z_seg;  // empty for FACTORIZED
  std::vector<uint8_t> y_seg;

  std::vector<uint8_t> serialize() const;
  static Bitstream parse(std::span<const uint8_t> bytes);
  // coded payload size in bits (segments only, container header excluded)
  size_t payload_bits() const { return 8 * (z_seg.size() + y_seg.size()); }
};

// Encode one image (N=1) to a decodable bitstream. The estimate returned by
// forward_rd is realizable within ~2% + a small per-stream constant.
Bitstream compress_file(const models::CompressionModel& model,
                        uint32_t lambda_index, const diff::Tensor& x);

struct DecompressResult {
  diff::Tensor y_hat;
  diff::Tensor x_hat;
};

DecompressResult decompress_file(const models::CompressionModel& model,
                                 const Bitstream& bs);

// resolves the submodel by the header's family and lambda index
DecompressResult decompress_file(
    std::span<const models::CompressionModel> submodels, const Bitstream& bs);

}  // namespace licb::coder
