#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "licb/entropy.hpp"

namespace licb::coder {

class StreamError : public std::runtime_error {
 public:
  explicit StreamError(const std::string& m) : std::runtime_error(m) {}
};

// 32-bit carry-propagating range encoder, 16-bit probability precision.
class RangeEncoder {
 public:
  RangeEncoder() { reset(); }
  void reset();
  // encode an interval [cum_start, cum_start+freq) out of 2^16
  void encode(uint32_t cum_start, uint32_t freq);
  // encode a (possibly out-of-range) integer under a CdfTable; outliers need
  // the table's escape slot and are followed by 4 raw bytes
  void encode_symbol(const entropy::CdfTable& t, int32_t sym);
  void encode_raw_byte(uint8_t b);
  std::vector<uint8_t> finish();

 private:
  void shift_low();
  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 0;
  std::vector<uint8_t> out_;
  bool finished_ = false;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> bytes);
  int32_t decode_symbol(const entropy::CdfTable& t);
  uint8_t decode_raw_byte();

 private:
  uint32_t decode_cum();                                // current cumulative slot
  void decode_update(uint32_t cum_start, uint32_t freq);
  uint8_t next_byte();
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t code_ = 0;
};

// stream API with a 4-byte sentinel tail for corruption detection.
// tables.size() must be 1 (shared) or symbols.size() (per-symbol).
std::vector<uint8_t> encode_stream(std::span<const int32_t> symbols,
                                   std::span<const entropy::CdfTable> tables);
std::vector<int32_t> decode_stream(std::span<const uint8_t> bytes,
                                   std::span<const entropy::CdfTable> tables,
                                   size_t count);

}  // namespace licb::coder
