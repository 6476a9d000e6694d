#include "licb/range_coder.hpp"

#include <algorithm>

namespace licb::coder {

namespace {
constexpr uint32_t kTotalBits = 16;
constexpr uint32_t kTotal = 1u << kTotalBits;
constexpr uint32_t kTopValue = 1u << 24;
const uint8_t kSentinel[4] = {0xA5, 0x5A, 0xC3, 0x3C};
}  // namespace

void RangeEncoder::reset() {
  low_ = 0;
  range_ = 0xFFFFFFFFu;
  cache_ = 0;
  cache_size_ = 1;
  out_.clear();
  finished_ = false;
}

void RangeEncoder::shift_low() {
  if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    uint8_t carry = static_cast<uint8_t>(low_ >> 32);
    do {
      out_.push_back(static_cast<uint8_t>(cache_ + carry));
      cache_ = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode(uint32_t cum_start, uint32_t freq) {
  if (freq == 0 || cum_start + freq > kTotal)
    throw StreamError("encode: bad interval");
  uint32_t r = range_ >> kTotalBits;
  low_ += static_cast<uint64_t>(cum_start) * r;
  range_ = r * freq;
  while (range_ < kTopValue) {
    shift_low();
    range_ <<= 8;
  }
}

void RangeEncoder::encode_raw_byte(uint8_t b) {
  encode(static_cast<uint32_t>(b) << 8, 256);
}

void RangeEncoder::encode_symbol(const entropy::CdfTable& t, int32_t sym) {
  if (t.in_range(sym)) {
    int slot = sym - t.smin;
    encode(t.cum[slot], t.freq(slot));
    return;
  }
  if (!t.has_escape)
    throw StreamError("encode_symbol: symbol " + std::to_string(sym) +
                      " outside table range and no escape slot");
  int slot = t.escape_slot();
  encode(t.cum[slot], t.freq(slot));
  uint32_t u = static_cast<uint32_t>(sym);
  for (int i = 0; i < 4; ++i) encode_raw_byte(static_cast<uint8_t>(u >> (8 * i)));
}

std::vector<uint8_t> RangeEncoder::finish() {
  if (!finished_) {
    for (int i = 0; i < 5; ++i) shift_low();
    finished_ = true;
  }
  return out_;
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes) : bytes_(bytes) {
  next_byte();  // leading zero byte emitted by the encoder's first shift
  code_ = 0;
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  if (pos_ >= bytes_.size()) throw StreamError("truncated stream");
  return bytes_[pos_++];
}

uint32_t RangeDecoder::decode_cum() {
  uint32_t r = range_ >> kTotalBits;
  uint32_t cum = code_ / r;
  return std::min(cum, kTotal - 1);
}

void RangeDecoder::decode_update(uint32_t cum_start, uint32_t freq) {
  uint32_t r = range_ >> kTotalBits;
  code_ -= cum_start * r;
  range_ = r * freq;
  while (range_ < kTopValue) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

uint8_t RangeDecoder::decode_raw_byte() {
  uint32_t cum = decode_cum();
  uint8_t b = static_cast<uint8_t>(cum >> 8);
  decode_update(static_cast<uint32_t>(b) << 8, 256);
  return b;
}

int32_t RangeDecoder::decode_symbol(const entropy::CdfTable& t) {
  uint32_t cum = decode_cum();
  // largest slot with cum[slot] <= cum
  auto it = std::upper_bound(t.cum.begin(), t.cum.end(), cum);
  int slot = static_cast<int>(it - t.cum.begin()) - 1;
  if (slot < 0 || slot >= t.num_symbols()) throw StreamError("corrupt stream");
  decode_update(t.cum[slot], t.freq(slot));
  if (t.has_escape && slot == t.escape_slot()) {
    uint32_t u = 0;
    for (int i = 0; i < 4; ++i)
      u |= static_cast<uint32_t>(decode_raw_byte()) << (8 * i);
    return static_cast<int32_t>(u);
  }
  return t.smin + slot;
}

std::vector<uint8_t> encode_stream(std::span<const int32_t> symbols,
                                   std::span<const entropy::CdfTable> tables) {
  if (tables.size() != 1 && tables.size() != symbols.size())
    throw StreamError("encode_stream: need one table or one per symbol");
  RangeEncoder enc;
  for (size_t i = 0; i < symbols.size(); ++i)
    enc.encode_symbol(tables.size() == 1 ? tables[0] : tables[i], symbols[i]);
  for (uint8_t s : kSentinel) enc.encode_raw_byte(s);
  return enc.finish();
}

std::vector<int32_t> decode_stream(std::span<const uint8_t> bytes,
                                   std::span<const entropy::CdfTable> tables,
                                   size_t count) {
  if (tables.size() != 1 && tables.size() != count)
    throw StreamError("decode_stream: need one table or one per symbol");
  RangeDecoder dec(bytes);
  std::vector<int32_t> out(count);
  for (size_t i = 0; i < count; ++i)
    out[i] = dec.decode_symbol(tables.size() == 1 ? tables[0] : tables[i]);
  for (uint8_t s : kSentinel)
    if (dec.decode_raw_byte() != s) throw StreamError("sentinel mismatch");
  return out;
}

}  // namespace licb::coder
