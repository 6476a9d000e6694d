#pragma once

#include <vector>

#include "licb/tensor.hpp"

namespace licb::textures {

// Seeded synthetic textures: smoothed value noise with a few octaves plus
// hard geometric edges, giving both low- and high-frequency content.
diff::Tensor noise_texture(int size, uint64_t seed);
diff::Tensor edge_texture(int size, uint64_t seed);

// alternating mix of the two kinds
std::vector<diff::Tensor> make_dataset(int count, int size, uint64_t seed);

}  // namespace licb::textures
