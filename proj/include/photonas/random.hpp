#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "photonas/tensor.hpp"

namespace photonas {

using Rng = std::mt19937_64;

// Stable per-name seed, so a parameter's init does not depend on which other parameters exist.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

Tensor uniform_tensor(const Shape& shape, float lo, float hi, Rng& rng);
Tensor normal_tensor(const Shape& shape, float stddev, Rng& rng);

}  // namespace photonas
