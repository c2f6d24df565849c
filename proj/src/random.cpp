#include "photonas/random.hpp"

namespace photonas {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  // splitmix64 finalizer
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

Tensor uniform_tensor(const Shape& shape, float lo, float hi, Rng& rng) {
  std::uniform_real_distribution<float> dist(lo, hi);
  Tensor t(shape);
  for (float& v : t.data()) v = dist(rng);
  return t;
}

Tensor normal_tensor(const Shape& shape, float stddev, Rng& rng) {
  std::normal_distribution<float> dist(0.0f, stddev);
  Tensor t(shape);
  for (float& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace photonas
