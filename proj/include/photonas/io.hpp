#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "photonas/graph.hpp"
#include "photonas/tensor.hpp"

namespace photonas {

// ---------------------------------------------------------------------------
// Weights file ("PNWT"), all integers little-endian:
//   magic "PNWT" | version u32 | tensor count u32 |
//   per tensor: name length u32, UTF-8 name, dtype u8 (0 = f32), rank u8, dims u32 x rank,
//               payload f32 x prod(dims), row-major.

inline constexpr std::uint32_t kWeightsVersion = 1;

std::vector<std::uint8_t> encode_weights(const WeightMap& weights);
WeightMap decode_weights(const std::vector<std::uint8_t>& bytes);

void save_weights(const WeightMap& weights, const std::string& path);
WeightMap load_weights(const std::string& path);

/// Graph checkpoint: graph_weights() plus meta.code (31 values of 0/1) and
/// meta.encoder (base width followed by convs per stage).
void save_graph(const NetworkGraph& graph, const std::string& path);
NetworkGraph load_graph(const std::string& path);
/// Encoder only; shapes must match `spec`.
Encoder load_encoder(const std::string& path, const EncoderSpec& spec);

// ---------------------------------------------------------------------------
// Images: binary PPM (P6). Values map linearly between [0,1] and 0..maxval.

Tensor read_ppm(const std::string& path);
void write_ppm(const Tensor& image, const std::string& path);

// ---------------------------------------------------------------------------
// key=value text: blank lines and '#' comments ignored, whitespace around key and value trimmed.

using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::string& path);

}  // namespace photonas
