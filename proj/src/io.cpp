#include "photonas/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "photonas/errors.hpp"

namespace photonas {

namespace {

constexpr char kMagic[4] = {'P', 'N', 'W', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("truncated weights file while reading ") + what, pos_);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_), bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed for " + path);
}

}  // namespace

std::vector<std::uint8_t> encode_weights(const WeightMap& weights) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kWeightsVersion);
  put_u32(out, static_cast<std::uint32_t>(weights.size()));
  for (const auto& [name, t] : weights) {
    if (t.rank() < 1 || t.rank() > 4) throw DimensionError("cannot store tensor '" + name + "' of rank " + std::to_string(t.rank()));
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(0);
    out.push_back(static_cast<std::uint8_t>(t.rank()));
    for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

WeightMap decode_weights(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.str(4, "magic") != std::string(kMagic, 4)) throw FormatError("bad magic, expected PNWT", 0);
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kWeightsVersion)
    throw FormatError("unsupported weights format version " + std::to_string(version), version_at);
  const std::uint32_t count = r.u32("tensor count");
  WeightMap out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t entry_at = r.offset();
    const std::uint32_t name_len = r.u32("name length");
    const std::string name = r.str(name_len, "tensor name");
    if (out.contains(name)) throw FormatError("duplicate tensor name '" + name + "'", entry_at);
    const std::size_t dtype_at = r.offset();
    const std::uint8_t dtype = r.u8("dtype");
    if (dtype != 0)
      throw UnsupportedError("tensor '" + name + "' has unsupported dtype code " + std::to_string(dtype) +
                             " at byte offset " + std::to_string(dtype_at));
    const std::size_t rank_at = r.offset();
    const std::uint8_t rank = r.u8("rank");
    if (rank < 1 || rank > 4) throw FormatError("tensor '" + name + "' has invalid rank " + std::to_string(rank), rank_at);
    Shape shape;
    for (int d = 0; d < rank; ++d) {
      const std::size_t dim_at = r.offset();
      const std::uint32_t dim = r.u32("dims");
      if (dim == 0 || dim > (1u << 30)) throw FormatError("tensor '" + name + "' has invalid dim", dim_at);
      shape.push_back(static_cast<int>(dim));
    }
    const std::size_t n = shape_size(shape);
    r.need(n * 4, "payload");
    std::vector<float> data(n);
    for (std::size_t k = 0; k < n; ++k) data[k] = std::bit_cast<float>(r.u32("payload"));
    out.emplace(name, Tensor(std::move(shape), std::move(data)));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after last tensor", r.offset());
  return out;
}

void save_weights(const WeightMap& weights, const std::string& path) { write_file(path, encode_weights(weights)); }

WeightMap load_weights(const std::string& path) { return decode_weights(read_file(path)); }

void save_graph(const NetworkGraph& graph, const std::string& path) {
  WeightMap w = graph_weights(graph);
  Tensor code({kNumSlots});
  for (int i = 0; i < kNumSlots; ++i) code[static_cast<std::size_t>(i)] = graph.code.test(i) ? 1.0f : 0.0f;
  w["meta.code"] = code;
  const EncoderSpec& spec = graph.encoder->spec();
  Tensor enc({1 + kEncoderStages});
  enc[0] = static_cast<float>(spec.base_width);
  for (int s = 0; s < kEncoderStages; ++s) enc[static_cast<std::size_t>(s + 1)] = static_cast<float>(spec.convs_per_stage[static_cast<std::size_t>(s)]);
  w["meta.encoder"] = enc;
  save_weights(w, path);
}

NetworkGraph load_graph(const std::string& path) {
  const WeightMap w = load_weights(path);
  const auto code_it = w.find("meta.code");
  const auto enc_it = w.find("meta.encoder");
  if (code_it == w.end() || enc_it == w.end() || code_it->second.size() != kNumSlots ||
      enc_it->second.size() != 1 + kEncoderStages)
    throw InputError(path + " is not a graph checkpoint (meta.code / meta.encoder missing)");
  ArchCode code;
  for (int i = 0; i < kNumSlots; ++i) code = code.with(i, code_it->second[static_cast<std::size_t>(i)] != 0.0f);
  EncoderSpec spec;
  spec.base_width = static_cast<int>(enc_it->second[0]);
  for (int s = 0; s < kEncoderStages; ++s) spec.convs_per_stage[static_cast<std::size_t>(s)] = static_cast<int>(enc_it->second[static_cast<std::size_t>(s + 1)]);
  auto encoder = std::make_shared<const Encoder>(Encoder::from_weights(spec, w));
  return with_decoder_weights(build_graph(code, std::move(encoder), 0), w);
}

Encoder load_encoder(const std::string& path, const EncoderSpec& spec) {
  return Encoder::from_weights(spec, load_weights(path));
}

// ---------------------------------------------------------------------------
// PPM

Tensor read_ppm(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  std::size_t pos = 0;
  const auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  const auto number = [&](const char* what) {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw InputError(path + ": malformed PPM header (" + what + ")");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1 << 24) throw InputError(path + ": PPM header value too large");
    }
    return static_cast<int>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw InputError(path + ": not a binary PPM (P6)");
  pos = 2;
  const int width = number("width");
  const int height = number("height");
  const int maxval = number("maxval");
  if (width < 1 || height < 1) throw InputError(path + ": PPM dims must be positive");
  if (maxval < 1) throw InputError(path + ": PPM maxval must be positive");
  if (maxval > 255) throw UnsupportedError(path + ": 16-bit PPM is not supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw InputError(path + ": malformed PPM header");
  ++pos;
  const std::size_t n = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - pos < n) throw InputError(path + ": truncated PPM payload");
  Tensor img({3, height, width});
  // Division (not a reciprocal multiply) makes v/255 round-trip through write_ppm exactly.
  const float denom = static_cast<float>(maxval);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = static_cast<float>(bytes[pos++]) / denom;
  return img;
}

void write_ppm(const Tensor& image, const std::string& path) {
  if (image.rank() != 3 || image.dim(0) != 3) throw DimensionError("write_ppm expects a (3,H,W) image");
  const int h = image.dim(1), w = image.dim(2);
  const std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        bytes.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(image.at(c, y, x), 0.0f, 1.0f) * 255.0f)));
  write_file(path, bytes);
}

// ---------------------------------------------------------------------------
// key=value

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InputError("line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

}  // namespace photonas
