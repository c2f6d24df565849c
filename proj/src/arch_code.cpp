#include "photonas/arch_code.hpp"

#include <bit>
#include <map>

#include "photonas/errors.hpp"

namespace photonas {

namespace {

const std::map<std::string, std::string, std::less<>>& presets() {
  // stylenas-5opt/9opt: greedy removal/addition of active ops from photonas under the desk objective
  // (60-step candidates, lr 3e-3).
  static const std::map<std::string, std::string, std::less<>> table = {
      {"photonet", std::string(kNumSlots, '1')},
      {"photonas", std::string(kPhotoNasCode)},
      {"stylenas-7opt", std::string(kPhotoNasCode)},
      {"stylenas-5opt", "0101000000000000000000000001110"},
      {"stylenas-9opt", "0101000000100000001000010001111"},
  };
  return table;
}

}  // namespace

std::string slot_name(int index) {
  if (index < 0 || index >= kNumSlots) throw InputError("slot index out of range: " + std::to_string(index));
  const auto level = [](int i, int base) { return std::to_string(i - base + 1); };
  if (index < slot::kBottleneckWct) return "bfa.branch" + level(index, slot::kBfaBranch);
  if (index == slot::kBottleneckWct) return "bottleneck.wct";
  if (index < slot::kSkipNorm) return "skip" + level(index, slot::kSkipLink) + ".link";
  if (index < slot::kSkipWct) return "skip" + level(index, slot::kSkipNorm) + ".in";
  if (index < slot::kDecoderWct) return "skip" + level(index, slot::kSkipWct) + ".wct";
  if (index < slot::kAuxConv1) return "dec" + level(index, slot::kDecoderWct) + ".wct";
  if (index < slot::kAuxConv2) return "dec" + level(index, slot::kAuxConv1) + ".aux1";
  if (index < slot::kBottleneckNorm) return "dec" + level(index, slot::kAuxConv2) + ".aux2";
  if (index == slot::kBottleneckNorm) return "bottleneck.in";
  return "out.refine";
}

int slot_parent(int index) {
  if (index >= slot::kSkipNorm && index < slot::kSkipWct) return slot::kSkipLink + (index - slot::kSkipNorm);
  if (index >= slot::kSkipWct && index < slot::kDecoderWct) return slot::kSkipLink + (index - slot::kSkipWct);
  return -1;
}

ArchCode ArchCode::parse(std::string_view text) {
  std::uint32_t bits = 0;
  const std::size_t n = std::min<std::size_t>(text.size(), kNumSlots);
  for (std::size_t i = 0; i < n; ++i) {
    if (text[i] == '1') bits |= 1u << i;
    else if (text[i] != '0') throw ParseError("architecture code may contain only '0' and '1'", i);
  }
  if (text.size() != kNumSlots)
    throw ParseError("architecture code must have 31 characters, got " + std::to_string(text.size()), n);
  return ArchCode(bits);
}

int ArchCode::popcount() const { return std::popcount(bits_); }

std::string ArchCode::to_string() const {
  std::string s(kNumSlots, '0');
  for (int i = 0; i < kNumSlots; ++i)
    if (test(i)) s[static_cast<std::size_t>(i)] = '1';
  return s;
}

std::vector<int> ArchCode::set_slots() const {
  std::vector<int> out;
  for (int i = 0; i < kNumSlots; ++i)
    if (test(i)) out.push_back(i);
  return out;
}

std::strong_ordering operator<=>(const ArchCode& a, const ArchCode& b) {
  const std::uint32_t diff = a.bits_ ^ b.bits_;
  if (diff == 0) return std::strong_ordering::equal;
  const int first = std::countr_zero(diff);
  return a.test(first) ? std::strong_ordering::greater : std::strong_ordering::less;
}

int hamming(const ArchCode& a, const ArchCode& b) { return std::popcount(a.bits() ^ b.bits()); }

double op_fraction(const ArchCode& code) { return static_cast<double>(code.popcount()) / kNumSlots; }

ArchCode resolve_arch(std::string_view code_or_preset) {
  const auto& table = presets();
  if (auto it = table.find(code_or_preset); it != table.end()) return ArchCode::parse(it->second);
  if (code_or_preset.size() != kNumSlots && code_or_preset.find_first_not_of("01") != std::string_view::npos)
    throw InputError("unknown architecture preset '" + std::string(code_or_preset) + "'");
  return ArchCode::parse(code_or_preset);
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, code] : presets()) names.push_back(name);
  return names;
}

}  // namespace photonas
