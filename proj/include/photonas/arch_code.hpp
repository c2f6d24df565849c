#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace photonas {

inline constexpr int kNumSlots = 31;

// Canonical slot map. Slot i corresponds to character i of the printed code.
namespace slot {
inline constexpr int kBfaBranch = 0;        // S0..S3: BFA branch from encoder stage 1..4
inline constexpr int kBottleneckWct = 4;    // S4
inline constexpr int kSkipLink = 5;         // S5..S8: instance-normalized skip link, levels 1..4
inline constexpr int kSkipNorm = 9;         // S9..S12: instance norm on skip link (needs its S5..S8)
inline constexpr int kSkipWct = 13;         // S13..S16: transfer on skip link (needs its S5..S8)
inline constexpr int kDecoderWct = 17;      // S17..S20: transfer at decoder stage output, levels 1..4
inline constexpr int kAuxConv1 = 21;        // S21..S24: first auxiliary conv+ReLU, levels 1..4
inline constexpr int kAuxConv2 = 25;        // S25..S28: second auxiliary conv+ReLU, levels 1..4
inline constexpr int kBottleneckNorm = 29;  // S29
inline constexpr int kOutputRefine = 30;    // S30
}  // namespace slot

/// Human-readable slot description, e.g. "skip2.in".
std::string slot_name(int index);

/// Parent slot for dependent slots (S9..S16), or -1.
int slot_parent(int index);

class ArchCode {
 public:
  constexpr ArchCode() = default;

  static ArchCode parse(std::string_view text);
  static constexpr ArchCode from_bits(std::uint32_t bits) { return ArchCode(bits & kMask); }
  static constexpr ArchCode all_ones() { return ArchCode(kMask); }
  static constexpr ArchCode all_zeros() { return ArchCode(0); }

  constexpr bool test(int index) const { return (bits_ >> index) & 1u; }
  constexpr ArchCode with(int index, bool on) const {
    return ArchCode(on ? (bits_ | (1u << index)) : (bits_ & ~(1u << index)));
  }
  constexpr ArchCode flipped(int index) const { return ArchCode(bits_ ^ (1u << index)); }
  constexpr std::uint32_t bits() const { return bits_; }

  int popcount() const;
  std::string to_string() const;
  std::vector<int> set_slots() const;
  bool is_subset_of(const ArchCode& other) const { return (bits_ & ~other.bits_) == 0; }

  friend constexpr bool operator==(const ArchCode&, const ArchCode&) = default;
  // Lexicographic order of the printed string.
  friend std::strong_ordering operator<=>(const ArchCode& a, const ArchCode& b);

 private:
  static constexpr std::uint32_t kMask = (1u << kNumSlots) - 1u;
  constexpr explicit ArchCode(std::uint32_t bits) : bits_(bits) {}

  std::uint32_t bits_ = 0;
};

inline ArchCode parse_code(std::string_view text) { return ArchCode::parse(text); }

int hamming(const ArchCode& a, const ArchCode& b);

/// popcount / 31
double op_fraction(const ArchCode& code);

inline constexpr std::string_view kPhotoNasCode = "0101000000100000000000000001111";

/// Accepts a 31-char code or a preset name: photonet, photonas, stylenas-5opt,
/// stylenas-7opt, stylenas-9opt.
ArchCode resolve_arch(std::string_view code_or_preset);
std::vector<std::string> preset_names();

}  // namespace photonas
