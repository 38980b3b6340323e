// Address geometry and bit-exact VA decompositions shared by all modules.
#pragma once

#include <cstdint>
#include <stdexcept>

namespace mesc {

using Vfn = uint64_t; // virtual frame number  (va >> 12)
using Pfn = uint64_t; // physical frame number (pa >> 12)
using Vsn = uint64_t; // virtual subregion number (vfn >> 6)

// Fixed geometry: 4KB pages, 64-page subregions, 8 subregions per 2MB frame.
inline constexpr uint64_t kPageShift = 12;
inline constexpr uint64_t kPageSize = 1ull << kPageShift;
inline constexpr uint64_t kSubregionShift = 6;
inline constexpr uint64_t kSubregionPages = 1ull << kSubregionShift;
inline constexpr uint64_t kSubregionsPerFrame = 8;
inline constexpr uint64_t kFrameShift = 9;
inline constexpr uint64_t kFramePages = 1ull << kFrameShift;
inline constexpr uint64_t kIommuSets = 32;
inline constexpr uint64_t kVaBits = 48;

static_assert(kSubregionPages * kSubregionsPerFrame == kFramePages);
static_assert(kPageSize * kFramePages == 2ull * 1024 * 1024);

struct Permissions {
  bool readable = true;
  bool writable = true;
  bool executable = false;
  bool user = true;

  bool operator==(const Permissions&) const = default;
};

// 48-bit canonical form: bits 63..47 must replicate bit 47.
inline bool is_canonical(uint64_t va) {
  int64_t sign_extended = (static_cast<int64_t>(va) << (64 - kVaBits)) >> (64 - kVaBits);
  return static_cast<uint64_t>(sign_extended) == va;
}

struct VaParts {
  Vfn vfn;
  Vsn vsn;
  Vfn frame_base_vfn;   // vfn with the low 9 bits cleared
  uint32_t subregion_index; // vsn mod 8
  uint64_t page_offset;
};

inline VaParts decompose_va(uint64_t va) {
  if (!is_canonical(va))
    throw std::invalid_argument("non-canonical virtual address");
  VaParts p;
  p.vfn = va >> kPageShift;
  p.vsn = p.vfn >> kSubregionShift;
  p.frame_base_vfn = p.vfn & ~(kFramePages - 1);
  p.subregion_index = static_cast<uint32_t>(p.vsn & (kSubregionsPerFrame - 1));
  p.page_offset = va & (kPageSize - 1);
  return p;
}

// synthetic heap base used by the trace generators and allocator defaults
inline constexpr Vfn kDefaultHeapVfn = 0x80000; // VA 0x80000000, frame aligned

inline Vsn vsn_of(Vfn vfn) { return vfn >> kSubregionShift; }
inline Vfn frame_base_of(Vfn vfn) { return vfn & ~(kFramePages - 1); }
inline Vsn frame_vsn_base_of(Vsn vsn) { return vsn & ~(kSubregionsPerFrame - 1); }

// Regular entries index with VFN[4:0] (VA bits 16..12).
inline uint32_t regular_set_index(Vfn vfn) {
  return static_cast<uint32_t>(vfn & (kIommuSets - 1));
}

// Subregion entries shift the index left by 3 subregion bits (VA bits 25..21),
// so all 8 subregions of a frame select one set and adjacent frames select
// adjacent sets.
inline uint32_t subregion_set_index(Vsn vsn) {
  return static_cast<uint32_t>((vsn >> 3) & (kIommuSets - 1));
}

} // namespace mesc
