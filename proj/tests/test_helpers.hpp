// Shared fixtures and independent brute-force oracles. Everything here works
// straight off the PageMapping so it cannot share a code path with the bit
// logic it is used to check.
#pragma once

#include "mesc/mapping.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

namespace mesc::testutil {

// Frame at VFN 0x80000 split into three coalescible regions:
//   S0..S3 -> PFN 0x00F87.. (256 contiguous pages)
//   S4     -> PFN 0x0201D.. (64 pages)
//   S5,S6  -> scattered (discontiguous)
//   S7     -> PFN 0x0205D.. (64 pages)
inline constexpr Vfn kThreeRegionFrame = 0x80000;
inline constexpr Pfn kRegionOnePfn = 0x00F87;
inline constexpr Pfn kRegionTwoPfn = 0x0201D;
inline constexpr Pfn kRegionThreePfn = 0x0205D;

inline PageMapping three_region_frame_mapping() {
  PageMapping m;
  for (uint64_t k = 0; k < 256; k++)
    m.map_page(kThreeRegionFrame + k, kRegionOnePfn + k);
  for (uint64_t k = 0; k < 64; k++)
    m.map_page(kThreeRegionFrame + 0x100 + k, kRegionTwoPfn + k);
  for (uint64_t k = 0; k < 128; k++) // S5, S6 present but never adjacent
    m.map_page(kThreeRegionFrame + 0x140 + k, 0x30000 + 2 * k);
  for (uint64_t k = 0; k < 64; k++)
    m.map_page(kThreeRegionFrame + 0x1C0 + k, kRegionThreePfn + k);
  return m;
}

// Fully contiguous frame: VFN 0x80000..0x801FF -> PFN 0x6000A..0x60209.
inline constexpr Pfn kContiguousFramePfn = 0x6000A;

inline PageMapping contiguous_frame_mapping() {
  PageMapping m;
  for (uint64_t k = 0; k < kFramePages; k++)
    m.map_page(kThreeRegionFrame + k, kContiguousFramePfn + k);
  return m;
}

// ---- brute-force oracles ----

// Maximal runs of consecutive VFNs with consecutive PFNs and equal
// permissions, as flat lengths.
inline std::vector<uint64_t> run_lengths_oracle(const PageMapping& m) {
  std::vector<uint64_t> lengths;
  bool in_run = false;
  Vfn prev_vfn = 0;
  Pfn prev_pfn = 0;
  Permissions prev_perms;
  uint64_t len = 0;
  for (const auto& [vfn, info] : m) {
    if (in_run && vfn == prev_vfn + 1 && info.pfn == prev_pfn + 1 &&
        info.perms == prev_perms) {
      len++;
    } else {
      if (in_run)
        lengths.push_back(len);
      len = 1;
      in_run = true;
    }
    prev_vfn = vfn;
    prev_pfn = info.pfn;
    prev_perms = info.perms;
  }
  if (in_run)
    lengths.push_back(len);
  return lengths;
}

// Page-by-page recomputation of a frame's C bits and AC bit.
struct FrameBitsOracle {
  std::array<bool, 8> c{};
  bool ac = false;
};

inline FrameBitsOracle frame_bits_oracle(const PageMapping& m, Vfn frame_base) {
  FrameBitsOracle o;
  std::array<std::optional<PageInfo>, 8> heads;
  for (uint32_t s = 0; s < 8; s++) {
    Vfn base = frame_base + s * kSubregionPages;
    auto head = m.find(base);
    heads[s] = head;
    bool ok = head.has_value();
    for (uint64_t p = 1; ok && p < kSubregionPages; p++) {
      auto info = m.find(base + p);
      ok = info && info->pfn == head->pfn + p && info->perms == head->perms;
    }
    o.c[s] = ok;
  }
  o.ac = true;
  for (uint32_t s = 0; s < 8; s++)
    if (!o.c[s])
      o.ac = false;
  for (uint32_t s = 1; o.ac && s < 8; s++)
    o.ac = heads[s]->pfn == heads[s - 1]->pfn + kSubregionPages &&
           heads[s]->perms == heads[s - 1]->perms;
  return o;
}

// Inter-subregion links: bit i set iff subregions i and i+1 are both
// contiguous, heads 64 pages apart, permissions equal.
inline uint8_t msc_bitmap_oracle(const PageMapping& m, Vfn frame_base) {
  FrameBitsOracle bits = frame_bits_oracle(m, frame_base);
  uint8_t bitmap = 0;
  for (uint32_t i = 0; i + 1 < 8; i++) {
    if (!bits.c[i] || !bits.c[i + 1])
      continue;
    auto a = m.find(frame_base + i * kSubregionPages);
    auto b = m.find(frame_base + (i + 1) * kSubregionPages);
    if (b->pfn == a->pfn + kSubregionPages && b->perms == a->perms)
      bitmap |= static_cast<uint8_t>(1u << i);
  }
  return bitmap;
}

inline double subregion_coverage_oracle(const PageMapping& m) {
  if (m.empty())
    return 0.0;
  std::vector<Vsn> vsns;
  for (const auto& [vfn, info] : m)
    if (vsns.empty() || vsns.back() != vsn_of(vfn))
      vsns.push_back(vsn_of(vfn));
  uint64_t covered = 0;
  for (Vsn vsn : vsns) {
    Vfn base = vsn << kSubregionShift;
    auto head = m.find(base);
    bool ok = head.has_value();
    for (uint64_t p = 1; ok && p < kSubregionPages; p++) {
      auto info = m.find(base + p);
      ok = info && info->pfn == head->pfn + p && info->perms == head->perms;
    }
    if (ok)
      covered += kSubregionPages;
  }
  return static_cast<double>(covered) / static_cast<double>(m.size());
}

// Explicit per-page enumeration of a subregion entry's coverage.
inline std::vector<Vfn> enumerate_subregion_coverage(Vsn tag, uint32_t length) {
  std::vector<Vfn> pages;
  for (uint32_t s = 0; s <= length; s++)
    for (uint64_t p = 0; p < kSubregionPages; p++)
      pages.push_back(((tag + s) << kSubregionShift) + p);
  return pages;
}

// Random frame with mixed subregion states: contiguous, linked-contiguous,
// scattered, holes, permission flips. Returns the frame base VFN used.
inline Vfn random_frame_mapping(PageMapping& m, std::mt19937_64& rng, Vfn frame_base,
                                Pfn pfn_space_base) {
  Pfn next = pfn_space_base;
  Pfn linked = pfn_space_base + 0x10000; // shared run for linked subregions
  Permissions rw{};
  Permissions ro{true, false, false, true};
  for (uint32_t s = 0; s < 8; s++) {
    Vfn base = frame_base + s * kSubregionPages;
    switch (rng() % 5) {
    case 0: // contiguous, own run
      for (uint64_t p = 0; p < kSubregionPages; p++)
        m.map_page(base + p, next + p, rw);
      next += 2 * kSubregionPages;
      break;
    case 1: // contiguous and linked to the previous linked subregion
      for (uint64_t p = 0; p < kSubregionPages; p++)
        m.map_page(base + p, linked + p, rw);
      linked += kSubregionPages;
      break;
    case 2: // scattered
      for (uint64_t p = 0; p < kSubregionPages; p++)
        m.map_page(base + p, next + 2 * p, rw);
      next += 3 * kSubregionPages;
      break;
    case 3: // contiguous but permission-split in the middle
      for (uint64_t p = 0; p < kSubregionPages; p++)
        m.map_page(base + p, next + p, p < 32 ? rw : ro);
      next += 2 * kSubregionPages;
      break;
    case 4: // hole: one absent page
      for (uint64_t p = 0; p < kSubregionPages; p++)
        if (p != 17)
          m.map_page(base + p, next + p, rw);
      next += 2 * kSubregionPages;
      break;
    }
  }
  return frame_base;
}

} // namespace mesc::testutil
