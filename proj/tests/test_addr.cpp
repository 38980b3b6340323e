#include "mesc/addr.hpp"

#include <doctest.h>

#include <random>

using namespace mesc;

TEST_CASE("decompose_va splits the documented example address") {
  // VFN 0x80188 sits in subregion 6 of frame 0x80000
  VaParts p = decompose_va(0x80188000ull | 0x123);
  CHECK(p.vfn == 0x80188);
  CHECK(p.vsn == 0x2006);
  CHECK(p.frame_base_vfn == 0x80000);
  CHECK(p.subregion_index == 6);
  CHECK(p.page_offset == 0x123);
}

TEST_CASE("decompose_va zero") {
  VaParts p = decompose_va(0);
  CHECK(p.vfn == 0);
  CHECK(p.vsn == 0);
  CHECK(p.frame_base_vfn == 0);
  CHECK(p.subregion_index == 0);
  CHECK(p.page_offset == 0);
}

TEST_CASE("decompose_va last page of subregion 0") {
  VaParts p = decompose_va(0x8003Full << kPageShift);
  CHECK(p.vsn == 0x2000);
  CHECK(p.subregion_index == 0);
}

TEST_CASE("non-canonical addresses are rejected") {
  CHECK_THROWS_AS(decompose_va(1ull << 48), std::invalid_argument);
  CHECK_THROWS_AS(decompose_va(0x8000000000000000ull), std::invalid_argument);
  // sign-extended upper-half address is canonical
  CHECK_NOTHROW(decompose_va(0xFFFF800000000000ull));
}

TEST_CASE("regular set index") {
  CHECK(regular_set_index(0x80188) == 0x08);
  CHECK(regular_set_index(0) == 0);
  CHECK(regular_set_index(0x20) == 0);
}

TEST_CASE("subregion set index") {
  CHECK(subregion_set_index(0x2006) == 0);
  // adjacent frames select adjacent sets
  CHECK(subregion_set_index(0x2008) == 1);
  CHECK(subregion_set_index(0x2010) == 2);
}

TEST_CASE("all subregions of a frame share one set") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; i++) {
    Vsn base = frame_vsn_base_of(rng() & ((1ull << 30) - 1));
    uint32_t set = subregion_set_index(base);
    for (uint32_t s = 0; s < kSubregionsPerFrame; s++)
      CHECK(subregion_set_index(base + s) == set);
    CHECK(subregion_set_index(base) ==
          subregion_set_index(base & ~(kSubregionsPerFrame - 1)));
  }
}

TEST_CASE("adjacent frames map to adjacent sets mod 32") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 1000; i++) {
    Vsn base = frame_vsn_base_of(rng() & ((1ull << 30) - 1));
    uint32_t a = subregion_set_index(base);
    uint32_t b = subregion_set_index(base + kSubregionsPerFrame);
    CHECK(b == (a + 1) % kIommuSets);
  }
}

TEST_CASE("decompose then recompose reproduces the address bits") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 10000; i++) {
    uint64_t va = rng() & ((1ull << 47) - 1); // canonical lower half
    VaParts p = decompose_va(va);
    CHECK(((p.vfn << kPageShift) | p.page_offset) == va);
    CHECK((p.vsn << kSubregionShift | (p.vfn & (kSubregionPages - 1))) == p.vfn);
    CHECK(p.frame_base_vfn + (p.vfn & (kFramePages - 1)) == p.vfn);
    CHECK(p.subregion_index == ((p.vfn >> kSubregionShift) & 7));
  }
}
