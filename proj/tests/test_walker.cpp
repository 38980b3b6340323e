#include "mesc/walker.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <random>

using namespace mesc;
using namespace mesc::testutil;

namespace {
struct WalkRig {
  PageMapping m;
  PageTable pt;
  Msc msc{512, 8};
  Pwc pwc{8192};

  explicit WalkRig(PageMapping mapping)
      : m(std::move(mapping)), pt(PageTable::build_from_mapping(m)) {
    pt.scan_contiguity();
  }
  std::optional<WalkResult> walk(uint64_t va, Design d) {
    return walk_request(pt, msc, pwc, va, d);
  }
};
} // namespace

TEST_CASE("msc insert/lookup round trip and exact-frame invalidate") {
  Msc msc(512, 8);
  msc.insert(0x2000, 0b0000111);
  CHECK(*msc.lookup(0x2000) == 0b0000111);
  CHECK(!msc.lookup(0x2008).has_value());
  CHECK(msc.invalidate(0x2000));
  CHECK(!msc.lookup(0x2000).has_value());
  CHECK(!msc.invalidate(0x2000));
}

TEST_CASE("msc rejects misaligned keys") {
  Msc msc(512, 8);
  CHECK_THROWS_AS(msc.lookup(0x2001), std::invalid_argument);
  CHECK_THROWS_AS(msc.insert(0x2003, 0), std::invalid_argument);
}

TEST_CASE("msc keeps one line per frame and evicts LRU within a set") {
  Msc msc(512, 8); // 64 sets x 8 ways
  msc.insert(0x2000, 1);
  msc.insert(0x2000, 2); // replaces in place
  CHECK(*msc.lookup(0x2000) == 2);

  Msc msc2(512, 8);
  // frame indices congruent mod 64 share a set; key = frame_index * 8
  for (uint64_t k = 0; k < 9; k++)
    msc2.insert(k * 64 * 8, static_cast<uint8_t>(k));
  CHECK(!msc2.lookup(0).has_value()); // oldest evicted
  CHECK(*msc2.lookup(8 * 64 * 8) == 8);
}

TEST_CASE("run_from_bitmap finds the maximal linked run") {
  CHECK(run_from_bitmap(0b0000111, 2) == std::pair<uint32_t, uint32_t>{0, 3});
  CHECK(run_from_bitmap(0b0000111, 7) == std::pair<uint32_t, uint32_t>{7, 0});
  for (uint32_t i = 0; i < 8; i++)
    CHECK(run_from_bitmap(0b1111111, i) == std::pair<uint32_t, uint32_t>{0, 7});
}

TEST_CASE("run_from_bitmap matches a linear scan") {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 2000; i++) {
    uint8_t bitmap = static_cast<uint8_t>(rng() & 0x7F);
    uint32_t idx = static_cast<uint32_t>(rng() % 8);
    auto [first, len] = run_from_bitmap(bitmap, idx);
    // linear reference: expand over set link bits
    uint32_t f = idx;
    while (f > 0 && ((bitmap >> (f - 1)) & 1))
      f--;
    uint32_t l = idx;
    while (l < 7 && ((bitmap >> l) & 1))
      l++;
    CHECK(first == f);
    CHECK(len == l - f);
    CHECK(first <= idx);
    CHECK(first + len >= idx);
  }
}

TEST_CASE("pwc filters repeated upper-level reads") {
  WalkRig rig(contiguous_frame_mapping());
  auto first = rig.walk(0x80188000, Design::baseline);
  REQUIRE(first.has_value());
  CHECK(first->total_reads == 4);
  auto second = rig.walk(0x80188000, Design::baseline);
  CHECK(second->total_reads == 1); // upper path fully cached

  // a different frame under the same L3: new L2 entry, new L1 read
  PageMapping m2 = contiguous_frame_mapping();
  for (uint64_t k = 0; k < kFramePages; k++)
    m2.map_page(kThreeRegionFrame + kFramePages + k, 0x70000 + k);
  WalkRig rig2(m2);
  rig2.walk(0x80188000, Design::baseline);
  auto other = rig2.walk((kThreeRegionFrame + kFramePages) << kPageShift, Design::baseline);
  CHECK(other->total_reads == 2);
}

TEST_CASE("disabled pwc always walks four levels") {
  WalkRig rig(contiguous_frame_mapping());
  rig.pwc = Pwc(0);
  for (int i = 0; i < 3; i++)
    CHECK(rig.walk(0x80188000, Design::baseline)->total_reads == 4);
}

TEST_CASE("frame-contiguous walk coalesces the whole frame") {
  WalkRig rig(contiguous_frame_mapping());
  auto wr = rig.walk(0x80188000, Design::mesc);
  REQUIRE(wr.has_value());
  CHECK(wr->pfn == 0x60192);
  CHECK(wr->payload == WalkResult::Payload::subregion);
  CHECK(wr->sub.vsn_tag == 0x2000);
  CHECK(wr->sub.length == 7);
  CHECK(wr->sub.base_pfn == kContiguousFramePfn);
  CHECK(!wr->msc_probed);
  CHECK(wr->total_reads == 4); // 3 uppers + head
  CHECK(wr->critical_reads == 4);
}

TEST_CASE("cold subregion walk fills the bitmap and coalesces the run") {
  WalkRig rig(three_region_frame_mapping());
  // request inside S1
  auto wr = rig.walk((kThreeRegionFrame + 0x40 + 5) << kPageShift, Design::mesc);
  REQUIRE(wr.has_value());
  CHECK(wr->pfn == kRegionOnePfn + 0x45);
  CHECK(wr->msc_probed);
  CHECK(!wr->msc_hit);
  CHECK(*rig.msc.lookup(0x2000) == 0b0000111);
  CHECK(wr->sub.vsn_tag == 0x2000);
  CHECK(wr->sub.length == 3);
  CHECK(wr->sub.base_pfn == kRegionOnePfn);
  // heads of the 6 contiguous subregions, one already on the critical path
  CHECK(wr->critical_reads == 4);
  CHECK(wr->total_reads == 4 + 5);
}

TEST_CASE("warm subregion walk takes the run straight from the bitmap") {
  WalkRig rig(three_region_frame_mapping());
  rig.walk((kThreeRegionFrame + 0x40) << kPageShift, Design::mesc); // warm the MSC
  auto wr = rig.walk((kThreeRegionFrame + 0x100 + 9) << kPageShift, Design::mesc);
  REQUIRE(wr.has_value());
  CHECK(wr->msc_hit);
  CHECK(wr->pfn == kRegionTwoPfn + 9);
  CHECK(wr->sub.vsn_tag == 0x2004);
  CHECK(wr->sub.length == 0);
  CHECK(wr->sub.base_pfn == kRegionTwoPfn);
  CHECK(wr->total_reads == wr->critical_reads); // zero extra head reads

  auto s7 = rig.walk((kThreeRegionFrame + 0x1C0 + 1) << kPageShift, Design::mesc);
  REQUIRE(s7.has_value());
  CHECK(s7->msc_hit);
  CHECK(s7->sub.vsn_tag == 0x2007);
  CHECK(s7->sub.length == 0);
  CHECK(s7->sub.base_pfn == kRegionThreePfn);
}

TEST_CASE("warm-hit run base rebases to the run's first subregion") {
  WalkRig rig(three_region_frame_mapping());
  rig.walk((kThreeRegionFrame + 0x40) << kPageShift, Design::mesc);
  // request in S3: run S0..S3, base pfn must be S0's head
  auto wr = rig.walk((kThreeRegionFrame + 3 * 64 + 8) << kPageShift, Design::mesc);
  REQUIRE(wr.has_value());
  CHECK(wr->msc_hit);
  CHECK(wr->sub.vsn_tag == 0x2000);
  CHECK(wr->sub.length == 3);
  CHECK(wr->sub.base_pfn == kRegionOnePfn);
}

TEST_CASE("discontiguous page walks plainly and reads its own pte") {
  WalkRig rig(three_region_frame_mapping());
  Vfn vfn = kThreeRegionFrame + 5 * 64 + 2; // S5 is scattered
  auto wr = rig.walk(vfn << kPageShift, Design::mesc);
  REQUIRE(wr.has_value());
  CHECK(wr->payload == WalkResult::Payload::regular);
  CHECK(!wr->msc_probed);
  CHECK((wr->pfn << kPageShift) == *oracle_translate(rig.m, vfn << kPageShift));
}

TEST_CASE("colt run spans the maximal piece of the 4-page block") {
  PageMapping m;
  // pages 0..2 of the block contiguous, page 3 elsewhere
  m.map_page(0x1000, 0x500);
  m.map_page(0x1001, 0x501);
  m.map_page(0x1002, 0x502);
  m.map_page(0x1003, 0x900);
  WalkRig rig(std::move(m));
  auto wr = rig.walk(0x1001ull << kPageShift, Design::colt);
  REQUIRE(wr.has_value());
  REQUIRE(wr->colt.has_value());
  CHECK(wr->colt->base_vfn == 0x1000);
  CHECK(wr->colt->length == 2);
  CHECK(wr->colt->base_pfn == 0x500);

  auto odd = rig.walk(0x1003ull << kPageShift, Design::colt);
  REQUIRE(odd->colt.has_value());
  CHECK(odd->colt->base_vfn == 0x1003);
  CHECK(odd->colt->length == 0);
}

TEST_CASE("colt run respects permission boundaries") {
  PageMapping m;
  Permissions ro{true, false, false, true};
  m.map_page(0x1000, 0x500);
  m.map_page(0x1001, 0x501, ro);
  m.map_page(0x1002, 0x502);
  m.map_page(0x1003, 0x503);
  WalkRig rig(std::move(m));
  auto wr = rig.walk(0x1002ull << kPageShift, Design::colt);
  REQUIRE(wr->colt.has_value());
  CHECK(wr->colt->base_vfn == 0x1002);
  CHECK(wr->colt->length == 1);
}

TEST_CASE("mesc_colt emits both payloads in a contiguous subregion") {
  WalkRig rig(three_region_frame_mapping());
  auto wr = rig.walk((kThreeRegionFrame + 0x41) << kPageShift, Design::mesc_colt);
  REQUIRE(wr.has_value());
  CHECK(wr->payload == WalkResult::Payload::subregion);
  REQUIRE(wr->colt.has_value());
  CHECK(wr->colt->base_vfn == kThreeRegionFrame + 0x40);
  CHECK(wr->colt->length == 3);
  CHECK(wr->colt->base_pfn == kRegionOnePfn + 0x40);
}

TEST_CASE("walks fault on unmapped pages") {
  WalkRig rig(three_region_frame_mapping());
  CHECK(!rig.walk(0x12345678000ull, Design::mesc).has_value());
  CHECK(!rig.walk(0x12345678000ull, Design::baseline).has_value());
}

TEST_CASE("walk-time bitmaps equal the brute force on random frames") {
  std::mt19937_64 rng(42);
  PageMapping m;
  std::vector<Vfn> frames;
  for (int f = 0; f < 300; f++) {
    Vfn base = 0x300000 + static_cast<uint64_t>(f) * kFramePages;
    random_frame_mapping(m, rng, base, 0x100000000ull + static_cast<uint64_t>(f) * 0x20000);
    frames.push_back(base);
  }
  WalkRig rig(std::move(m));
  for (Vfn base : frames) {
    auto l2 = rig.pt.find_l2(base);
    if (l2.ac || l2.c_bits == 0)
      continue; // bitmap fill only happens on mode-(c) walks
    uint32_t sub = 0;
    while (!((l2.c_bits >> sub) & 1))
      sub++;
    auto wr = rig.walk((base + sub * kSubregionPages) << kPageShift, Design::mesc);
    REQUIRE(wr.has_value());
    CHECK(*rig.msc.lookup(vsn_of(base)) == msc_bitmap_oracle(rig.m, base));
  }
}

TEST_CASE("every page of an inserted payload replays against the oracle") {
  std::mt19937_64 rng(43);
  PageMapping m;
  std::vector<Vfn> frames;
  for (int f = 0; f < 100; f++) {
    Vfn base = 0x400000 + static_cast<uint64_t>(f) * kFramePages;
    random_frame_mapping(m, rng, base, 0x200000000ull + static_cast<uint64_t>(f) * 0x20000);
    frames.push_back(base);
  }
  WalkRig rig(std::move(m));
  for (Vfn base : frames) {
    for (int probe = 0; probe < 4; probe++) {
      Vfn vfn = base + (rng() % kFramePages);
      uint64_t va = vfn << kPageShift;
      auto wr = rig.walk(va, Design::mesc);
      if (!wr)
        continue;
      CHECK((wr->pfn << kPageShift) == *oracle_translate(rig.m, va));
      if (wr->payload == WalkResult::Payload::subregion) {
        auto [lo, hi] = subregion_coverage_bounds(wr->sub.vsn_tag, wr->sub.length);
        for (Vfn v = lo; v <= hi; v++) {
          auto pa = oracle_translate(rig.m, v << kPageShift);
          REQUIRE(pa.has_value());
          CHECK((*pa >> kPageShift) == wr->sub.base_pfn + (v - lo));
        }
      }
    }
  }
}

TEST_CASE("sixteen walkers start immediately, the seventeenth queues") {
  WalkerPool pool(16, 0);
  for (int i = 0; i < 16; i++) {
    auto adm = pool.admit(100, 50);
    CHECK(adm.start_time == 100);
    CHECK(!adm.queued);
  }
  auto adm = pool.admit(100, 50);
  CHECK(adm.queued);
  CHECK(adm.start_time == 150);
  CHECK(adm.queue_delay == 50);
}

TEST_CASE("a burst of 64 uniform walks drains in four waves") {
  WalkerPool pool(16, 0);
  const uint64_t L = 200;
  uint64_t last_start = 0;
  for (int i = 0; i < 64; i++)
    last_start = pool.admit(0, L).start_time;
  CHECK(last_start == 3 * L);
}

TEST_CASE("bounded pwb reports overflow") {
  WalkerPool pool(1, 2);
  pool.admit(0, 100);
  CHECK(!pool.admit(0, 100).overflowed);
  CHECK(!pool.admit(0, 100).overflowed);
  CHECK(pool.admit(0, 100).overflowed); // two already waiting
}
