#include "mesc/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mesc {

void PageMapping::map_page(Vfn vfn, Pfn pfn, Permissions perms) {
  if (pages_.count(vfn))
    throw std::invalid_argument("map_page: vfn already mapped");
  auto [it, fresh] = pfn_owner_.emplace(pfn, vfn);
  if (!fresh)
    throw std::invalid_argument("map_page: pfn already backs another vfn");
  pages_[vfn] = PageInfo{pfn, perms};
}

void PageMapping::unmap_page(Vfn vfn) {
  auto it = pages_.find(vfn);
  if (it == pages_.end())
    throw std::invalid_argument("unmap_page: vfn not mapped");
  pfn_owner_.erase(it->second.pfn);
  pages_.erase(it);
}

void PageMapping::remap_page(Vfn vfn, Pfn new_pfn) {
  auto it = pages_.find(vfn);
  if (it == pages_.end())
    throw std::invalid_argument("remap_page: vfn not mapped");
  if (it->second.pfn == new_pfn)
    return;
  auto owner = pfn_owner_.find(new_pfn);
  if (owner != pfn_owner_.end() && owner->second != vfn)
    throw std::invalid_argument("remap_page: pfn already backs another vfn");
  pfn_owner_.erase(it->second.pfn);
  pfn_owner_[new_pfn] = vfn;
  it->second.pfn = new_pfn;
}

void PageMapping::set_perms(Vfn vfn, Permissions perms) {
  auto it = pages_.find(vfn);
  if (it == pages_.end())
    throw std::invalid_argument("set_perms: vfn not mapped");
  it->second.perms = perms;
}

std::optional<PageInfo> PageMapping::find(Vfn vfn) const {
  auto it = pages_.find(vfn);
  if (it == pages_.end())
    return std::nullopt;
  return it->second;
}

std::optional<uint64_t> oracle_translate(const PageMapping& m, uint64_t va) {
  if (!is_canonical(va))
    return std::nullopt;
  auto info = m.find(va >> kPageShift);
  if (!info)
    return std::nullopt;
  return (info->pfn << kPageShift) | (va & (kPageSize - 1));
}

BuddyAllocator::BuddyAllocator(uint64_t total_pages)
    : total_pages_(total_pages), free_pages_(total_pages) {
  // carve into maximal size-aligned blocks
  uint64_t base = 0;
  while (base < total_pages) {
    int order = kMaxOrder;
    while (order > 0 &&
           ((base & ((1ull << order) - 1)) != 0 ||
            base + (1ull << order) > total_pages))
      order--;
    free_[order].insert(base);
    base += 1ull << order;
  }
}

std::optional<uint64_t> BuddyAllocator::take_block(int order) {
  int j = order;
  while (j <= kMaxOrder && free_[j].empty())
    j++;
  if (j > kMaxOrder)
    return std::nullopt;
  uint64_t base = *free_[j].begin();
  free_[j].erase(free_[j].begin());
  while (j > order) {
    j--;
    free_[j].insert(base + (1ull << j)); // keep the lower half
  }
  free_pages_ -= 1ull << order;
  return base;
}

bool BuddyAllocator::alloc_specific(uint64_t base, int order) {
  for (int j = order; j <= kMaxOrder; j++) {
    uint64_t b = base & ~((1ull << j) - 1);
    auto it = free_[j].find(b);
    if (it == free_[j].end())
      continue;
    free_[j].erase(it);
    while (j > order) {
      j--;
      uint64_t lower = b;
      uint64_t upper = b + (1ull << j);
      if (base < upper) {
        free_[j].insert(upper);
        b = lower;
      } else {
        free_[j].insert(lower);
        b = upper;
      }
    }
    free_pages_ -= 1ull << order;
    return true;
  }
  return false;
}

void BuddyAllocator::free_block(uint64_t base, int order) {
  free_pages_ += 1ull << order;
  while (order < kMaxOrder) {
    uint64_t buddy = base ^ (1ull << order);
    auto it = free_[order].find(buddy);
    if (it == free_[order].end())
      break;
    free_[order].erase(it);
    base = std::min(base, buddy);
    order++;
  }
  free_[order].insert(base);
}

bool BuddyAllocator::range_fully_pinned(uint64_t base, int order) const {
  uint64_t end = base + (1ull << order);
  for (int j = 0; j < order; j++) {
    auto it = free_[j].lower_bound(base);
    if (it != free_[j].end() && *it < end)
      return false;
  }
  return true;
}

// Alloc/free cycling, the way long-running systems fragment: carve all of
// memory into small random-order blocks, then release a random subset until
// only the requested fraction stays pinned. Free holes inherit the block-size
// distribution plus buddy merges.
void BuddyAllocator::fragment(double fraction, uint64_t seed, bool defrag) {
  if (fraction < 0.0 || fraction > 1.0)
    throw std::invalid_argument("fragment: fraction outside [0,1]");
  frag_level_ = fraction;
  uint64_t target = static_cast<uint64_t>(
      std::llround(fraction * static_cast<double>(total_pages_)));
  std::mt19937_64 rng(seed);

  std::vector<std::pair<uint64_t, int>> blocks;
  while (free_pages_ > 0) {
    // mostly 1..16 page allocations with an occasional 64..256 page one
    int order = rng() % 256 == 0 ? 6 + static_cast<int>(rng() % 3)
                                 : static_cast<int>(rng() % 5);
    while (order > 0 && (1ull << order) > free_pages_)
      order--;
    std::optional<uint64_t> base = take_block(order);
    while (!base && order > 0) {
      order--;
      base = take_block(order);
    }
    if (!base)
      break;
    blocks.emplace_back(*base, order);
  }
  std::shuffle(blocks.begin(), blocks.end(), rng);

  uint64_t pinned = total_pages_ - free_pages_;
  for (const auto& [base, order] : blocks) {
    if (pinned <= target)
      break;
    if (pinned - (1ull << order) < target)
      continue; // would overshoot; a smaller block may still fit
    free_block(base, order);
    pinned -= 1ull << order;
  }
  if (defrag)
    compact(total_pages_ / 8);
}

// One bounded pass per order: where a free block's buddy is fully pinned and
// a second same-order free block exists, relocate the buddy's pages into the
// second block so the pair merges one order up.
void BuddyAllocator::compact(uint64_t move_budget_pages) {
  for (int order = 0; order < kMaxOrder && move_budget_pages > 0; order++) {
    bool progress = true;
    while (progress && free_[order].size() >= 2 &&
           move_budget_pages >= (1ull << order)) {
      progress = false;
      for (auto it = free_[order].begin(); it != free_[order].end(); ++it) {
        uint64_t base = *it;
        uint64_t buddy = base ^ (1ull << order);
        if (buddy + (1ull << order) > total_pages_)
          continue;
        if (!range_fully_pinned(buddy, order))
          continue;
        uint64_t dest = *free_[order].rbegin();
        if (dest == base)
          continue;
        free_[order].erase(dest); // becomes the relocation target (pinned)
        free_[order].erase(base);
        free_pages_ -= 2ull << order;
        free_block(std::min(base, buddy), order + 1);
        move_budget_pages -= 1ull << order;
        progress = true;
        break;
      }
    }
  }
}

void BuddyAllocator::allocate_range(PageMapping& m, Vfn vfn_start,
                                    uint64_t npages, Permissions perms) {
  Vfn vfn = vfn_start;
  uint64_t remaining = npages;
  while (remaining > 0) {
    int order = 0;
    while (order < kMaxOrder && (2ull << order) <= remaining)
      order++;
    std::optional<uint64_t> base = take_block(order);
    while (!base && order > 0) {
      order--;
      base = take_block(order);
    }
    if (!base)
      throw std::runtime_error("allocate_range: out of simulated physical memory");
    for (uint64_t i = 0; i < (1ull << order); i++)
      m.map_page(vfn + i, *base + i, perms);
    vfn += 1ull << order;
    remaining -= 1ull << order;
  }
}

PageMapping allocate_heap(uint64_t total_pages, BuddyAllocator& buddy,
                          Vfn heap_base_vfn, Permissions perms) {
  PageMapping m;
  if (total_pages > 0)
    buddy.allocate_range(m, heap_base_vfn, total_pages, perms);
  return m;
}

PageMapping make_contiguous_mapping(uint64_t total_pages, Vfn heap_base_vfn,
                                    Pfn phys_base_pfn, Permissions perms) {
  if (heap_base_vfn % kFramePages != 0)
    throw std::invalid_argument("make_contiguous_mapping: base not frame aligned");
  PageMapping m;
  uint64_t frames = (total_pages + kFramePages - 1) / kFramePages;
  Pfn pfn = (phys_base_pfn + kFramePages - 1) & ~(kFramePages - 1);
  for (uint64_t i = 0; i < frames * kFramePages; i++)
    m.map_page(heap_base_vfn + i, pfn + i, perms);
  return m;
}

ContiguityHistogram contiguity_histogram(const PageMapping& m,
                                         std::vector<uint64_t> bucket_edges) {
  if (m.empty())
    throw std::invalid_argument("contiguity_histogram: empty mapping");
  if (bucket_edges.empty() || !std::is_sorted(bucket_edges.begin(), bucket_edges.end()))
    throw std::invalid_argument("contiguity_histogram: edges must be sorted and non-empty");

  std::vector<uint64_t> run_lengths;
  uint64_t run_len = 0;
  Vfn prev_vfn = 0;
  Pfn prev_pfn = 0;
  Permissions prev_perms;
  for (const auto& [vfn, info] : m) {
    bool extends = run_len > 0 && vfn == prev_vfn + 1 &&
                   info.pfn == prev_pfn + 1 && info.perms == prev_perms;
    if (extends) {
      run_len++;
    } else {
      if (run_len > 0)
        run_lengths.push_back(run_len);
      run_len = 1;
    }
    prev_vfn = vfn;
    prev_pfn = info.pfn;
    prev_perms = info.perms;
  }
  run_lengths.push_back(run_len);

  ContiguityHistogram h;
  h.upper_edges = std::move(bucket_edges);
  uint64_t max_run = *std::max_element(run_lengths.begin(), run_lengths.end());
  if (max_run > h.upper_edges.back())
    h.upper_edges.push_back(UINT64_MAX); // overflow bucket
  h.region_counts.assign(h.upper_edges.size(), 0);
  h.page_counts.assign(h.upper_edges.size(), 0);
  for (uint64_t len : run_lengths) {
    std::size_t b = std::lower_bound(h.upper_edges.begin(), h.upper_edges.end(), len) -
                    h.upper_edges.begin();
    h.region_counts[b]++;
    h.page_counts[b] += len;
    h.total_regions++;
    h.total_pages += len;
  }
  h.region_ratio.resize(h.upper_edges.size());
  h.coverage_cum.resize(h.upper_edges.size());
  double cum = 0.0;
  for (std::size_t i = 0; i < h.upper_edges.size(); i++) {
    h.region_ratio[i] = static_cast<double>(h.region_counts[i]) /
                        static_cast<double>(h.total_regions);
    cum += static_cast<double>(h.page_counts[i]) / static_cast<double>(h.total_pages);
    h.coverage_cum[i] = cum;
  }
  h.coverage_cum.back() = 1.0; // pin rounding
  return h;
}

double subregion_coverage(const PageMapping& m) {
  if (m.empty())
    return 0.0;
  uint64_t covered = 0;
  auto it = m.begin();
  while (it != m.end()) {
    Vsn vsn = vsn_of(it->first);
    Vfn sub_base = vsn << kSubregionShift;
    if (it->first != sub_base) { // partial subregion; skip to the next one
      while (it != m.end() && vsn_of(it->first) == vsn)
        ++it;
      continue;
    }
    Pfn head = it->second.pfn;
    Permissions perms = it->second.perms;
    uint64_t good = 1;
    ++it;
    while (it != m.end() && good < kSubregionPages &&
           it->first == sub_base + good && it->second.pfn == head + good &&
           it->second.perms == perms) {
      good++;
      ++it;
    }
    if (good == kSubregionPages) {
      covered += kSubregionPages;
    } else {
      while (it != m.end() && vsn_of(it->first) == vsn)
        ++it;
    }
  }
  return static_cast<double>(covered) / static_cast<double>(m.size());
}

namespace {
constexpr uint64_t kPagemapPresent = 1ull << 63;
constexpr uint64_t kPagemapSwapped = 1ull << 62;
constexpr uint64_t kPagemapPfnMask = (1ull << 55) - 1;

uint64_t region_pages(const PagemapRegion& r) {
  return (r.byte_length + kPageSize - 1) / kPageSize;
}

void check_regions(const std::vector<PagemapRegion>& regions) {
  std::vector<std::pair<uint64_t, uint64_t>> spans;
  for (const auto& r : regions) {
    if (r.va_start % kPageSize != 0)
      throw std::invalid_argument("pagemap region start not page aligned");
    spans.emplace_back(r.va_start, r.va_start + region_pages(r) * kPageSize);
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); i++)
    if (spans[i].first < spans[i - 1].second)
      throw std::invalid_argument("pagemap regions overlap");
}
} // namespace

PageMapping ingest_pagemap(const std::vector<PagemapRegion>& regions,
                           const std::vector<uint8_t>& bytes) {
  check_regions(regions);
  uint64_t total = 0;
  for (const auto& r : regions)
    total += region_pages(r);
  if (bytes.size() != total * 8) {
    std::ostringstream os;
    os << "pagemap buffer holds " << bytes.size() << " bytes, expected "
       << total * 8 << " (truncated at byte offset "
       << std::min<uint64_t>(bytes.size(), total * 8) << ")";
    throw std::invalid_argument(os.str());
  }
  PageMapping m;
  std::size_t rec = 0;
  for (const auto& r : regions) {
    Vfn vfn0 = r.va_start >> kPageShift;
    for (uint64_t p = 0; p < region_pages(r); p++, rec++) {
      uint64_t raw = 0;
      std::memcpy(&raw, bytes.data() + rec * 8, 8); // little-endian host
      if (!(raw & kPagemapPresent) || (raw & kPagemapSwapped))
        continue;
      m.map_page(vfn0 + p, raw & kPagemapPfnMask);
    }
  }
  return m;
}

std::vector<uint8_t> serialize_pagemap(const PageMapping& m,
                                       const std::vector<PagemapRegion>& regions) {
  check_regions(regions);
  std::vector<uint8_t> bytes;
  for (const auto& r : regions) {
    Vfn vfn0 = r.va_start >> kPageShift;
    for (uint64_t p = 0; p < region_pages(r); p++) {
      uint64_t raw = 0;
      if (auto info = m.find(vfn0 + p))
        raw = kPagemapPresent | (info->pfn & kPagemapPfnMask);
      uint8_t buf[8];
      std::memcpy(buf, &raw, 8);
      bytes.insert(bytes.end(), buf, buf + 8);
    }
  }
  return bytes;
}

std::vector<PagemapRegion> parse_regions_file(const std::string& text) {
  std::vector<PagemapRegion> regions;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    std::string stripped = line.substr(0, line.find('#'));
    std::istringstream ls(stripped);
    std::string va_str;
    uint64_t len;
    if (!(ls >> va_str))
      continue; // blank or comment
    if (!(ls >> len))
      throw std::invalid_argument("regions file: malformed line " + std::to_string(lineno));
    uint64_t va = std::stoull(va_str, nullptr, 16);
    regions.push_back(PagemapRegion{va, len});
  }
  return regions;
}

} // namespace mesc
