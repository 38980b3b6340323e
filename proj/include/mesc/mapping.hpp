// Virtual-to-physical mappings: buddy-allocator simulation with tunable
// fragmentation, Linux pagemap ingestion, contiguity analysis, and the
// brute-force translation oracle every other translation path is checked
// against.
#pragma once

#include "mesc/addr.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mesc {

struct PageInfo {
  Pfn pfn = 0;
  Permissions perms{};
};

// Ordered vfn -> (pfn, perms) map. Injective: a PFN backs at most one VFN.
class PageMapping {
public:
  using Map = std::map<Vfn, PageInfo>;

  void map_page(Vfn vfn, Pfn pfn, Permissions perms = {});
  void unmap_page(Vfn vfn);
  void remap_page(Vfn vfn, Pfn new_pfn); // page must exist
  void set_perms(Vfn vfn, Permissions perms);

  std::optional<PageInfo> find(Vfn vfn) const;
  bool contains(Vfn vfn) const { return pages_.count(vfn) != 0; }
  bool pfn_in_use(Pfn pfn) const { return pfn_owner_.count(pfn) != 0; }

  std::size_t size() const { return pages_.size(); }
  bool empty() const { return pages_.empty(); }
  Map::const_iterator begin() const { return pages_.begin(); }
  Map::const_iterator end() const { return pages_.end(); }

private:
  Map pages_;
  std::unordered_map<Pfn, Vfn> pfn_owner_;
};

// Ground truth for every design: nullopt means translation fault.
std::optional<uint64_t> oracle_translate(const PageMapping& m, uint64_t va);

// Physical memory modeled as a binary buddy allocator, max order 10 (4MB).
class BuddyAllocator {
public:
  static constexpr int kMaxOrder = 10;

  explicit BuddyAllocator(uint64_t total_pages);

  // Pins about fraction*total pages in randomly placed, randomly sized
  // blocks (memhog analog). Deterministic for a fixed seed. With defrag the
  // allocator runs a bounded compaction pass afterwards, relocating pinned
  // pages so same-order free blocks merge upward.
  void fragment(double fraction, uint64_t seed, bool defrag = false);

  // Maps npages to consecutive VFNs starting at vfn_start, taking the
  // largest available buddy blocks first, lowest physical address first.
  void allocate_range(PageMapping& m, Vfn vfn_start, uint64_t npages,
                      Permissions perms = {});

  uint64_t total_pages() const { return total_pages_; }
  uint64_t free_pages() const { return free_pages_; }
  double fragmentation_level() const { return frag_level_; }
  const std::array<std::set<uint64_t>, kMaxOrder + 1>& free_lists() const {
    return free_;
  }

private:
  std::optional<uint64_t> take_block(int order);
  bool alloc_specific(uint64_t base, int order);
  void free_block(uint64_t base, int order);
  bool range_fully_pinned(uint64_t base, int order) const;
  void compact(uint64_t move_budget_pages);

  uint64_t total_pages_;
  uint64_t free_pages_;
  double frag_level_ = 0.0;
  std::array<std::set<uint64_t>, kMaxOrder + 1> free_;
};

// Heap-style allocation at the default base.
PageMapping allocate_heap(uint64_t total_pages, BuddyAllocator& buddy,
                          Vfn heap_base_vfn = kDefaultHeapVfn,
                          Permissions perms = {});

// Every 2MB VA frame mapped to a 2MB-aligned physical block; whole frames
// only. Used as the THP reference mapping.
PageMapping make_contiguous_mapping(uint64_t total_pages,
                                    Vfn heap_base_vfn = kDefaultHeapVfn,
                                    Pfn phys_base_pfn = 0x10000,
                                    Permissions perms = {});

// A run is a maximal set of consecutive VFNs with consecutive PFNs and equal
// permissions. Buckets are (prev_edge, edge] in pages; runs beyond the last
// edge land in an appended overflow bucket.
struct ContiguityHistogram {
  std::vector<uint64_t> upper_edges;
  std::vector<uint64_t> region_counts;
  std::vector<uint64_t> page_counts;
  std::vector<double> region_ratio;
  std::vector<double> coverage_cum;
  uint64_t total_regions = 0;
  uint64_t total_pages = 0;
};

ContiguityHistogram contiguity_histogram(const PageMapping& m,
                                         std::vector<uint64_t> bucket_edges);

// Fraction of mapped pages living in fully present, PFN-contiguous,
// permission-uniform, 64-page-aligned subregions. 0 for an empty mapping.
double subregion_coverage(const PageMapping& m);

// Linux pagemap interface: one little-endian 64-bit record per page,
// bit 63 = present, bit 62 = swapped (treated as absent), bits 54..0 = PFN.
struct PagemapRegion {
  uint64_t va_start = 0;    // page aligned
  uint64_t byte_length = 0;
};

PageMapping ingest_pagemap(const std::vector<PagemapRegion>& regions,
                           const std::vector<uint8_t>& bytes);
std::vector<uint8_t> serialize_pagemap(const PageMapping& m,
                                       const std::vector<PagemapRegion>& regions);

std::vector<PagemapRegion> parse_regions_file(const std::string& text);

} // namespace mesc
