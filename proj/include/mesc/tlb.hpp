// TLB structures: the unified way-partitioned IOMMU TLB holding regular and
// subregion entries (plus CoLT runs or 2MB entries under the comparison
// designs) and the fully-associative per-CU TLBs.
#pragma once

#include "mesc/addr.hpp"
#include "mesc/shootdown.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mesc {

enum class EntryKind : uint8_t {
  regular,    // T=0, one page
  subregion,  // T=1, (length+1) 64-page subregions inside one frame
  colt,       // up to 4 pages inside one 4-page-aligned block
  large_page, // one 2MB frame (THP design only)
};

struct TlbEntry {
  bool valid = false;
  EntryKind kind = EntryKind::regular;
  uint64_t tag = 0; // vfn (regular/colt), vsn (subregion), frame base vfn (large)
  uint32_t length = 0; // subregion: covered subregions - 1; colt: pages - 1
  Pfn base_pfn = 0;
  Permissions perms{};
  uint64_t lru = 0;
};

// Covered VFN range of a subregion entry: [tag<<6, ((tag+length)<<6) | 0x3F].
std::pair<Vfn, Vfn> subregion_coverage_bounds(Vsn vsn_tag, uint32_t length);
std::pair<Vfn, Vfn> entry_coverage(const TlbEntry& e);

struct TlbHit {
  uint64_t pa = 0;
  EntryKind kind = EntryKind::regular;
  Pfn pfn = 0;
  // entry fields, for per-CU back-fill construction
  uint64_t tag = 0;
  uint32_t length = 0;
  Pfn base_pfn = 0;
  Permissions perms{};
};

struct ColtRun {
  Vfn base_vfn = 0;
  uint32_t length = 0; // pages - 1, at most 3
  Pfn base_pfn = 0;
  Permissions perms{};
};

// Which entry kinds a TLB instance may hold; drives which lookup phases run
// (and therefore which partitions are metered for energy).
struct KindMask {
  bool regular = true;
  bool subregion = false;
  bool colt = false;
  bool large_page = false;
};

// 32-set x 16-way by default. Subregion entries live only in the designated
// partition (the top `subregion_ways` ways); regular entries may use any way.
// The subregion phase probes first, with the left-shifted set index.
class UnifiedTlb {
public:
  UnifiedTlb(uint32_t sets, uint32_t ways, uint32_t subregion_ways, KindMask kinds);

  struct LookupResult {
    std::optional<TlbHit> hit;
    bool probed_subregion = false;
    bool probed_regular = false;
  };
  LookupResult lookup(uint64_t va);

  std::optional<TlbEntry> insert_regular(Vfn vfn, Pfn pfn, Permissions perms);
  std::optional<TlbEntry> insert_subregion(Vsn vsn_tag, uint32_t length,
                                           Pfn base_pfn, Permissions perms);
  std::optional<TlbEntry> insert_colt(const ColtRun& run);
  std::optional<TlbEntry> insert_large(Vfn frame_vfn, Pfn base_pfn, Permissions perms);

  uint64_t invalidate(const InvalidationSet& inv);
  void invalidate_all();

  uint32_t sets() const { return sets_; }
  uint32_t ways() const { return ways_; }
  uint32_t partition_boundary() const { return ways_ - subregion_ways_; }
  const TlbEntry& entry_at(uint32_t set, uint32_t way) const {
    return e_[set * ways_ + way];
  }

  // One line per valid entry: "SET=<n> WAY=<n> T=<0|1> TAG=<hex> LEN=<n> PFN=<hex>".
  std::string dump() const;

private:
  uint32_t set_for(EntryKind kind, uint64_t covered_vfn) const;
  TlbEntry& at(uint32_t set, uint32_t way) { return e_[set * ways_ + way]; }
  std::optional<TlbEntry> place(uint32_t set, uint32_t first_way, uint32_t last_way,
                                const TlbEntry& entry);

  uint32_t sets_;
  uint32_t ways_;
  uint32_t subregion_ways_;
  KindMask kinds_;
  std::vector<TlbEntry> e_;
  uint64_t tick_ = 0;
};

// Per-CU L1 TLB: small, fully associative, LRU.
class PerCuTlb {
public:
  PerCuTlb(uint32_t entries, KindMask kinds);

  std::optional<TlbHit> lookup(uint64_t va);
  std::optional<TlbEntry> insert(const TlbEntry& entry);
  uint64_t invalidate(const InvalidationSet& inv);

  uint32_t capacity() const { return static_cast<uint32_t>(e_.size()); }
  const std::vector<TlbEntry>& entries() const { return e_; }

private:
  KindMask kinds_;
  std::vector<TlbEntry> e_;
  uint64_t tick_ = 0;
};

TlbEntry make_regular_entry(Vfn vfn, Pfn pfn, Permissions perms);
TlbEntry make_colt_entry(const ColtRun& run);
TlbEntry make_large_entry(Vfn frame_vfn, Pfn base_pfn, Permissions perms);

} // namespace mesc
