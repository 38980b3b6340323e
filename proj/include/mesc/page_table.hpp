// Four-level x86-64-style radix page table with per-frame contiguity bits in
// the L2 entries (C0..C7 per subregion, AC for the whole frame), contiguity
// scanning, and remap bookkeeping.
#pragma once

#include "mesc/addr.hpp"
#include "mesc/mapping.hpp"
#include "mesc/shootdown.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mesc {

struct RemapChange {
  Vfn vfn;
  std::optional<Pfn> new_pfn; // nullopt = unmap
};

class PageTable {
public:
  struct L1Entry {
    Pfn pfn = 0;
    bool present = false;
    Permissions perms{};
  };
  struct L2Entry {
    int32_t l1_table = -1;
    bool present = false;
    uint8_t c_bits = 0; // bit i == C_i
    bool ac = false;
  };
  struct DirEntry {
    int32_t child = -1;
    bool present = false;
  };

  // Walker-facing views. read_addr is the simulated memory address of the
  // entry itself, used for PWC caching and read accounting.
  struct DirRef {
    bool present;
    uint64_t read_addr;
    int32_t child;
  };
  struct L2Ref {
    bool present;
    uint64_t read_addr;
    uint8_t c_bits;
    bool ac;
    int32_t l1_table;
  };
  struct L1Ref {
    bool present;
    uint64_t read_addr;
    Pfn pfn;
    Permissions perms;
  };

  struct WalkStep {
    int level; // 4..1
    uint64_t addr;
  };
  struct WalkOutcome {
    bool present = false;
    int fault_level = 0; // level at which the walk faulted
    Pfn pfn = 0;
    Permissions perms{};
  };
  struct ScanStats {
    uint64_t frames_scanned = 0;
    uint64_t c_bits_set = 0;
    uint64_t ac_bits_set = 0;
  };

  static PageTable build_from_mapping(const PageMapping& m);

  // Recomputes C/AC for every present L2 entry per the contiguity rules:
  // C_i set iff subregion i is fully present, PFN-contiguous and
  // permission-uniform; AC set iff additionally every adjacent subregion pair
  // has a head-PFN gap of exactly 64 pages and equal permissions.
  ScanStats scan_contiguity();

  // Plain 4-level walk, contiguity bits ignored.
  WalkOutcome walk(uint64_t va, std::vector<WalkStep>* trace = nullptr) const;

  // Applies the changes to both the table and the mapping, recomputes the
  // enclosing frames' contiguity bits, and reports what must be shot down.
  // Unmapping an absent page is a no-op; remapping one is an error.
  InvalidationSet remap_pages(PageMapping& m, const std::vector<RemapChange>& changes);

  // One line per present L2 entry: "<frame_vfn hex> AC=<0|1> C=<C7..C0>".
  std::string dump_l2() const;

  DirRef l4_entry(uint32_t index) const;
  DirRef l3_entry(int32_t table, uint32_t index) const;
  L2Ref l2_entry(int32_t table, uint32_t index) const;
  L1Ref l1_entry(int32_t table, uint32_t index) const;
  L2Ref find_l2(Vfn vfn) const; // resolves the upper levels without accounting

  std::size_t l1_table_count() const { return l1_.size(); }
  std::size_t l2_table_count() const { return l2_.size(); }
  std::size_t l3_table_count() const { return l3_.size(); }

private:
  struct DirTable {
    std::array<DirEntry, 512> e{};
    uint32_t node = 0;
  };
  struct L2Table {
    std::array<L2Entry, 512> e{};
    uint32_t node = 0;
  };
  struct L1Table {
    std::array<L1Entry, 512> e{};
    uint32_t node = 0;
  };

  static uint64_t entry_addr(uint32_t node, uint32_t index) {
    return (static_cast<uint64_t>(node + 1) << kPageShift) | (index * 8ull);
  }

  L1Entry& ensure_l1(Vfn vfn);
  L1Entry* find_l1(Vfn vfn);
  void rescan_frame(L2Entry& l2);

  std::vector<DirTable> l4_; // exactly one: the root
  std::vector<DirTable> l3_;
  std::vector<L2Table> l2_;
  std::vector<L1Table> l1_;
  uint32_t next_node_ = 0;
};

} // namespace mesc
