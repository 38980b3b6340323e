// IOMMU page-table-walk engine: the three walk modes driven by the L2
// contiguity bits, the memory subregion cache (MSC), the page walk cache
// (PWC), and the walker pool with its FIFO page walk buffer.
#pragma once

#include "mesc/addr.hpp"
#include "mesc/page_table.hpp"
#include "mesc/tlb.hpp"

#include <cstdint>
#include <list>
#include <optional>
#include <queue>
#include <unordered_map>
#include <vector>

namespace mesc {

enum class Design { baseline, thp, colt, full_colt, mesc, mesc_colt };

// Per-frame inter-subregion contiguity bitmap. Bit i links subregions i and
// i+1: set iff both are contiguous (C bits), their head PFNs differ by
// exactly 64 pages, and their permissions match.
class Msc {
public:
  Msc(uint32_t entries, uint32_t ways);

  std::optional<uint8_t> lookup(Vsn frame_vsn_base);
  std::optional<uint8_t> peek(Vsn frame_vsn_base) const; // no LRU update
  void insert(Vsn frame_vsn_base, uint8_t bitmap);
  bool invalidate(Vsn frame_vsn_base); // exact frame

  uint32_t sets() const { return sets_; }
  uint32_t ways() const { return ways_; }

private:
  struct Line {
    bool valid = false;
    Vsn key = 0;
    uint8_t bitmap = 0;
    uint64_t lru = 0;
  };
  static void check_aligned(Vsn frame_vsn_base);
  uint32_t set_of(Vsn frame_vsn_base) const;

  uint32_t sets_;
  uint32_t ways_;
  std::vector<Line> lines_;
  uint64_t tick_ = 0;
};

// Maximal run of mutually linked subregions containing subregion_index.
// Returns (first_subregion, run_length - 1).
std::pair<uint32_t, uint32_t> run_from_bitmap(uint8_t bitmap, uint32_t subregion_index);

// Page walk cache over upper-level (non-leaf) table entries, keyed by the
// entry's simulated address. Fully associative LRU; capacity in 8-byte
// entries. A zero-byte PWC never hits and never fills.
class Pwc {
public:
  explicit Pwc(uint32_t capacity_bytes);

  bool access(uint64_t entry_addr); // true = hit; miss inserts
  void invalidate_all();
  bool enabled() const { return capacity_ != 0; }

private:
  std::size_t capacity_;
  std::list<uint64_t> order_; // front = most recent
  std::unordered_map<uint64_t, std::list<uint64_t>::iterator> map_;
};

// Simulated-time occupancy of up to max_concurrent walkers; requests beyond
// that queue FIFO in the PWB.
class WalkerPool {
public:
  WalkerPool(uint32_t max_concurrent, uint32_t pwb_capacity /* 0 = unbounded */);

  struct Admission {
    uint64_t start_time = 0;
    uint64_t queue_delay = 0;
    bool queued = false;
    bool overflowed = false; // bounded PWB was full at arrival
  };
  Admission admit(uint64_t now, uint64_t duration);

  uint32_t outstanding_at(uint64_t now) const;

private:
  uint32_t max_concurrent_;
  uint32_t pwb_capacity_;
  // completion times of admitted walks, earliest first
  std::priority_queue<uint64_t, std::vector<uint64_t>, std::greater<uint64_t>> completions_;
  std::vector<uint64_t> queued_starts_;
};

struct SubregionPayload {
  Vsn vsn_tag = 0;
  uint32_t length = 0;
  Pfn base_pfn = 0;
  Permissions perms{};
};

struct WalkResult {
  Pfn pfn = 0;
  Permissions perms{};
  enum class Payload { regular, subregion, large_page } payload = Payload::regular;
  SubregionPayload sub{};
  std::optional<ColtRun> colt{};
  // critical reads gate the requester's latency; total reads additionally
  // include the head reads performed to fill the MSC after the result is
  // already on its way back.
  uint32_t critical_reads = 0;
  uint32_t total_reads = 0;
  bool msc_probed = false;
  bool msc_hit = false;
  uint32_t pwc_probes = 0;
  uint32_t pwc_hits = 0;
};

// One page table walk under the given design. nullopt = translation fault.
std::optional<WalkResult> walk_request(const PageTable& pt, Msc& msc, Pwc& pwc,
                                       uint64_t va, Design design);

} // namespace mesc
