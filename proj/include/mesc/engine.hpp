// Trace replay under one of six translation designs, with latency accounting,
// statistics, shootdown handling, and the dynamic-energy model.
#pragma once

#include "mesc/config.hpp"
#include "mesc/mapping.hpp"
#include "mesc/page_table.hpp"
#include "mesc/tlb.hpp"
#include "mesc/walker.hpp"
#include "mesc/workloads.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace mesc {

struct Counters {
  uint64_t events = 0;
  uint64_t percu_lookups = 0;
  uint64_t percu_hits = 0;
  uint64_t percu_writes = 0;
  uint64_t iommu_lookups = 0;
  uint64_t iommu_sub_probes = 0;
  uint64_t iommu_sub_hits = 0;
  uint64_t iommu_reg_probes = 0;
  uint64_t iommu_reg_hits = 0;
  uint64_t iommu_sub_writes = 0;
  uint64_t iommu_reg_writes = 0;
  uint64_t walks = 0;
  uint64_t walk_mem_reads = 0;
  uint64_t walk_critical_reads = 0;
  uint64_t pwc_probes = 0;
  uint64_t pwc_hits = 0;
  uint64_t msc_probes = 0;
  uint64_t msc_hits = 0;
  uint64_t msc_writes = 0;
  uint64_t pwb_queued = 0;
  uint64_t pwb_overflows = 0;
  uint64_t remap_batches = 0;
  uint64_t shootdown_invalidations = 0; // TLB entries + MSC lines
  std::array<uint64_t, 8> sub_len_hist{}; // subregion insertions by length field
};

struct LatencyStats {
  double mean = 0.0;
  uint64_t p50 = 0;
  uint64_t p99 = 0;
  uint64_t max = 0;
};

struct EnergyBreakdown {
  double per_cu = 0.0;
  double iommu_regular = 0.0;
  double iommu_subregion = 0.0;
  double msc = 0.0;
  double pwc = 0.0;
  double memory = 0.0;
  double total = 0.0;
};

struct SimReport {
  std::string design;
  uint64_t seed = 0;
  Counters counters{};
  double percu_hit_ratio = 0.0;
  double iommu_hit_ratio = 0.0;
  double msc_hit_ratio = 0.0;
  LatencyStats latency{};
  EnergyBreakdown energy{};
  uint64_t digest = 0;
};

// Thrown when a trace event touches an unmapped address.
struct TranslationFault : std::runtime_error {
  uint64_t event_index;
  uint64_t va;
  TranslationFault(uint64_t index, uint64_t addr)
      : std::runtime_error("translation fault at event " + std::to_string(index)),
        event_index(index), va(addr) {}
};

// The unified IOMMU TLB, the two IOMMU partitions are metered separately; the
// total follows the linear per-access model.
EnergyBreakdown compute_energy(const Counters& c, const DesignConfig& cfg);

class Engine {
public:
  Engine(const DesignConfig& cfg, PageMapping& mapping, PageTable& pt, uint32_t num_cus);

  struct Outcome {
    uint64_t pa = 0;
    uint64_t latency = 0;
    int level = 0; // 0 per-CU hit, 1 IOMMU hit, 2 walk
  };
  Outcome translate(const TranslationEvent& ev);

  // Page table + mapping update followed by the shootdown of every affected
  // TLB entry and MSC line.
  void apply_remaps(const std::vector<RemapChange>& changes);

  SimReport report(uint64_t seed) const;

  const UnifiedTlb& iommu() const { return iommu_; }
  const Msc& msc() const { return msc_; }
  const Counters& counters() const { return counters_; }

private:
  void backfill_percu(uint32_t cu, uint64_t va, const TlbHit& hit);
  void insert_walk_payloads(uint32_t cu, uint64_t va, const WalkResult& wr);
  void fold_digest(uint64_t pa, uint64_t latency);

  DesignConfig cfg_;
  PageMapping& mapping_;
  PageTable& pt_;
  std::vector<PerCuTlb> percu_;
  UnifiedTlb iommu_;
  Msc msc_;
  Pwc pwc_;
  WalkerPool pool_;
  Counters counters_;
  std::vector<uint64_t> latencies_;
  uint64_t digest_ = 1469598103934665603ull; // FNV-1a 64 offset basis
};

SimReport run_trace(const Trace& trace, PageMapping& mapping, PageTable& pt,
                    const DesignConfig& cfg, uint64_t seed);

// Independent runs over one trace and mapping; the page table is rebuilt per
// run so each run owns all of its state.
std::vector<SimReport> sweep(const Trace& trace, const PageMapping& mapping,
                             const DesignConfig& base, const std::string& axis,
                             const std::vector<uint64_t>& values, uint64_t seed);

} // namespace mesc
