#include "mesc/engine.hpp"

#include <algorithm>
#include <stdexcept>

namespace mesc {

namespace {

KindMask iommu_kinds(Design d) {
  KindMask k;
  switch (d) {
  case Design::baseline:
  case Design::colt:
    k = {true, false, false, false};
    break;
  case Design::thp:
    k = {false, false, false, true};
    break;
  case Design::full_colt:
    k = {true, false, true, false};
    break;
  case Design::mesc:
  case Design::mesc_colt:
    k = {true, true, false, false};
    break;
  }
  return k;
}

KindMask percu_kinds(Design d) {
  KindMask k;
  switch (d) {
  case Design::baseline:
  case Design::mesc:
    k = {true, false, false, false};
    break;
  case Design::thp:
    k = {false, false, false, true};
    break;
  case Design::colt:
  case Design::full_colt:
  case Design::mesc_colt:
    k = {true, false, true, false};
    break;
  }
  return k;
}

// THP is modeled over a forced-contiguous mapping; verify each present frame
// really is fully present, PFN-contiguous and permission-uniform.
void check_thp_mapping(const PageMapping& m) {
  auto it = m.begin();
  while (it != m.end()) {
    Vfn frame = frame_base_of(it->first);
    auto head = m.find(frame);
    bool ok = head.has_value();
    for (uint64_t k = 0; ok && k < kFramePages; k++) {
      auto info = m.find(frame + k);
      ok = info && info->pfn == head->pfn + k && info->perms == head->perms;
    }
    if (!ok)
      throw std::invalid_argument("thp design requires a forced-contiguous mapping");
    while (it != m.end() && frame_base_of(it->first) == frame)
      ++it;
  }
}

} // namespace

EnergyBreakdown compute_energy(const Counters& c, const DesignConfig& cfg) {
  const EnergyParams& e = cfg.energy;
  const double energies[] = {e.per_cu_read,   e.per_cu_write,   e.iommu_reg_read,
                             e.iommu_reg_write, e.iommu_sub_read, e.iommu_sub_write,
                             e.msc_read,      e.msc_write,      e.pwc_read,
                             e.pwc_write,     e.memory_read};
  for (double v : energies)
    if (v < 0.0)
      throw std::invalid_argument("energy parameters must be non-negative");

  EnergyBreakdown b;
  b.per_cu = static_cast<double>(c.percu_lookups) * e.per_cu_read +
             static_cast<double>(c.percu_writes) * e.per_cu_write;
  b.iommu_regular = static_cast<double>(c.iommu_reg_probes) * e.iommu_reg_read +
                    static_cast<double>(c.iommu_reg_writes) * e.iommu_reg_write;
  b.iommu_subregion = static_cast<double>(c.iommu_sub_probes) * e.iommu_sub_read +
                      static_cast<double>(c.iommu_sub_writes) * e.iommu_sub_write;
  b.msc = static_cast<double>(c.msc_probes) * e.msc_read +
          static_cast<double>(c.msc_writes) * e.msc_write;
  b.pwc = static_cast<double>(c.pwc_probes) * e.pwc_read +
          static_cast<double>(c.pwc_probes - c.pwc_hits) * e.pwc_write;
  b.memory = static_cast<double>(c.walk_mem_reads) * e.memory_read;
  b.total = b.per_cu + b.iommu_regular + b.iommu_subregion + b.msc + b.pwc + b.memory;
  return b;
}

Engine::Engine(const DesignConfig& cfg, PageMapping& mapping, PageTable& pt,
               uint32_t num_cus)
    : cfg_(cfg), mapping_(mapping), pt_(pt),
      iommu_(cfg.iommu_sets, cfg.iommu_ways, cfg.subregion_ways, iommu_kinds(cfg.design)),
      msc_(cfg.msc_entries, cfg.msc_ways), pwc_(cfg.pwc_bytes),
      pool_(cfg.walkers, cfg.pwb_capacity) {
  cfg.validate();
  if (num_cus == 0)
    throw std::invalid_argument("engine needs at least one CU");
  if (cfg.design == Design::thp)
    check_thp_mapping(mapping);
  percu_.reserve(num_cus);
  for (uint32_t i = 0; i < num_cus; i++)
    percu_.emplace_back(cfg.per_cu_entries, percu_kinds(cfg.design));
}

void Engine::fold_digest(uint64_t pa, uint64_t latency) {
  auto fold = [this](uint64_t v) {
    for (int i = 0; i < 8; i++) {
      digest_ ^= (v >> (i * 8)) & 0xFF;
      digest_ *= 1099511628211ull;
    }
  };
  fold(pa);
  fold(latency);
}

void Engine::backfill_percu(uint32_t cu, uint64_t va, const TlbHit& hit) {
  Vfn vfn = va >> kPageShift;
  TlbEntry entry;
  if (cfg_.design == Design::thp)
    entry = make_large_entry(hit.tag, hit.base_pfn, hit.perms);
  else
    entry = make_regular_entry(vfn, hit.pfn, hit.perms);
  percu_[cu].insert(entry);
  counters_.percu_writes++;
}

void Engine::insert_walk_payloads(uint32_t cu, uint64_t va, const WalkResult& wr) {
  Vfn vfn = va >> kPageShift;

  switch (cfg_.design) {
  case Design::baseline:
    iommu_.insert_regular(vfn, wr.pfn, wr.perms);
    counters_.iommu_reg_writes++;
    percu_[cu].insert(make_regular_entry(vfn, wr.pfn, wr.perms));
    counters_.percu_writes++;
    break;
  case Design::thp: {
    Vfn frame = frame_base_of(vfn);
    Pfn base = wr.sub.base_pfn;
    iommu_.insert_large(frame, base, wr.perms);
    counters_.iommu_reg_writes++;
    percu_[cu].insert(make_large_entry(frame, base, wr.perms));
    counters_.percu_writes++;
    break;
  }
  case Design::colt:
    iommu_.insert_regular(vfn, wr.pfn, wr.perms);
    counters_.iommu_reg_writes++;
    percu_[cu].insert(make_colt_entry(*wr.colt));
    counters_.percu_writes++;
    break;
  case Design::full_colt:
    iommu_.insert_colt(*wr.colt);
    counters_.iommu_reg_writes++;
    percu_[cu].insert(make_colt_entry(*wr.colt));
    counters_.percu_writes++;
    break;
  case Design::mesc:
  case Design::mesc_colt:
    if (wr.payload == WalkResult::Payload::subregion) {
      iommu_.insert_subregion(wr.sub.vsn_tag, wr.sub.length, wr.sub.base_pfn,
                              wr.sub.perms);
      counters_.iommu_sub_writes++;
      counters_.sub_len_hist[wr.sub.length]++;
    } else {
      iommu_.insert_regular(vfn, wr.pfn, wr.perms);
      counters_.iommu_reg_writes++;
    }
    if (cfg_.design == Design::mesc_colt)
      percu_[cu].insert(make_colt_entry(*wr.colt));
    else
      percu_[cu].insert(make_regular_entry(vfn, wr.pfn, wr.perms));
    counters_.percu_writes++;
    break;
  }
}

Engine::Outcome Engine::translate(const TranslationEvent& ev) {
  if (ev.cu >= percu_.size())
    throw std::invalid_argument("event cu id out of range");
  uint64_t index = counters_.events++;
  uint64_t latency = cfg_.lat.per_cu_hit;

  counters_.percu_lookups++;
  Outcome out;
  if (auto hit = percu_[ev.cu].lookup(ev.va)) {
    counters_.percu_hits++;
    out.pa = hit->pa;
    out.level = 0;
  } else {
    latency += cfg_.lat.iommu_round_trip + cfg_.lat.iommu_access;
    counters_.iommu_lookups++;
    UnifiedTlb::LookupResult lr = iommu_.lookup(ev.va);
    if (lr.probed_subregion)
      counters_.iommu_sub_probes++;
    if (lr.probed_regular)
      counters_.iommu_reg_probes++;
    if (lr.hit) {
      if (lr.hit->kind == EntryKind::subregion)
        counters_.iommu_sub_hits++;
      else
        counters_.iommu_reg_hits++;
      out.pa = lr.hit->pa;
      out.level = 1;
      backfill_percu(ev.cu, ev.va, *lr.hit);
    } else {
      counters_.walks++;
      auto wr = walk_request(pt_, msc_, pwc_, ev.va, cfg_.design);
      if (wr) {
        counters_.pwc_probes += wr->pwc_probes;
        counters_.pwc_hits += wr->pwc_hits;
        counters_.walk_mem_reads += wr->total_reads;
        counters_.walk_critical_reads += wr->critical_reads;
        if (wr->msc_probed) {
          counters_.msc_probes++;
          if (wr->msc_hit)
            counters_.msc_hits++;
          else
            counters_.msc_writes++;
        }
      }
      if (!wr)
        throw TranslationFault(index, ev.va);

      uint64_t arrival = ev.time + latency;
      uint64_t duration =
          std::max<uint64_t>(1, wr->total_reads) * cfg_.lat.memory_read;
      WalkerPool::Admission adm = pool_.admit(arrival, duration);
      if (adm.queued)
        counters_.pwb_queued++;
      if (adm.overflowed)
        counters_.pwb_overflows++;
      latency += adm.queue_delay +
                 static_cast<uint64_t>(wr->critical_reads) * cfg_.lat.memory_read;
      out.pa = (wr->pfn << kPageShift) | (ev.va & (kPageSize - 1));
      out.level = 2;
      insert_walk_payloads(ev.cu, ev.va, *wr);
    }
  }
  out.latency = latency;
  latencies_.push_back(latency);
  fold_digest(out.pa, latency);
  return out;
}

void Engine::apply_remaps(const std::vector<RemapChange>& changes) {
  InvalidationSet inv = pt_.remap_pages(mapping_, changes);
  counters_.remap_batches++;
  uint64_t n = iommu_.invalidate(inv);
  for (auto& tlb : percu_)
    n += tlb.invalidate(inv);
  for (Vsn base : inv.frame_vsn_bases)
    if (msc_.invalidate(base))
      n++;
  counters_.shootdown_invalidations += n;
}

SimReport Engine::report(uint64_t seed) const {
  SimReport r;
  r.design = design_name(cfg_.design);
  r.seed = seed;
  r.counters = counters_;
  if (counters_.percu_lookups)
    r.percu_hit_ratio = static_cast<double>(counters_.percu_hits) /
                        static_cast<double>(counters_.percu_lookups);
  if (counters_.iommu_lookups)
    r.iommu_hit_ratio =
        static_cast<double>(counters_.iommu_sub_hits + counters_.iommu_reg_hits) /
        static_cast<double>(counters_.iommu_lookups);
  if (counters_.msc_probes)
    r.msc_hit_ratio = static_cast<double>(counters_.msc_hits) /
                      static_cast<double>(counters_.msc_probes);
  if (!latencies_.empty()) {
    std::vector<uint64_t> sorted = latencies_;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (uint64_t v : sorted)
      sum += static_cast<double>(v);
    r.latency.mean = sum / static_cast<double>(sorted.size());
    r.latency.p50 = sorted[sorted.size() / 2];
    r.latency.p99 = sorted[std::min(sorted.size() - 1,
                                    static_cast<std::size_t>(
                                        static_cast<double>(sorted.size()) * 0.99))];
    r.latency.max = sorted.back();
  }
  r.energy = compute_energy(counters_, cfg_);

  uint64_t digest = digest_;
  auto fold = [&digest](uint64_t v) {
    for (int i = 0; i < 8; i++) {
      digest ^= (v >> (i * 8)) & 0xFF;
      digest *= 1099511628211ull;
    }
  };
  fold(counters_.events);
  fold(counters_.walks);
  fold(counters_.shootdown_invalidations);
  r.digest = digest;
  return r;
}

SimReport run_trace(const Trace& trace, PageMapping& mapping, PageTable& pt,
                    const DesignConfig& cfg, uint64_t seed) {
  Engine engine(cfg, mapping, pt, trace.num_cus());
  for (const auto& ev : trace.events)
    engine.translate(ev);
  return engine.report(seed);
}

std::vector<SimReport> sweep(const Trace& trace, const PageMapping& mapping,
                             const DesignConfig& base, const std::string& axis,
                             const std::vector<uint64_t>& values, uint64_t seed) {
  std::vector<SimReport> reports;
  reports.reserve(values.size());
  for (uint64_t value : values) {
    DesignConfig cfg = apply_axis(base, axis, value);
    PageMapping m = mapping;
    PageTable pt = PageTable::build_from_mapping(m);
    pt.scan_contiguity();
    reports.push_back(run_trace(trace, m, pt, cfg, seed));
  }
  return reports;
}

} // namespace mesc
