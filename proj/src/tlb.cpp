#include "mesc/tlb.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace mesc {

std::pair<Vfn, Vfn> subregion_coverage_bounds(Vsn vsn_tag, uint32_t length) {
  Vfn lower = vsn_tag << kSubregionShift;
  Vfn upper = ((vsn_tag + length) << kSubregionShift) | (kSubregionPages - 1);
  return {lower, upper};
}

std::pair<Vfn, Vfn> entry_coverage(const TlbEntry& e) {
  switch (e.kind) {
  case EntryKind::regular:
    return {e.tag, e.tag};
  case EntryKind::subregion:
    return subregion_coverage_bounds(e.tag, e.length);
  case EntryKind::colt:
    return {e.tag, e.tag + e.length};
  case EntryKind::large_page:
    return {e.tag, e.tag + kFramePages - 1};
  }
  return {0, 0};
}

namespace {

bool covers(const TlbEntry& e, Vfn vfn) {
  auto [lo, hi] = entry_coverage(e);
  return vfn >= lo && vfn <= hi;
}

Pfn hit_pfn(const TlbEntry& e, Vfn vfn) {
  auto [lo, hi] = entry_coverage(e);
  (void)hi;
  if (e.kind == EntryKind::regular)
    return e.base_pfn;
  return e.base_pfn + (vfn - lo);
}

TlbHit make_hit(const TlbEntry& e, uint64_t va) {
  Vfn vfn = va >> kPageShift;
  TlbHit h;
  h.pfn = hit_pfn(e, vfn);
  h.pa = (h.pfn << kPageShift) | (va & (kPageSize - 1));
  h.kind = e.kind;
  h.tag = e.tag;
  h.length = e.length;
  h.base_pfn = e.base_pfn;
  h.perms = e.perms;
  return h;
}

// Overlap in covered pages; dedup rule: an exact coverage duplicate is
// refreshed in place, any other overlap invalidates the older entry so two
// entries can never both hit one page within a phase.
bool same_coverage(const TlbEntry& a, const TlbEntry& b) {
  return a.kind == b.kind && a.tag == b.tag && a.length == b.length;
}

bool overlaps(const TlbEntry& a, const TlbEntry& b) {
  auto [alo, ahi] = entry_coverage(a);
  auto [blo, bhi] = entry_coverage(b);
  return alo <= bhi && blo <= ahi;
}

} // namespace

TlbEntry make_regular_entry(Vfn vfn, Pfn pfn, Permissions perms) {
  TlbEntry e;
  e.valid = true;
  e.kind = EntryKind::regular;
  e.tag = vfn;
  e.base_pfn = pfn;
  e.perms = perms;
  return e;
}

TlbEntry make_colt_entry(const ColtRun& run) {
  if (run.length > 3)
    throw std::invalid_argument("colt entry covers at most 4 pages");
  TlbEntry e;
  e.valid = true;
  e.kind = EntryKind::colt;
  e.tag = run.base_vfn;
  e.length = run.length;
  e.base_pfn = run.base_pfn;
  e.perms = run.perms;
  return e;
}

TlbEntry make_large_entry(Vfn frame_vfn, Pfn base_pfn, Permissions perms) {
  TlbEntry e;
  e.valid = true;
  e.kind = EntryKind::large_page;
  e.tag = frame_base_of(frame_vfn);
  e.base_pfn = base_pfn;
  e.perms = perms;
  return e;
}

UnifiedTlb::UnifiedTlb(uint32_t sets, uint32_t ways, uint32_t subregion_ways,
                       KindMask kinds)
    : sets_(sets), ways_(ways), subregion_ways_(subregion_ways), kinds_(kinds),
      e_(static_cast<std::size_t>(sets) * ways) {
  if (sets == 0 || (sets & (sets - 1)) != 0)
    throw std::invalid_argument("tlb sets must be a power of two");
  if (ways == 0 || subregion_ways > ways)
    throw std::invalid_argument("bad way configuration");
  if (kinds.subregion && subregion_ways == 0)
    throw std::invalid_argument("subregion entries need a non-empty partition");
}

uint32_t UnifiedTlb::set_for(EntryKind kind, uint64_t vfn) const {
  uint64_t mask = sets_ - 1;
  switch (kind) {
  case EntryKind::regular:
    return static_cast<uint32_t>(vfn & mask);
  case EntryKind::subregion:
    // vsn >> 3 == vfn >> 9; caller passes a covered vfn
    return static_cast<uint32_t>((vfn >> kFrameShift) & mask);
  case EntryKind::colt:
    return static_cast<uint32_t>((vfn >> 2) & mask);
  case EntryKind::large_page:
    return static_cast<uint32_t>((vfn >> kFrameShift) & mask);
  }
  return 0;
}

UnifiedTlb::LookupResult UnifiedTlb::lookup(uint64_t va) {
  LookupResult r;
  Vfn vfn = va >> kPageShift;

  if (kinds_.subregion) {
    r.probed_subregion = true;
    uint32_t set = set_for(EntryKind::subregion, vfn);
    for (uint32_t w = partition_boundary(); w < ways_; w++) {
      TlbEntry& e = at(set, w);
      if (e.valid && e.kind == EntryKind::subregion && covers(e, vfn)) {
        e.lru = ++tick_;
        r.hit = make_hit(e, va);
        return r;
      }
    }
  }
  if (kinds_.colt) {
    r.probed_regular = true;
    uint32_t set = set_for(EntryKind::colt, vfn);
    for (uint32_t w = 0; w < ways_; w++) {
      TlbEntry& e = at(set, w);
      if (e.valid && e.kind == EntryKind::colt && covers(e, vfn)) {
        e.lru = ++tick_;
        r.hit = make_hit(e, va);
        return r;
      }
    }
  }
  if (kinds_.large_page) {
    r.probed_regular = true;
    uint32_t set = set_for(EntryKind::large_page, vfn);
    for (uint32_t w = 0; w < ways_; w++) {
      TlbEntry& e = at(set, w);
      if (e.valid && e.kind == EntryKind::large_page && covers(e, vfn)) {
        e.lru = ++tick_;
        r.hit = make_hit(e, va);
        return r;
      }
    }
  }
  if (kinds_.regular) {
    r.probed_regular = true;
    uint32_t set = set_for(EntryKind::regular, vfn);
    for (uint32_t w = 0; w < ways_; w++) {
      TlbEntry& e = at(set, w);
      if (e.valid && e.kind == EntryKind::regular && e.tag == vfn) {
        e.lru = ++tick_;
        r.hit = make_hit(e, va);
        return r;
      }
    }
  }
  return r;
}

std::optional<TlbEntry> UnifiedTlb::place(uint32_t set, uint32_t first_way,
                                          uint32_t last_way, const TlbEntry& entry) {
  // refresh an exact duplicate, invalidate same-kind overlap
  for (uint32_t w = first_way; w < last_way; w++) {
    TlbEntry& e = at(set, w);
    if (!e.valid || e.kind != entry.kind)
      continue;
    if (same_coverage(e, entry)) {
      e = entry;
      e.lru = ++tick_;
      return std::nullopt;
    }
    if (overlaps(e, entry))
      e.valid = false;
  }
  uint32_t victim = first_way;
  bool found_invalid = false;
  for (uint32_t w = first_way; w < last_way; w++) {
    TlbEntry& e = at(set, w);
    if (!e.valid) {
      victim = w;
      found_invalid = true;
      break;
    }
    if (e.lru < at(set, victim).lru)
      victim = w;
  }
  std::optional<TlbEntry> evicted;
  if (!found_invalid && at(set, victim).valid)
    evicted = at(set, victim);
  at(set, victim) = entry;
  at(set, victim).lru = ++tick_;
  return evicted;
}

std::optional<TlbEntry> UnifiedTlb::insert_regular(Vfn vfn, Pfn pfn, Permissions perms) {
  uint32_t set = set_for(EntryKind::regular, vfn);
  return place(set, 0, ways_, make_regular_entry(vfn, pfn, perms));
}

std::optional<TlbEntry> UnifiedTlb::insert_subregion(Vsn vsn_tag, uint32_t length,
                                                     Pfn base_pfn, Permissions perms) {
  if ((vsn_tag % kSubregionsPerFrame) + length >= kSubregionsPerFrame)
    throw std::invalid_argument("subregion entry crosses a 2MB frame boundary");
  TlbEntry e;
  e.valid = true;
  e.kind = EntryKind::subregion;
  e.tag = vsn_tag;
  e.length = length;
  e.base_pfn = base_pfn;
  e.perms = perms;
  uint32_t set = set_for(EntryKind::subregion, vsn_tag << kSubregionShift);
  return place(set, partition_boundary(), ways_, e);
}

std::optional<TlbEntry> UnifiedTlb::insert_colt(const ColtRun& run) {
  uint32_t set = set_for(EntryKind::colt, run.base_vfn);
  return place(set, 0, ways_, make_colt_entry(run));
}

std::optional<TlbEntry> UnifiedTlb::insert_large(Vfn frame_vfn, Pfn base_pfn,
                                                 Permissions perms) {
  uint32_t set = set_for(EntryKind::large_page, frame_vfn);
  return place(set, 0, ways_, make_large_entry(frame_vfn, base_pfn, perms));
}

namespace {

bool hits_any_vfn(const TlbEntry& e, const std::vector<Vfn>& sorted_vfns) {
  auto [lo, hi] = entry_coverage(e);
  auto it = std::lower_bound(sorted_vfns.begin(), sorted_vfns.end(), lo);
  return it != sorted_vfns.end() && *it <= hi;
}

bool intersects_vsns(const TlbEntry& e, const std::vector<Vsn>& sorted_vsns) {
  auto [lo, hi] = entry_coverage(e);
  Vsn vlo = lo >> kSubregionShift;
  Vsn vhi = hi >> kSubregionShift;
  auto it = std::lower_bound(sorted_vsns.begin(), sorted_vsns.end(), vlo);
  return it != sorted_vsns.end() && *it <= vhi;
}

bool should_invalidate(const TlbEntry& e, const InvalidationSet& inv) {
  if (e.kind == EntryKind::subregion)
    return intersects_vsns(e, inv.affected_vsns);
  return hits_any_vfn(e, inv.changed_vfns);
}

} // namespace

uint64_t UnifiedTlb::invalidate(const InvalidationSet& inv) {
  uint64_t count = 0;
  for (auto& e : e_) {
    if (e.valid && should_invalidate(e, inv)) {
      e.valid = false;
      count++;
    }
  }
  return count;
}

void UnifiedTlb::invalidate_all() {
  for (auto& e : e_)
    e.valid = false;
}

std::string UnifiedTlb::dump() const {
  std::ostringstream os;
  for (uint32_t s = 0; s < sets_; s++) {
    for (uint32_t w = 0; w < ways_; w++) {
      const TlbEntry& e = entry_at(s, w);
      if (!e.valid)
        continue;
      os << "SET=" << s << " WAY=" << w
         << " T=" << (e.kind == EntryKind::subregion ? 1 : 0) << " TAG=" << std::hex
         << e.tag << std::dec << " LEN=" << e.length << " PFN=" << std::hex
         << e.base_pfn << std::dec << "\n";
    }
  }
  return os.str();
}

PerCuTlb::PerCuTlb(uint32_t entries, KindMask kinds) : kinds_(kinds), e_(entries) {
  if (entries == 0)
    throw std::invalid_argument("per-CU TLB needs at least one entry");
}

std::optional<TlbHit> PerCuTlb::lookup(uint64_t va) {
  Vfn vfn = va >> kPageShift;
  for (auto& e : e_) {
    if (e.valid && covers(e, vfn)) {
      e.lru = ++tick_;
      return make_hit(e, va);
    }
  }
  return std::nullopt;
}

std::optional<TlbEntry> PerCuTlb::insert(const TlbEntry& entry) {
  for (auto& e : e_) {
    if (!e.valid)
      continue;
    if (same_coverage(e, entry)) {
      e = entry;
      e.lru = ++tick_;
      return std::nullopt;
    }
    if (overlaps(e, entry))
      e.valid = false;
  }
  std::size_t victim = 0;
  bool found_invalid = false;
  for (std::size_t i = 0; i < e_.size(); i++) {
    if (!e_[i].valid) {
      victim = i;
      found_invalid = true;
      break;
    }
    if (e_[i].lru < e_[victim].lru)
      victim = i;
  }
  std::optional<TlbEntry> evicted;
  if (!found_invalid && e_[victim].valid)
    evicted = e_[victim];
  e_[victim] = entry;
  e_[victim].lru = ++tick_;
  return evicted;
}

uint64_t PerCuTlb::invalidate(const InvalidationSet& inv) {
  uint64_t count = 0;
  for (auto& e : e_) {
    if (e.valid && should_invalidate(e, inv)) {
      e.valid = false;
      count++;
    }
  }
  return count;
}

} // namespace mesc
