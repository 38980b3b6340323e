#include "mesc/page_table.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mesc {

namespace {
inline uint32_t l4_index(Vfn vfn) { return (vfn >> 27) & 0x1FF; }
inline uint32_t l3_index(Vfn vfn) { return (vfn >> 18) & 0x1FF; }
inline uint32_t l2_index(Vfn vfn) { return (vfn >> 9) & 0x1FF; }
inline uint32_t l1_index(Vfn vfn) { return vfn & 0x1FF; }
} // namespace

PageTable::L1Entry& PageTable::ensure_l1(Vfn vfn) {
  if (l4_.empty()) {
    l4_.push_back(DirTable{});
    l4_.back().node = next_node_++;
  }
  DirEntry& e4 = l4_[0].e[l4_index(vfn)];
  if (!e4.present) {
    e4.child = static_cast<int32_t>(l3_.size());
    e4.present = true;
    l3_.push_back(DirTable{});
    l3_.back().node = next_node_++;
  }
  DirEntry& e3 = l3_[e4.child].e[l3_index(vfn)];
  if (!e3.present) {
    e3.child = static_cast<int32_t>(l2_.size());
    e3.present = true;
    l2_.push_back(L2Table{});
    l2_.back().node = next_node_++;
  }
  L2Entry& e2 = l2_[e3.child].e[l2_index(vfn)];
  if (!e2.present) {
    e2.l1_table = static_cast<int32_t>(l1_.size());
    e2.present = true;
    l1_.push_back(L1Table{});
    l1_.back().node = next_node_++;
  }
  return l1_[e2.l1_table].e[l1_index(vfn)];
}

PageTable::L1Entry* PageTable::find_l1(Vfn vfn) {
  if (l4_.empty())
    return nullptr;
  const DirEntry& e4 = l4_[0].e[l4_index(vfn)];
  if (!e4.present)
    return nullptr;
  const DirEntry& e3 = l3_[e4.child].e[l3_index(vfn)];
  if (!e3.present)
    return nullptr;
  L2Entry& e2 = l2_[e3.child].e[l2_index(vfn)];
  if (!e2.present)
    return nullptr;
  return &l1_[e2.l1_table].e[l1_index(vfn)];
}

PageTable PageTable::build_from_mapping(const PageMapping& m) {
  PageTable pt;
  pt.l4_.push_back(DirTable{});
  pt.l4_.back().node = pt.next_node_++;
  for (const auto& [vfn, info] : m) {
    L1Entry& e = pt.ensure_l1(vfn);
    e.pfn = info.pfn;
    e.perms = info.perms;
    e.present = true;
  }
  return pt;
}

void PageTable::rescan_frame(L2Entry& l2) {
  if (!l2.present)
    return;
  const L1Table& t = l1_[l2.l1_table];
  uint8_t c = 0;
  bool ac = true;
  Pfn prev_head = 0;
  Permissions prev_perms;
  for (uint32_t s = 0; s < kSubregionsPerFrame; s++) {
    const L1Entry& head = t.e[s * kSubregionPages];
    bool sub_ok = head.present;
    for (uint32_t p = 1; sub_ok && p < kSubregionPages; p++) {
      const L1Entry& e = t.e[s * kSubregionPages + p];
      sub_ok = e.present && e.pfn == head.pfn + p && e.perms == head.perms;
    }
    if (sub_ok)
      c |= static_cast<uint8_t>(1u << s);
    else
      ac = false;
    if (s > 0 && !(sub_ok && head.present && head.pfn == prev_head + kSubregionPages &&
                   head.perms == prev_perms))
      ac = false;
    prev_head = head.pfn;
    prev_perms = head.perms;
  }
  l2.c_bits = c;
  l2.ac = ac && c == 0xFF;
}

PageTable::ScanStats PageTable::scan_contiguity() {
  ScanStats stats;
  for (auto& table : l2_) {
    for (auto& entry : table.e) {
      if (!entry.present)
        continue;
      rescan_frame(entry);
      stats.frames_scanned++;
      stats.c_bits_set += static_cast<uint64_t>(__builtin_popcount(entry.c_bits));
      stats.ac_bits_set += entry.ac ? 1 : 0;
    }
  }
  return stats;
}

PageTable::WalkOutcome PageTable::walk(uint64_t va, std::vector<WalkStep>* trace) const {
  WalkOutcome out;
  if (!is_canonical(va) || l4_.empty()) {
    out.fault_level = 4;
    return out;
  }
  Vfn vfn = va >> kPageShift;

  const DirEntry& e4 = l4_[0].e[l4_index(vfn)];
  if (trace)
    trace->push_back({4, entry_addr(l4_[0].node, l4_index(vfn))});
  if (!e4.present) {
    out.fault_level = 4;
    return out;
  }
  const DirTable& t3 = l3_[e4.child];
  const DirEntry& e3 = t3.e[l3_index(vfn)];
  if (trace)
    trace->push_back({3, entry_addr(t3.node, l3_index(vfn))});
  if (!e3.present) {
    out.fault_level = 3;
    return out;
  }
  const L2Table& t2 = l2_[e3.child];
  const L2Entry& e2 = t2.e[l2_index(vfn)];
  if (trace)
    trace->push_back({2, entry_addr(t2.node, l2_index(vfn))});
  if (!e2.present) {
    out.fault_level = 2;
    return out;
  }
  const L1Table& t1 = l1_[e2.l1_table];
  const L1Entry& e1 = t1.e[l1_index(vfn)];
  if (trace)
    trace->push_back({1, entry_addr(t1.node, l1_index(vfn))});
  if (!e1.present) {
    out.fault_level = 1;
    return out;
  }
  out.present = true;
  out.pfn = e1.pfn;
  out.perms = e1.perms;
  return out;
}

InvalidationSet PageTable::remap_pages(PageMapping& m,
                                       const std::vector<RemapChange>& changes) {
  InvalidationSet inv;
  std::set<std::pair<int32_t, uint32_t>> frames; // (l3 child -> l2 table, index)

  for (const auto& change : changes) {
    L1Entry* e = find_l1(change.vfn);
    bool mapped = e && e->present;
    if (!change.new_pfn) {
      if (!mapped)
        continue; // unmap of an absent page is a no-op
      m.unmap_page(change.vfn);
      e->present = false;
      e->pfn = 0;
    } else {
      if (!mapped)
        throw std::invalid_argument("remap_pages: vfn not mapped");
      if (e->pfn == *change.new_pfn)
        continue; // no-op
      m.remap_page(change.vfn, *change.new_pfn);
      e->pfn = *change.new_pfn;
    }
    inv.changed_vfns.push_back(change.vfn);
    inv.affected_vsns.push_back(vsn_of(change.vfn));
    inv.frame_vsn_bases.push_back(frame_vsn_base_of(vsn_of(change.vfn)));

    const DirEntry& e4 = l4_[0].e[l4_index(change.vfn)];
    const DirEntry& e3 = l3_[e4.child].e[l3_index(change.vfn)];
    frames.emplace(e3.child, l2_index(change.vfn));
  }

  for (const auto& [table, index] : frames)
    rescan_frame(l2_[table].e[index]);

  auto uniq = [](std::vector<uint64_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(inv.changed_vfns);
  uniq(inv.affected_vsns);
  uniq(inv.frame_vsn_bases);
  return inv;
}

std::string PageTable::dump_l2() const {
  std::ostringstream os;
  if (l4_.empty())
    return os.str();
  for (uint32_t i4 = 0; i4 < 512; i4++) {
    const DirEntry& e4 = l4_[0].e[i4];
    if (!e4.present)
      continue;
    for (uint32_t i3 = 0; i3 < 512; i3++) {
      const DirEntry& e3 = l3_[e4.child].e[i3];
      if (!e3.present)
        continue;
      for (uint32_t i2 = 0; i2 < 512; i2++) {
        const L2Entry& e2 = l2_[e3.child].e[i2];
        if (!e2.present)
          continue;
        Vfn frame_vfn = (static_cast<uint64_t>(i4) << 27) |
                        (static_cast<uint64_t>(i3) << 18) |
                        (static_cast<uint64_t>(i2) << 9);
        os << std::hex << frame_vfn << std::dec << " AC=" << (e2.ac ? 1 : 0) << " C=";
        for (int b = 7; b >= 0; b--)
          os << ((e2.c_bits >> b) & 1);
        os << "\n";
      }
    }
  }
  return os.str();
}

PageTable::DirRef PageTable::l4_entry(uint32_t index) const {
  const DirEntry& e = l4_[0].e[index];
  return DirRef{e.present, entry_addr(l4_[0].node, index), e.child};
}

PageTable::DirRef PageTable::l3_entry(int32_t table, uint32_t index) const {
  const DirEntry& e = l3_[table].e[index];
  return DirRef{e.present, entry_addr(l3_[table].node, index), e.child};
}

PageTable::L2Ref PageTable::l2_entry(int32_t table, uint32_t index) const {
  const L2Entry& e = l2_[table].e[index];
  return L2Ref{e.present, entry_addr(l2_[table].node, index), e.c_bits, e.ac, e.l1_table};
}

PageTable::L1Ref PageTable::l1_entry(int32_t table, uint32_t index) const {
  const L1Entry& e = l1_[table].e[index];
  return L1Ref{e.present, entry_addr(l1_[table].node, index), e.pfn, e.perms};
}

PageTable::L2Ref PageTable::find_l2(Vfn vfn) const {
  if (l4_.empty())
    return L2Ref{false, 0, 0, false, -1};
  const DirEntry& e4 = l4_[0].e[l4_index(vfn)];
  if (!e4.present)
    return L2Ref{false, 0, 0, false, -1};
  const DirEntry& e3 = l3_[e4.child].e[l3_index(vfn)];
  if (!e3.present)
    return L2Ref{false, 0, 0, false, -1};
  return l2_entry(e3.child, l2_index(vfn));
}

} // namespace mesc
