#include "mesc/walker.hpp"

#include <algorithm>
#include <stdexcept>

namespace mesc {

Msc::Msc(uint32_t entries, uint32_t ways) : ways_(ways) {
  if (ways == 0 || entries == 0 || entries % ways != 0)
    throw std::invalid_argument("msc entries must be a positive multiple of ways");
  sets_ = entries / ways;
  if ((sets_ & (sets_ - 1)) != 0)
    throw std::invalid_argument("msc set count must be a power of two");
  lines_.resize(entries);
}

void Msc::check_aligned(Vsn frame_vsn_base) {
  if (frame_vsn_base % kSubregionsPerFrame != 0)
    throw std::invalid_argument("msc key must be an 8-aligned vsn");
}

uint32_t Msc::set_of(Vsn frame_vsn_base) const {
  return static_cast<uint32_t>((frame_vsn_base >> 3) & (sets_ - 1));
}

std::optional<uint8_t> Msc::lookup(Vsn frame_vsn_base) {
  check_aligned(frame_vsn_base);
  uint32_t set = set_of(frame_vsn_base);
  for (uint32_t w = 0; w < ways_; w++) {
    Line& line = lines_[set * ways_ + w];
    if (line.valid && line.key == frame_vsn_base) {
      line.lru = ++tick_;
      return line.bitmap;
    }
  }
  return std::nullopt;
}

std::optional<uint8_t> Msc::peek(Vsn frame_vsn_base) const {
  check_aligned(frame_vsn_base);
  uint32_t set = set_of(frame_vsn_base);
  for (uint32_t w = 0; w < ways_; w++) {
    const Line& line = lines_[set * ways_ + w];
    if (line.valid && line.key == frame_vsn_base)
      return line.bitmap;
  }
  return std::nullopt;
}

void Msc::insert(Vsn frame_vsn_base, uint8_t bitmap) {
  check_aligned(frame_vsn_base);
  bitmap &= 0x7F;
  uint32_t set = set_of(frame_vsn_base);
  uint32_t victim = 0;
  uint64_t best = UINT64_MAX;
  for (uint32_t w = 0; w < ways_; w++) {
    Line& line = lines_[set * ways_ + w];
    if (line.valid && line.key == frame_vsn_base) { // one line per frame
      line.bitmap = bitmap;
      line.lru = ++tick_;
      return;
    }
    uint64_t rank = line.valid ? line.lru : 0;
    if (rank < best) {
      best = rank;
      victim = w;
    }
  }
  Line& line = lines_[set * ways_ + victim];
  line.valid = true;
  line.key = frame_vsn_base;
  line.bitmap = bitmap;
  line.lru = ++tick_;
}

bool Msc::invalidate(Vsn frame_vsn_base) {
  check_aligned(frame_vsn_base);
  uint32_t set = set_of(frame_vsn_base);
  for (uint32_t w = 0; w < ways_; w++) {
    Line& line = lines_[set * ways_ + w];
    if (line.valid && line.key == frame_vsn_base) {
      line.valid = false;
      return true;
    }
  }
  return false;
}

std::pair<uint32_t, uint32_t> run_from_bitmap(uint8_t bitmap, uint32_t subregion_index) {
  auto linked = [bitmap](uint32_t i) { return (bitmap >> i) & 1; };
  uint32_t first = subregion_index;
  while (first > 0 && linked(first - 1))
    first--;
  uint32_t last = subregion_index;
  while (last < kSubregionsPerFrame - 1 && linked(last))
    last++;
  return {first, last - first};
}

Pwc::Pwc(uint32_t capacity_bytes) : capacity_(capacity_bytes / 8) {}

bool Pwc::access(uint64_t entry_addr) {
  if (capacity_ == 0)
    return false;
  auto it = map_.find(entry_addr);
  if (it != map_.end()) {
    order_.splice(order_.begin(), order_, it->second);
    return true;
  }
  if (map_.size() >= capacity_) {
    map_.erase(order_.back());
    order_.pop_back();
  }
  order_.push_front(entry_addr);
  map_[entry_addr] = order_.begin();
  return false;
}

void Pwc::invalidate_all() {
  order_.clear();
  map_.clear();
}

WalkerPool::WalkerPool(uint32_t max_concurrent, uint32_t pwb_capacity)
    : max_concurrent_(max_concurrent), pwb_capacity_(pwb_capacity) {
  if (max_concurrent == 0)
    throw std::invalid_argument("walker pool needs at least one walker");
}

WalkerPool::Admission WalkerPool::admit(uint64_t now, uint64_t duration) {
  while (!completions_.empty() && completions_.top() <= now)
    completions_.pop();

  Admission adm;
  if (completions_.size() < max_concurrent_) {
    adm.start_time = now;
  } else {
    queued_starts_.erase(std::remove_if(queued_starts_.begin(), queued_starts_.end(),
                                        [now](uint64_t s) { return s <= now; }),
                         queued_starts_.end());
    if (pwb_capacity_ != 0 && queued_starts_.size() >= pwb_capacity_)
      adm.overflowed = true;
    adm.start_time = completions_.top();
    completions_.pop();
    adm.queued = true;
    adm.queue_delay = adm.start_time - now;
    queued_starts_.push_back(adm.start_time);
  }
  completions_.push(adm.start_time + duration);
  return adm;
}

uint32_t WalkerPool::outstanding_at(uint64_t now) const {
  auto copy = completions_;
  uint32_t n = 0;
  while (!copy.empty()) {
    if (copy.top() > now)
      n++;
    copy.pop();
  }
  return n;
}

namespace {

// Maximal contiguous permission-uniform run containing the requested page
// within its 4-page-aligned block; derivable from the one L1PTE cache-line
// read the walk already performed.
ColtRun colt_run_from_line(const PageTable& pt, int32_t l1_table, uint32_t page_in_frame) {
  uint32_t block = page_in_frame & ~3u;
  PageTable::L1Ref own = pt.l1_entry(l1_table, page_in_frame);
  uint32_t first = page_in_frame;
  while (first > block) {
    PageTable::L1Ref prev = pt.l1_entry(l1_table, first - 1);
    if (!prev.present || prev.pfn + (page_in_frame - (first - 1)) != own.pfn ||
        !(prev.perms == own.perms))
      break;
    first--;
  }
  uint32_t last = page_in_frame;
  while (last < block + 3) {
    PageTable::L1Ref next = pt.l1_entry(l1_table, last + 1);
    if (!next.present || next.pfn != own.pfn + (last + 1 - page_in_frame) ||
        !(next.perms == own.perms))
      break;
    last++;
  }
  ColtRun run;
  run.base_vfn = first; // within-frame index; the caller rebases to the frame
  run.length = last - first;
  run.base_pfn = own.pfn - (page_in_frame - first);
  run.perms = own.perms;
  return run;
}

} // namespace

std::optional<WalkResult> walk_request(const PageTable& pt, Msc& msc, Pwc& pwc,
                                       uint64_t va, Design design) {
  if (!is_canonical(va))
    return std::nullopt;
  VaParts parts = decompose_va(va);
  Vfn vfn = parts.vfn;
  uint32_t page_in_frame = static_cast<uint32_t>(vfn & (kFramePages - 1));
  uint32_t sub = parts.subregion_index;

  WalkResult wr;
  auto upper_read = [&](uint64_t addr) {
    // non-leaf levels go through the PWC
    if (pwc.enabled()) {
      wr.pwc_probes++;
      if (pwc.access(addr)) {
        wr.pwc_hits++;
        return;
      }
    }
    wr.critical_reads++;
    wr.total_reads++;
  };
  auto leaf_read = [&]() {
    wr.critical_reads++;
    wr.total_reads++;
  };

  PageTable::DirRef e4 = pt.l4_entry((vfn >> 27) & 0x1FF);
  upper_read(e4.read_addr);
  if (!e4.present)
    return std::nullopt;
  PageTable::DirRef e3 = pt.l3_entry(e4.child, (vfn >> 18) & 0x1FF);
  upper_read(e3.read_addr);
  if (!e3.present)
    return std::nullopt;
  PageTable::L2Ref e2 = pt.l2_entry(e3.child, (vfn >> 9) & 0x1FF);

  if (design == Design::thp) {
    // 2MB leaf: the L2 entry itself supplies the frame translation
    leaf_read();
    if (!e2.present)
      return std::nullopt;
    PageTable::L1Ref head = pt.l1_entry(e2.l1_table, 0);
    if (!head.present)
      return std::nullopt;
    wr.pfn = head.pfn + page_in_frame;
    wr.perms = head.perms;
    wr.payload = WalkResult::Payload::large_page;
    wr.sub = SubregionPayload{frame_vsn_base_of(parts.vsn), 0, head.pfn, head.perms};
    return wr;
  }

  upper_read(e2.read_addr);
  if (!e2.present)
    return std::nullopt;

  bool use_bits = design == Design::mesc || design == Design::mesc_colt;
  bool want_colt = design == Design::colt || design == Design::full_colt ||
                   design == Design::mesc_colt;
  Vsn frame_vsn_base = frame_vsn_base_of(parts.vsn);

  if (use_bits && e2.ac) {
    // whole frame contiguous: one head read covers all 512 pages
    PageTable::L1Ref head = pt.l1_entry(e2.l1_table, 0);
    leaf_read();
    wr.pfn = head.pfn + page_in_frame;
    wr.perms = head.perms;
    wr.payload = WalkResult::Payload::subregion;
    wr.sub = SubregionPayload{frame_vsn_base, kSubregionsPerFrame - 1, head.pfn, head.perms};
    if (want_colt) {
      uint32_t block = page_in_frame & ~3u;
      wr.colt = ColtRun{parts.frame_base_vfn + block, 3, head.pfn + block, head.perms};
    }
    return wr;
  }

  bool c_set = use_bits && ((e2.c_bits >> sub) & 1);
  if (c_set) {
    // contiguous subregion: result returns after the head read, then the
    // inter-subregion links are resolved via the MSC
    PageTable::L1Ref head = pt.l1_entry(e2.l1_table, sub * kSubregionPages);
    leaf_read();
    uint32_t page_in_sub = page_in_frame - sub * kSubregionPages;
    wr.pfn = head.pfn + page_in_sub;
    wr.perms = head.perms;

    wr.msc_probed = true;
    uint8_t bitmap;
    if (auto cached = msc.lookup(frame_vsn_base)) {
      wr.msc_hit = true;
      bitmap = *cached;
    } else {
      // fill: read the head L1PTE of every other contiguous subregion in the
      // frame; these reads do not delay the requester
      std::array<PageTable::L1Ref, kSubregionsPerFrame> heads{};
      for (uint32_t s = 0; s < kSubregionsPerFrame; s++) {
        if (!((e2.c_bits >> s) & 1))
          continue;
        heads[s] = pt.l1_entry(e2.l1_table, s * kSubregionPages);
        if (s != sub)
          wr.total_reads++;
      }
      bitmap = 0;
      for (uint32_t i = 0; i + 1 < kSubregionsPerFrame; i++) {
        bool both = ((e2.c_bits >> i) & 1) && ((e2.c_bits >> (i + 1)) & 1);
        if (both && heads[i + 1].pfn == heads[i].pfn + kSubregionPages &&
            heads[i + 1].perms == heads[i].perms)
          bitmap |= static_cast<uint8_t>(1u << i);
      }
      msc.insert(frame_vsn_base, bitmap);
    }

    auto [first, length] = run_from_bitmap(bitmap, sub);
    Pfn run_base = head.pfn - static_cast<uint64_t>(sub - first) * kSubregionPages;
    wr.payload = WalkResult::Payload::subregion;
    wr.sub = SubregionPayload{frame_vsn_base + first, length, run_base, head.perms};
    if (want_colt) {
      uint32_t block = page_in_frame & ~3u;
      Pfn block_pfn = head.pfn + (block - sub * kSubregionPages);
      wr.colt = ColtRun{parts.frame_base_vfn + block, 3, block_pfn, head.perms};
    }
    return wr;
  }

  // plain 4KB walk: read the page's own L1PTE
  PageTable::L1Ref own = pt.l1_entry(e2.l1_table, page_in_frame);
  leaf_read();
  if (!own.present)
    return std::nullopt;
  wr.pfn = own.pfn;
  wr.perms = own.perms;
  wr.payload = WalkResult::Payload::regular;
  if (want_colt) {
    ColtRun run = colt_run_from_line(pt, e2.l1_table, page_in_frame);
    run.base_vfn = parts.frame_base_vfn + run.base_vfn;
    wr.colt = run;
  }
  return wr;
}

} // namespace mesc
