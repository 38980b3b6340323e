#pragma once

#include "mesc/addr.hpp"

#include <vector>

namespace mesc {

// Produced by remap_pages, consumed by TLB/MSC invalidation. All vectors are
// sorted and deduplicated.
struct InvalidationSet {
  std::vector<Vfn> changed_vfns;    // regular/colt entries of these pages flush
  std::vector<Vsn> affected_vsns;   // subregion entries intersecting these evict
  std::vector<Vsn> frame_vsn_bases; // MSC lines of these frames invalidate

  bool empty() const {
    return changed_vfns.empty() && affected_vsns.empty() && frame_vsn_bases.empty();
  }
};

} // namespace mesc
