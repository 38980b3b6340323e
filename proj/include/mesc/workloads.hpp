// Translation-trace generation and the text trace format.
#pragma once

#include "mesc/addr.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mesc {

struct TranslationEvent {
  uint64_t time = 0;
  uint32_t cu = 0;
  uint64_t va = 0;
  bool is_write = false;
};

struct Trace {
  std::vector<TranslationEvent> events;

  uint64_t footprint_pages() const;
  std::vector<Vfn> distinct_vfns() const; // sorted
  // maximal consecutive VFN runs; gaps of at most bridge_pages are merged
  std::vector<std::pair<Vfn, uint64_t>> vfn_runs(uint64_t bridge_pages = 0) const;
  uint32_t num_cus() const;
};

Trace gen_sequential(uint64_t pages, uint32_t passes, uint32_t cus,
                     Vfn base_vfn = kDefaultHeapVfn);
Trace gen_strided(uint64_t pages, uint64_t stride, uint32_t cus,
                  Vfn base_vfn = kDefaultHeapVfn);
Trace gen_random(uint64_t pages, uint64_t accesses, uint64_t seed, uint32_t cus,
                 Vfn base_vfn = kDefaultHeapVfn);
Trace gen_pointer_chase(uint64_t pages, uint64_t chain_length, uint64_t seed,
                        uint32_t cus, Vfn base_vfn = kDefaultHeapVfn);

// One event per line: "<time:decimal> <cu:decimal> <va:hex> <R|W>".
Trace parse_trace(const std::string& text);
std::string write_trace(const Trace& trace);

Trace load_trace_file(const std::string& path);
void save_trace_file(const Trace& trace, const std::string& path);

} // namespace mesc
