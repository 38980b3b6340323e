#include "mesc/workloads.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mesc {

uint64_t Trace::footprint_pages() const {
  std::set<Vfn> pages;
  for (const auto& e : events)
    pages.insert(e.va >> kPageShift);
  return pages.size();
}

std::vector<Vfn> Trace::distinct_vfns() const {
  std::set<Vfn> pages;
  for (const auto& e : events)
    pages.insert(e.va >> kPageShift);
  return {pages.begin(), pages.end()};
}

std::vector<std::pair<Vfn, uint64_t>> Trace::vfn_runs(uint64_t bridge_pages) const {
  std::vector<std::pair<Vfn, uint64_t>> runs;
  for (Vfn vfn : distinct_vfns()) {
    if (!runs.empty()) {
      auto& [start, len] = runs.back();
      if (vfn <= start + len - 1 + bridge_pages + 1) {
        len = vfn - start + 1;
        continue;
      }
    }
    runs.emplace_back(vfn, 1);
  }
  return runs;
}

uint32_t Trace::num_cus() const {
  uint32_t max_cu = 0;
  for (const auto& e : events)
    max_cu = std::max(max_cu, e.cu);
  return events.empty() ? 1 : max_cu + 1;
}

namespace {
void check_positive(uint64_t pages) {
  if (pages == 0)
    throw std::invalid_argument("trace generator needs a positive page count");
}
} // namespace

Trace gen_sequential(uint64_t pages, uint32_t passes, uint32_t cus, Vfn base_vfn) {
  check_positive(pages);
  if (passes == 0 || cus == 0)
    throw std::invalid_argument("passes and cus must be positive");
  Trace t;
  uint64_t i = 0;
  for (uint32_t pass = 0; pass < passes; pass++)
    for (uint64_t p = 0; p < pages; p++, i++)
      t.events.push_back({i, static_cast<uint32_t>(i % cus),
                          (base_vfn + p) << kPageShift, false});
  return t;
}

Trace gen_strided(uint64_t pages, uint64_t stride, uint32_t cus, Vfn base_vfn) {
  check_positive(pages);
  if (stride == 0 || cus == 0)
    throw std::invalid_argument("stride and cus must be positive");
  Trace t;
  for (uint64_t i = 0; i < pages; i++) {
    uint64_t p = (i * stride) % pages;
    t.events.push_back({i, static_cast<uint32_t>(i % cus),
                        (base_vfn + p) << kPageShift, false});
  }
  return t;
}

Trace gen_random(uint64_t pages, uint64_t accesses, uint64_t seed, uint32_t cus,
                 Vfn base_vfn) {
  check_positive(pages);
  if (cus == 0)
    throw std::invalid_argument("cus must be positive");
  std::mt19937_64 rng(seed);
  Trace t;
  for (uint64_t i = 0; i < accesses; i++) {
    uint64_t p = rng() % pages;
    uint64_t offset = (rng() % (kPageSize / 64)) * 64;
    bool write = (rng() & 3) == 0;
    t.events.push_back({i, static_cast<uint32_t>(i % cus),
                        ((base_vfn + p) << kPageShift) | offset, write});
  }
  return t;
}

Trace gen_pointer_chase(uint64_t pages, uint64_t chain_length, uint64_t seed,
                        uint32_t cus, Vfn base_vfn) {
  check_positive(pages);
  if (chain_length == 0 || chain_length > pages)
    throw std::invalid_argument("chain_length must be in [1, pages]");
  if (cus == 0)
    throw std::invalid_argument("cus must be positive");
  std::vector<uint64_t> nodes(pages);
  std::iota(nodes.begin(), nodes.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(nodes.begin(), nodes.end(), rng);
  nodes.resize(chain_length);
  Trace t;
  for (uint64_t i = 0; i < chain_length; i++)
    t.events.push_back({i, static_cast<uint32_t>(i % cus),
                        (base_vfn + nodes[i]) << kPageShift, false});
  return t;
}

Trace parse_trace(const std::string& text) {
  Trace t;
  std::istringstream in(text);
  std::string line;
  uint64_t lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    std::istringstream ls(line);
    uint64_t time;
    uint32_t cu;
    std::string va_str, rw;
    if (!(ls >> time >> cu >> va_str >> rw) || (rw != "R" && rw != "W"))
      throw std::invalid_argument("trace line " + std::to_string(lineno) +
                                  ": expected '<time> <cu> <va> <R|W>'");
    uint64_t va;
    try {
      std::size_t used = 0;
      va = std::stoull(va_str, &used, 16);
      if (used != va_str.size())
        throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw std::invalid_argument("trace line " + std::to_string(lineno) +
                                  ": bad address '" + va_str + "'");
    }
    t.events.push_back({time, cu, va, rw == "W"});
  }
  return t;
}

std::string write_trace(const Trace& trace) {
  std::ostringstream os;
  for (const auto& e : trace.events)
    os << e.time << " " << e.cu << " 0x" << std::hex << e.va << std::dec << " "
       << (e.is_write ? "W" : "R") << "\n";
  return os.str();
}

Trace load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open trace file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str());
}

void save_trace_file(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write trace file: " + path);
  out << write_trace(trace);
}

} // namespace mesc
