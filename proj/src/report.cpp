#include "mesc/report.hpp"

#include <json.hpp>

#include <iomanip>
#include <sstream>

namespace mesc {

using nlohmann::json;

std::string report_to_json(const SimReport& r) {
  const Counters& c = r.counters;
  json j;
  j["design"] = r.design;
  j["seed"] = r.seed;
  j["events"] = c.events;
  j["per_cu"] = {{"lookups", c.percu_lookups},
                 {"hits", c.percu_hits},
                 {"hit_ratio", r.percu_hit_ratio},
                 {"writes", c.percu_writes}};
  j["iommu"] = {{"lookups", c.iommu_lookups},
                {"hits", c.iommu_sub_hits + c.iommu_reg_hits},
                {"hit_ratio", r.iommu_hit_ratio},
                {"subregion_probes", c.iommu_sub_probes},
                {"subregion_hits", c.iommu_sub_hits},
                {"subregion_writes", c.iommu_sub_writes},
                {"regular_probes", c.iommu_reg_probes},
                {"regular_hits", c.iommu_reg_hits},
                {"regular_writes", c.iommu_reg_writes}};
  j["walks"] = {{"issued", c.walks},
                {"mem_reads", c.walk_mem_reads},
                {"critical_reads", c.walk_critical_reads},
                {"pwc_probes", c.pwc_probes},
                {"pwc_hits", c.pwc_hits},
                {"pwb_queued", c.pwb_queued},
                {"pwb_overflows", c.pwb_overflows}};
  j["msc"] = {{"probes", c.msc_probes},
              {"hits", c.msc_hits},
              {"hit_ratio", r.msc_hit_ratio},
              {"writes", c.msc_writes}};
  j["subregion_length_hist"] = c.sub_len_hist;
  j["shootdown"] = {{"remap_batches", c.remap_batches},
                    {"invalidations", c.shootdown_invalidations}};
  j["latency"] = {{"mean", r.latency.mean},
                  {"p50", r.latency.p50},
                  {"p99", r.latency.p99},
                  {"max", r.latency.max}};
  j["energy_pj"] = {{"per_cu", r.energy.per_cu},
                    {"iommu_regular", r.energy.iommu_regular},
                    {"iommu_subregion", r.energy.iommu_subregion},
                    {"msc", r.energy.msc},
                    {"pwc", r.energy.pwc},
                    {"memory", r.energy.memory},
                    {"total", r.energy.total}};
  std::ostringstream dig;
  dig << "0x" << std::hex << std::setw(16) << std::setfill('0') << r.digest;
  j["digest"] = dig.str();
  return j.dump(2) + "\n";
}

std::string report_csv_header() {
  return "axis,value,design,seed,events,percu_lookups,percu_hits,percu_hit_ratio,"
         "iommu_lookups,iommu_hits,iommu_hit_ratio,iommu_sub_hits,iommu_reg_hits,"
         "walks,walk_mem_reads,walk_critical_reads,msc_probes,msc_hits,msc_writes,"
         "pwc_probes,pwc_hits,pwb_queued,remap_batches,shootdown_invalidations,"
         "latency_mean,latency_p50,latency_p99,energy_per_cu,energy_iommu_regular,"
         "energy_iommu_subregion,energy_msc,energy_pwc,energy_memory,energy_total,"
         "digest\n";
}

std::string report_to_csv_row(const SimReport& r, const std::string& axis,
                              const std::string& axis_value) {
  const Counters& c = r.counters;
  std::ostringstream os;
  os << axis << ',' << axis_value << ',' << r.design << ',' << r.seed << ','
     << c.events << ',' << c.percu_lookups << ',' << c.percu_hits << ','
     << r.percu_hit_ratio << ',' << c.iommu_lookups << ','
     << (c.iommu_sub_hits + c.iommu_reg_hits) << ',' << r.iommu_hit_ratio << ','
     << c.iommu_sub_hits << ',' << c.iommu_reg_hits << ',' << c.walks << ','
     << c.walk_mem_reads << ',' << c.walk_critical_reads << ',' << c.msc_probes
     << ',' << c.msc_hits << ',' << c.msc_writes << ',' << c.pwc_probes << ','
     << c.pwc_hits << ',' << c.pwb_queued << ',' << c.remap_batches << ','
     << c.shootdown_invalidations << ',' << r.latency.mean << ',' << r.latency.p50
     << ',' << r.latency.p99 << ',' << r.energy.per_cu << ','
     << r.energy.iommu_regular << ',' << r.energy.iommu_subregion << ','
     << r.energy.msc << ',' << r.energy.pwc << ',' << r.energy.memory << ','
     << r.energy.total << ",0x" << std::hex << std::setw(16) << std::setfill('0')
     << r.digest << std::dec << "\n";
  return os.str();
}

namespace {
std::string bucket_label(const ContiguityHistogram& h, std::size_t i) {
  uint64_t lo = i == 0 ? 1 : h.upper_edges[i - 1] + 1;
  std::ostringstream os;
  if (h.upper_edges[i] == UINT64_MAX)
    os << ">" << (lo - 1);
  else
    os << lo << "-" << h.upper_edges[i];
  return os.str();
}
} // namespace

std::string histogram_to_json(const ContiguityHistogram& h, double coverage) {
  json j;
  json buckets = json::array();
  for (std::size_t i = 0; i < h.upper_edges.size(); i++) {
    buckets.push_back({{"bucket", bucket_label(h, i)},
                       {"regions", h.region_counts[i]},
                       {"region_ratio", h.region_ratio[i]},
                       {"pages", h.page_counts[i]},
                       {"coverage_cum", h.coverage_cum[i]}});
  }
  j["buckets"] = buckets;
  j["total_regions"] = h.total_regions;
  j["total_pages"] = h.total_pages;
  j["subregion_coverage"] = coverage;
  return j.dump(2) + "\n";
}

std::string histogram_to_table(const ContiguityHistogram& h, double coverage) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "pages" << std::right << std::setw(10)
     << "regions" << std::setw(12) << "reg_ratio" << std::setw(12) << "pages"
     << std::setw(14) << "coverage_cum" << "\n";
  for (std::size_t i = 0; i < h.upper_edges.size(); i++) {
    os << std::left << std::setw(14) << bucket_label(h, i) << std::right
       << std::setw(10) << h.region_counts[i] << std::setw(12) << std::fixed
       << std::setprecision(4) << h.region_ratio[i] << std::setw(12)
       << h.page_counts[i] << std::setw(14) << std::fixed << std::setprecision(4)
       << h.coverage_cum[i] << "\n";
  }
  os << "regions " << h.total_regions << ", pages " << h.total_pages
     << ", subregion coverage " << std::fixed << std::setprecision(4) << coverage
     << "\n";
  return os.str();
}

std::string report_summary_lines(const SimReport& r) {
  const Counters& c = r.counters;
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "per-cu-tlb hit " << r.percu_hit_ratio * 100.0 << "% (" << c.percu_hits
     << "/" << c.percu_lookups << ")\n";
  os << "iommu-tlb  hit " << r.iommu_hit_ratio * 100.0 << "% ("
     << (c.iommu_sub_hits + c.iommu_reg_hits) << "/" << c.iommu_lookups
     << "), subregion hits " << c.iommu_sub_hits << "\n";
  os << "walks " << c.walks << ", mem reads " << c.walk_mem_reads << ", msc hit "
     << r.msc_hit_ratio * 100.0 << "%\n";
  os << "latency mean " << r.latency.mean << " p50 " << r.latency.p50 << " p99 "
     << r.latency.p99 << ", energy " << r.energy.total << " pJ\n";
  return os.str();
}

} // namespace mesc
