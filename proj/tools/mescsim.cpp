// mescsim: trace-driven GPU address-translation simulator CLI.
//
//   mescsim run             replay a trace under one design, emit JSON + CSV
//   mescsim sweep           replay across one config axis, emit CSV
//   mescsim gen-trace       write a synthetic trace file
//   mescsim analyze-pagemap contiguity histogram + subregion coverage of a
//                           pagemap dump

#include "mesc/config.hpp"
#include "mesc/engine.hpp"
#include "mesc/mapping.hpp"
#include "mesc/page_table.hpp"
#include "mesc/report.hpp"
#include "mesc/workloads.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace {

using namespace mesc;

struct GenSpec {
  std::string name;
  uint64_t pages = 4096;
  uint32_t passes = 1;
  uint64_t stride = 17;
  uint64_t accesses = 100000;
  uint64_t chain = 0; // 0 = pages
  uint32_t cus = 16;
  std::string heap_vfn_str; // hex or decimal, default kDefaultHeapVfn
  uint64_t heap_vfn = kDefaultHeapVfn;

  void finalize() {
    if (!heap_vfn_str.empty())
      heap_vfn = std::stoull(heap_vfn_str, nullptr, 0);
  }
};

struct MappingSpec {
  std::string source = "buddy"; // buddy | contig | pagemap
  uint64_t phys_pages = 1ull << 16;
  double fragment = 0.0;
  bool defrag = false;
  std::string regions_path;
  std::string pagemap_path;
};

void add_gen_options(CLI::App* app, GenSpec& gen) {
  app->add_option("--gen", gen.name, "generator: sequential|strided|random|pointer_chase");
  app->add_option("--pages", gen.pages, "footprint in pages");
  app->add_option("--passes", gen.passes, "passes over the footprint (sequential)");
  app->add_option("--stride", gen.stride, "page stride (strided)");
  app->add_option("--accesses", gen.accesses, "events to generate (random)");
  app->add_option("--chain", gen.chain, "chain length in pages (pointer_chase)");
  app->add_option("--cus", gen.cus, "compute units issuing the trace");
  app->add_option("--heap-vfn", gen.heap_vfn_str,
                  "base VFN of the synthetic heap (0x-prefixed for hex)");
}

Trace build_trace(const GenSpec& gen) {
  uint64_t chain = gen.chain == 0 ? gen.pages : gen.chain;
  if (gen.name == "sequential")
    return gen_sequential(gen.pages, gen.passes, gen.cus, gen.heap_vfn);
  if (gen.name == "strided")
    return gen_strided(gen.pages, gen.stride, gen.cus, gen.heap_vfn);
  if (gen.name == "random")
    return gen_random(gen.pages, gen.accesses, /*seed=*/1, gen.cus, gen.heap_vfn);
  if (gen.name == "pointer_chase")
    return gen_pointer_chase(gen.pages, chain, /*seed=*/1, gen.cus, gen.heap_vfn);
  throw std::invalid_argument("unknown generator: " + gen.name);
}

Trace build_trace_seeded(const GenSpec& gen, uint64_t seed) {
  if (gen.name == "random")
    return gen_random(gen.pages, gen.accesses, seed, gen.cus, gen.heap_vfn);
  if (gen.name == "pointer_chase") {
    uint64_t chain = gen.chain == 0 ? gen.pages : gen.chain;
    return gen_pointer_chase(gen.pages, chain, seed, gen.cus, gen.heap_vfn);
  }
  return build_trace(gen);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<uint8_t> read_binary(const std::string& path) {
  std::string s = read_file(path);
  return {s.begin(), s.end()};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write file: " + path);
  out << text;
}

PageMapping build_mapping(const MappingSpec& spec, const Trace& trace, uint64_t seed) {
  if (spec.source == "pagemap") {
    if (spec.regions_path.empty() || spec.pagemap_path.empty())
      throw std::invalid_argument("pagemap mapping needs --regions and --pagemap");
    auto regions = parse_regions_file(read_file(spec.regions_path));
    return ingest_pagemap(regions, read_binary(spec.pagemap_path));
  }
  // synthetic sources allocate the trace's VA extent, bridging small gaps the
  // way a heap segment would
  auto runs = trace.vfn_runs(/*bridge_pages=*/512);
  if (spec.source == "contig") {
    PageMapping m;
    Pfn next = 0x10000;
    std::set<Vfn> frames;
    for (const auto& [start, len] : runs)
      for (Vfn f = frame_base_of(start); f <= frame_base_of(start + len - 1);
           f += kFramePages)
        frames.insert(f);
    for (Vfn f : frames) {
      for (uint64_t k = 0; k < kFramePages; k++)
        m.map_page(f + k, next + k);
      next += kFramePages;
    }
    return m;
  }
  if (spec.source == "buddy") {
    BuddyAllocator buddy(spec.phys_pages);
    if (spec.fragment > 0.0)
      buddy.fragment(spec.fragment, seed, spec.defrag);
    PageMapping m;
    for (const auto& [start, len] : runs)
      buddy.allocate_range(m, start, len);
    return m;
  }
  throw std::invalid_argument("unknown mapping source: " + spec.source);
}

void write_report_files(const SimReport& report, const std::string& out) {
  std::filesystem::path json_path(out);
  if (json_path.extension() != ".json")
    json_path += ".json";
  std::filesystem::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  write_file(json_path.string(), report_to_json(report));
  write_file(csv_path.string(), report_csv_header() + report_to_csv_row(report));
  std::cout << report_summary_lines(report);
  std::cout << "report: " << json_path.string() << ", " << csv_path.string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"trace-driven GPU address-translation simulator"};
  app.require_subcommand(1);

  std::string design_str = "baseline";
  std::string config_path;
  std::string trace_path;
  std::string out_path;
  uint64_t seed = 1;
  GenSpec gen;
  MappingSpec mapping_spec;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--design", design_str,
                    "baseline|thp|colt|full_colt|mesc|mesc_colt");
    cmd->add_option("--config", config_path, "key=value config file");
    cmd->add_option("--trace", trace_path, "trace file (overrides --gen)");
    add_gen_options(cmd, gen);
    cmd->add_option("--mapping", mapping_spec.source, "buddy|contig|pagemap");
    cmd->add_option("--phys-pages", mapping_spec.phys_pages,
                    "simulated physical pages (buddy)");
    cmd->add_option("--fragment", mapping_spec.fragment,
                    "fraction of physical memory pinned before allocation");
    cmd->add_flag("--defrag", mapping_spec.defrag, "compact free blocks after pinning");
    cmd->add_option("--regions", mapping_spec.regions_path, "regions text file");
    cmd->add_option("--pagemap", mapping_spec.pagemap_path, "pagemap binary dump");
    cmd->add_option("--seed", seed, "seed for mapping and trace randomness");
    cmd->add_option("--out", out_path, "output path")->required();
  };

  CLI::App* run = app.add_subcommand("run", "replay one trace under one design");
  add_common(run);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "replay across a config axis");
  add_common(sweep_cmd);
  std::string axis;
  std::string values_str;
  sweep_cmd->add_option("--axis", axis, "config field to sweep")->required();
  sweep_cmd->add_option("--values", values_str, "comma-separated values")->required();

  CLI::App* gen_cmd = app.add_subcommand("gen-trace", "write a synthetic trace");
  add_gen_options(gen_cmd, gen);
  gen_cmd->add_option("--seed", seed, "generator seed");
  gen_cmd->add_option("--out", out_path, "trace file to write")->required();

  CLI::App* analyze = app.add_subcommand("analyze-pagemap",
                                         "contiguity analysis of a pagemap dump");
  std::string buckets_str = "256,512,768,1024";
  analyze->add_option("--regions", mapping_spec.regions_path, "regions text file")
      ->required();
  analyze->add_option("--pagemap", mapping_spec.pagemap_path, "pagemap binary dump")
      ->required();
  analyze->add_option("--buckets", buckets_str, "bucket upper edges in pages");
  analyze->add_option("--out", out_path, "JSON output path (optional)");

  CLI11_PARSE(app, argc, argv);

  try {
    gen.finalize();
    if (gen_cmd->parsed()) {
      if (gen.name.empty())
        throw std::invalid_argument("gen-trace needs --gen");
      Trace t = build_trace_seeded(gen, seed);
      save_trace_file(t, out_path);
      std::cout << "wrote " << t.events.size() << " events, footprint "
                << t.footprint_pages() << " pages: " << out_path << "\n";
      return 0;
    }

    if (analyze->parsed()) {
      auto regions = parse_regions_file(read_file(mapping_spec.regions_path));
      PageMapping m = ingest_pagemap(regions, read_binary(mapping_spec.pagemap_path));
      std::vector<uint64_t> edges;
      std::stringstream ss(buckets_str);
      std::string item;
      while (std::getline(ss, item, ','))
        edges.push_back(std::stoull(item));
      ContiguityHistogram h = contiguity_histogram(m, edges);
      double coverage = subregion_coverage(m);
      std::cout << histogram_to_table(h, coverage);
      if (!out_path.empty())
        write_file(out_path, histogram_to_json(h, coverage));
      return 0;
    }

    DesignConfig cfg;
    if (!config_path.empty())
      cfg = load_config_file(config_path);
    cfg.design = parse_design(design_str);
    cfg.validate();

    Trace trace;
    if (!trace_path.empty())
      trace = load_trace_file(trace_path);
    else if (!gen.name.empty())
      trace = build_trace_seeded(gen, seed);
    else
      throw std::invalid_argument("need --trace or --gen");
    if (trace.events.empty())
      throw std::invalid_argument("trace is empty");

    PageMapping mapping = build_mapping(mapping_spec, trace, seed);

    if (run->parsed()) {
      PageTable pt = PageTable::build_from_mapping(mapping);
      pt.scan_contiguity();
      SimReport report = run_trace(trace, mapping, pt, cfg, seed);
      write_report_files(report, out_path);
      return 0;
    }

    // sweep
    std::vector<uint64_t> values;
    std::stringstream ss(values_str);
    std::string item;
    while (std::getline(ss, item, ','))
      values.push_back(std::stoull(item));
    std::vector<SimReport> reports = sweep(trace, mapping, cfg, axis, values, seed);
    std::string csv = report_csv_header();
    for (std::size_t i = 0; i < reports.size(); i++)
      csv += report_to_csv_row(reports[i], axis, std::to_string(values[i]));
    write_file(out_path, csv);
    std::cout << "wrote " << reports.size() << " rows: " << out_path << "\n";
    return 0;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
