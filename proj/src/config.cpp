#include "mesc/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mesc {

Design parse_design(const std::string& name) {
  if (name == "baseline") return Design::baseline;
  if (name == "thp") return Design::thp;
  if (name == "colt") return Design::colt;
  if (name == "full_colt") return Design::full_colt;
  if (name == "mesc") return Design::mesc;
  if (name == "mesc_colt") return Design::mesc_colt;
  throw std::invalid_argument("unknown design: " + name);
}

std::string design_name(Design d) {
  switch (d) {
  case Design::baseline: return "baseline";
  case Design::thp: return "thp";
  case Design::colt: return "colt";
  case Design::full_colt: return "full_colt";
  case Design::mesc: return "mesc";
  case Design::mesc_colt: return "mesc_colt";
  }
  return "?";
}

void DesignConfig::validate() const {
  auto pow2 = [](uint32_t v) { return v != 0 && (v & (v - 1)) == 0; };
  if (per_cu_entries == 0)
    throw std::invalid_argument("per_cu_entries must be positive");
  if (!pow2(iommu_sets))
    throw std::invalid_argument("iommu_sets must be a power of two");
  if (iommu_ways == 0 || subregion_ways > iommu_ways)
    throw std::invalid_argument("bad iommu way configuration");
  if ((design == Design::mesc || design == Design::mesc_colt) && subregion_ways == 0)
    throw std::invalid_argument("mesc designs need subregion_ways >= 1");
  if (msc_ways == 0 || msc_entries == 0 || msc_entries % msc_ways != 0 ||
      !pow2(msc_entries / msc_ways))
    throw std::invalid_argument("bad msc configuration");
  if (walkers == 0)
    throw std::invalid_argument("walkers must be positive");
  const double energies[] = {
      energy.per_cu_read,   energy.per_cu_write,   energy.iommu_reg_read,
      energy.iommu_reg_write, energy.iommu_sub_read, energy.iommu_sub_write,
      energy.msc_read,      energy.msc_write,      energy.pwc_read,
      energy.pwc_write,     energy.memory_read};
  for (double e : energies)
    if (e < 0.0)
      throw std::invalid_argument("energy parameters must be non-negative");
}

DesignConfig parse_config_text(const std::string& text, DesignConfig cfg) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    std::string stripped = line.substr(0, line.find('#'));
    auto first = stripped.find_first_not_of(" \t\r");
    if (first == std::string::npos)
      continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    auto u32 = [&] { return static_cast<uint32_t>(std::stoul(value)); };
    auto u64v = [&] { return std::stoull(value); };
    auto f64 = [&] { return std::stod(value); };

    if (key == "design") cfg.design = parse_design(value);
    else if (key == "per_cu_entries") cfg.per_cu_entries = u32();
    else if (key == "iommu_sets") cfg.iommu_sets = u32();
    else if (key == "iommu_ways") cfg.iommu_ways = u32();
    else if (key == "subregion_ways") cfg.subregion_ways = u32();
    else if (key == "msc_entries") cfg.msc_entries = u32();
    else if (key == "msc_ways") cfg.msc_ways = u32();
    else if (key == "pwc_bytes") cfg.pwc_bytes = u32();
    else if (key == "walkers") cfg.walkers = u32();
    else if (key == "pwb_capacity") cfg.pwb_capacity = u32();
    else if (key == "lat_per_cu_hit") cfg.lat.per_cu_hit = u64v();
    else if (key == "lat_iommu_access") cfg.lat.iommu_access = u64v();
    else if (key == "lat_iommu_round_trip") cfg.lat.iommu_round_trip = u64v();
    else if (key == "lat_memory_read") cfg.lat.memory_read = u64v();
    else if (key == "e_per_cu_read") cfg.energy.per_cu_read = f64();
    else if (key == "e_per_cu_write") cfg.energy.per_cu_write = f64();
    else if (key == "e_iommu_reg_read") cfg.energy.iommu_reg_read = f64();
    else if (key == "e_iommu_reg_write") cfg.energy.iommu_reg_write = f64();
    else if (key == "e_iommu_sub_read") cfg.energy.iommu_sub_read = f64();
    else if (key == "e_iommu_sub_write") cfg.energy.iommu_sub_write = f64();
    else if (key == "e_msc_read") cfg.energy.msc_read = f64();
    else if (key == "e_msc_write") cfg.energy.msc_write = f64();
    else if (key == "e_pwc_read") cfg.energy.pwc_read = f64();
    else if (key == "e_pwc_write") cfg.energy.pwc_write = f64();
    else if (key == "e_memory_read") cfg.energy.memory_read = f64();
    else
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

DesignConfig load_config_file(const std::string& path, DesignConfig base) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), base);
}

DesignConfig apply_axis(DesignConfig cfg, const std::string& axis, uint64_t value) {
  if (axis == "per_cu_entries") {
    cfg.per_cu_entries = static_cast<uint32_t>(value);
  } else if (axis == "iommu_entries") {
    if (value % cfg.iommu_ways != 0)
      throw std::invalid_argument("iommu_entries must be a multiple of iommu_ways");
    cfg.iommu_sets = static_cast<uint32_t>(value / cfg.iommu_ways);
  } else if (axis == "subregion_ways") {
    cfg.subregion_ways = static_cast<uint32_t>(value);
  } else if (axis == "msc_entries") {
    cfg.msc_entries = static_cast<uint32_t>(value);
  } else if (axis == "pwc_bytes") {
    cfg.pwc_bytes = static_cast<uint32_t>(value);
  } else if (axis == "walkers") {
    cfg.walkers = static_cast<uint32_t>(value);
  } else {
    throw std::invalid_argument("unknown sweep axis: " + axis);
  }
  cfg.validate();
  return cfg;
}

} // namespace mesc
