// Simulation configuration: structure geometry, latency and per-access
// energy parameters, config-file parsing.
#pragma once

#include "mesc/walker.hpp"

#include <cstdint>
#include <string>

namespace mesc {

Design parse_design(const std::string& name);
std::string design_name(Design d);

struct LatencyParams {
  // cycles; placeholders exposed for calibration, orderings are what the
  // simulator asserts
  uint64_t per_cu_hit = 1;
  uint64_t iommu_access = 20;
  uint64_t iommu_round_trip = 100;
  uint64_t memory_read = 200;
};

struct EnergyParams {
  // picojoules per access; order-of-magnitude placeholders, override for any
  // absolute claim
  double per_cu_read = 0.4;
  double per_cu_write = 0.4;
  double iommu_reg_read = 1.2;
  double iommu_reg_write = 1.2;
  double iommu_sub_read = 0.8;
  double iommu_sub_write = 0.8;
  double msc_read = 0.6;
  double msc_write = 0.6;
  double pwc_read = 0.9;
  double pwc_write = 0.9;
  double memory_read = 120.0;
};

struct DesignConfig {
  Design design = Design::baseline;
  uint32_t per_cu_entries = 32;
  uint32_t iommu_sets = 32;
  uint32_t iommu_ways = 16;
  uint32_t subregion_ways = 8; // partition 1 size
  uint32_t msc_entries = 512;
  uint32_t msc_ways = 8;
  uint32_t pwc_bytes = 8192;
  uint32_t walkers = 16;
  uint32_t pwb_capacity = 0; // 0 = unbounded
  LatencyParams lat{};
  EnergyParams energy{};

  void validate() const; // throws std::invalid_argument
};

// Flat "key=value" file with '#' comments. Unknown keys are errors.
DesignConfig parse_config_text(const std::string& text, DesignConfig base = {});
DesignConfig load_config_file(const std::string& path, DesignConfig base = {});

// Sweep axes: per_cu_entries, iommu_entries (sets * ways, ways fixed),
// subregion_ways, msc_entries, pwc_bytes, walkers.
DesignConfig apply_axis(DesignConfig base, const std::string& axis, uint64_t value);

} // namespace mesc
