#pragma once

#include <string>
#include <vector>

#include "sbice/sim/simulator.hpp"
#include "sbice/smc/prior.hpp"

namespace sbice {

struct CatalogEntry {
  std::string id;
  std::string description;
  SimulatorConfig simulator;
  /// Parameter values of the source process this entry is paired with.
  ThetaVector reference;
  /// Empty for the fixtures, which have no free parameters.
  PriorSpec prior;
  /// Entry that generates the source dataset, simulated at `reference`.
  std::string source_id;
  /// Marks fixtures whose original definition had to be repaired.
  bool approximate = false;
};

const std::vector<CatalogEntry>& builtin_catalog();

/// ConfigError for unknown ids.
const CatalogEntry& catalog_entry(const std::string& id);

FrugalConfig frugal_config(const std::string& id);

}  // namespace sbice
