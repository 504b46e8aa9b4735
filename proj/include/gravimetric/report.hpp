#pragma once

// Result serialization: fit JSON + coefficient CSV, impact.csv / markdown,
// substitution.csv.

#include "gravimetric/pipeline.hpp"
#include "gravimetric/scenario.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace gravimetric {

/// `manifest` is the path of the run manifest relative to the fit file.
nlohmann::json fit_to_json(const SectorFit& sf, Estimator estimator, const std::string& manifest = "manifest.json");

/// name,estimate,robust_se,cv,significant_at_1pct
std::string coefficient_table_csv(const FitResult& fit);

/// Writes coefficients_<slug>.csv (when a fit exists) and fit_<slug>.json
/// into `dir`; both carry a reference to manifest.json.
void write_sector_fit(const std::filesystem::path& dir, const SectorFit& sf, Estimator estimator,
                      const std::string& manifest = "manifest.json");

/// sector,metric,value
std::string impact_csv(const ImpactReport& report);
/// Metrics as rows, sectors as columns, followed by the GNI* block.
std::string impact_markdown(const ImpactReport& report);
/// year,cn8,old_dest,disposition,new_dest,old_value,new_value
std::string substitution_csv(std::span<const SubstitutionEntry> log);

}  // namespace gravimetric
