#pragma once

// ingest -> design -> fit, per sector, over a bounded worker pool.

#include "gravimetric/datamodel.hpp"
#include "gravimetric/design.hpp"
#include "gravimetric/error.hpp"
#include "gravimetric/glm.hpp"
#include "gravimetric/ingest.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace gravimetric {

struct SectorFit {
  Sector sector = Sector::AllSectors;
  ModelSpec spec;
  MergeReport merge;
  std::optional<std::string> fe_reference;
  std::optional<int> remoteness_reference_year;
  // Present on success, and for HessianNotPositiveDefinite (covariances withheld).
  std::optional<FitResult> fit;
  std::optional<ErrorCode> error;
  std::string message;
};

struct EstimateRequest {
  Estimator estimator = Estimator::PPML;
  EstimatorOptions options;
  ModelSpec spec;
  std::vector<Sector> sectors{Sector::AllSectors};
  MergeOptions merge;
  std::size_t workers = 1;
};

/// The response scale is forced to match the estimator (log for OLS,
/// natural otherwise). Results come back in request order.
std::vector<SectorFit> estimate_sectors(std::span<const TradeFlowRecord> flows,
                                        std::span<const CountryYearAttributes> attrs, const SectorMap& sectors,
                                        const RemotenessByYear* remoteness, const EstimateRequest& request);

/// Runs fn(0..n-1) on up to `workers` threads; the first exception (by index) is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

/// Worst error across sector fits, as a process exit code (0 if none):
/// input errors first, then numerical structure, then non-convergence.
int exit_code_of(std::span<const SectorFit> fits);

}  // namespace gravimetric
