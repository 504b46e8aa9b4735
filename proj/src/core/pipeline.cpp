#include "gravimetric/pipeline.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace gravimetric {

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<SectorFit> estimate_sectors(std::span<const TradeFlowRecord> flows,
                                        std::span<const CountryYearAttributes> attrs, const SectorMap& sectors,
                                        const RemotenessByYear* remoteness, const EstimateRequest& request) {
  ModelSpec spec = request.spec;
  spec.response_scale = request.estimator == Estimator::OLS ? ResponseScale::Log : ResponseScale::Natural;
  spec.validate();
  request.options.validate();

  std::vector<SectorFit> out(request.sectors.size());
  parallel_for(out.size(), request.workers, [&](std::size_t i) {
    SectorFit& sf = out[i];
    sf.sector = request.sectors[i];
    sf.spec = spec;
    try {
      auto agg = aggregate_sector(flows, sf.sector, sectors);
      auto merged = merge(agg, attrs, remoteness, request.merge);
      sf.merge = merged.report;
      auto design = build_design(merged.observations, spec);
      sf.fe_reference = design.fe_reference;
      sf.remoteness_reference_year = design.remoteness_reference_year;
      sf.fit = fit_model(request.estimator, design, request.options);
    } catch (const HessianNotPositiveDefinite& e) {
      sf.fit = e.partial();
      sf.error = e.code();
      sf.message = e.what();
    } catch (const Error& e) {
      sf.error = e.code();
      sf.message = e.what();
    } catch (const std::exception& e) {
      sf.error = ErrorCode::Internal;
      sf.message = e.what();
    }
  });
  return out;
}

int exit_code_of(std::span<const SectorFit> fits) {
  bool input = false, structure = false, convergence = false, internal = false;
  for (const auto& f : fits) {
    if (f.error) {
      switch (exit_code_of(*f.error)) {
        case 2: input = true; break;
        case 3: convergence = true; break;
        case 4: structure = true; break;
        default: internal = true; break;
      }
    } else if (f.fit && !f.fit->converged) {
      convergence = true;
    }
  }
  if (internal) return 5;
  if (input) return 2;
  if (structure) return 4;
  if (convergence) return 3;
  return 0;
}

}  // namespace gravimetric
