#pragma once

// Deterministic synthetic bundles for desk-scale validation. Every draw comes
// from a counter-based SplitMix64 stream keyed by (seed, stream id), and every
// distribution is implemented here, so outputs are identical across
// platforms and standard libraries.

#include "gravimetric/datamodel.hpp"
#include "gravimetric/design.hpp"
#include "gravimetric/remoteness.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gravimetric::synth {

inline constexpr std::string_view kRngAlgorithm = "splitmix64-ctr/v1";

class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t next() noexcept;
  /// Uniform on [0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept;
  std::uint64_t poisson(double mean);
  double gamma(double shape);
  /// NB2 draw with mean mu and variance mu + alpha mu^2.
  std::uint64_t negative_binomial(double mu, double alpha);
  /// Independent child stream.
  CounterRng split(std::uint64_t stream) const noexcept;

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

enum class Family { Poisson, NB2, LogNormal };

struct FamilySpec {
  Family kind = Family::Poisson;
  double alpha = 0;  // NB2 dispersion
  double sigma = 0;  // LogNormal log-scale sd (median-preserving: y = mu exp(sigma z))
};

struct Range {
  double lo = 0;
  double hi = 0;
};

struct SynthConfig {
  std::size_t n_countries = 50;  // generic destinations, GB/NI-like countries come on top
  int first_year = 2012;
  int last_year = 2016;
  std::uint64_t seed = 1;
  // Keys are design column names: intercept, log_gdp, log_population, log_area,
  // log_distance, log_religion, log_time, gb, ni, gatt_wto, english, eu, euro, legal.
  std::map<std::string, double> beta_true{{"intercept", -6.0}, {"log_gdp", 0.8},  {"log_distance", -0.6},
                                       {"eu", 0.2},         {"gb", 0.4},       {"ni", -0.3}};
  FamilySpec family;
  Range gdp{1e9, 1e12};
  Range population{1e5, 1e9};
  Range area_km2{1e2, 1e7};
  Range distance_km{300, 19000};
  Range religion_share{0.01, 1.0};
  double flag_probability = 0.3;
  bool include_uk = true;
  std::size_t n_goods = 24;
  std::string exporter = "IE";

  void validate() const;
};

/// One row per (country, year); GB and NI first when include_uk, each with eu = 1.
std::vector<CountryYearAttributes> generate_attributes(const SynthConfig& config);

/// exp(x . beta_true) for one attribute row. Throws InvalidArgument for
/// unknown coefficient names, MeanOverflow for non-finite or huge means.
double true_mean(const CountryYearAttributes& row, const SynthConfig& config);

/// The goods universe: cn8 codes (spread over the eight sectors) and their
/// shares of each destination-year mean.
struct Good {
  std::string cn8;
  Sector sector = Sector::OtherProducts;
  double share = 0;
  double unit_price = 1;  // EUR per unit
};
std::vector<Good> goods(const SynthConfig& config);
SectorMap sector_map(const SynthConfig& config);

/// One record per (destination, year, good bought by that destination); zero
/// values kept. Expected destination totals still equal true_mean.
std::vector<TradeFlowRecord> generate_flows(std::span<const CountryYearAttributes> attrs, const SynthConfig& config);

std::vector<TariffLine> generate_tariffs(const SynthConfig& config);

struct WorldTables {
  std::vector<BilateralTradeRecord> bilateral;
  DistanceTable distances;
};
/// Bilateral flows among exporter + destinations, and all pairwise distances.
/// Exporter-destination distances equal the attributes' distance_km.
WorldTables generate_world(std::span<const CountryYearAttributes> attrs, const SynthConfig& config);

struct BundlePaths {
  std::filesystem::path flows, attrs, bilateral, distances, tariffs, sectors;
};
BundlePaths bundle_paths(const std::filesystem::path& dir);
/// Writes flows/attrs/bilateral/distances/tariffs/sectors CSVs into `dir`.
BundlePaths write_bundle(const SynthConfig& config, const std::filesystem::path& dir);

/// Regression instance with intercept plus iid N(0,1) regressors.
struct SimulationSpec {
  std::size_t n = 200;
  std::vector<double> beta{0.5, 0.3};  // intercept first
  FamilySpec family;
  std::size_t n_clusters = 20;
  std::uint64_t seed = 1;
  bool binary_regressors = false;
};
DesignMatrix simulate_design(const SimulationSpec& spec);

}  // namespace gravimetric::synth
