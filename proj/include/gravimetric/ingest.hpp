#pragma once

// Readers, writers, aggregation and merge for the CSV input bundle:
//
//   flows.csv      year,destination,cn8,value_eur,volume
//   attrs.csv      iso,year,gdp,population,area_km2,distance_km,religion_share,
//                  gb,ni,gatt_wto,english,eu,euro,legal
//   bilateral.csv  year,reporter,partner,flow_value
//   tariffs.csv    hs6,advalorem_rate
//   sectors.csv    cn_prefix,sector_label

#include "gravimetric/datamodel.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <vector>

namespace gravimetric {

std::vector<TradeFlowRecord> read_trade_flows(const std::filesystem::path& path);
std::vector<CountryYearAttributes> read_attributes(const std::filesystem::path& path);
std::vector<BilateralTradeRecord> read_bilateral(const std::filesystem::path& path);
std::vector<TariffLine> read_tariffs(const std::filesystem::path& path);
SectorMap read_sector_map(const std::filesystem::path& path);

void write_trade_flows(const std::filesystem::path& path, std::span<const TradeFlowRecord> flows);
void write_attributes(const std::filesystem::path& path, std::span<const CountryYearAttributes> attrs);
void write_bilateral(const std::filesystem::path& path, std::span<const BilateralTradeRecord> rows);
void write_tariffs(const std::filesystem::path& path, std::span<const TariffLine> rows);
void write_sector_map(const std::filesystem::path& path, const SectorMap& map);

enum class AggregationLevel { YearCountry, YearCountrySector, YearCountryCn8 };

struct FlowCell {
  int year = 0;
  std::string destination;
  std::string key;  // sector slug / cn8 / empty
  Cents value = 0;
  std::size_t n_records = 0;
};

struct Aggregation {
  AggregationLevel level = AggregationLevel::YearCountry;
  std::vector<FlowCell> cells;  // sorted by (year, destination, key)
  std::size_t n_records = 0;
  // Records whose (year, destination, cn8) repeats an earlier record; summed.
  std::size_t n_duplicate_keys = 0;
};

/// `map` is required for YearCountrySector.
Aggregation aggregate(std::span<const TradeFlowRecord> flows, AggregationLevel level,
                      const SectorMap* map = nullptr);

/// Aggregation restricted to one sector, collapsed to year x country.
/// AllSectors yields the plain year x country aggregation.
Aggregation aggregate_sector(std::span<const TradeFlowRecord> flows, Sector sector, const SectorMap& map);

struct MergeOptions {
  double religion_floor = 1e-4;
};

struct MergeReport {
  std::size_t n_flows_read = 0;
  std::size_t n_attrs_read = 0;
  std::size_t n_cells = 0;
  std::size_t n_matched = 0;
  std::size_t n_dropped_no_attrs = 0;
  std::size_t n_clamped = 0;
  std::size_t duplicate_keys = 0;
};

using RemotenessByYear = std::map<int, double>;

struct MergedDataset {
  std::vector<GravityObservation> observations;  // ordered by (year, destination, key)
  MergeReport report;
};

/// Inner join of flow cells with attributes on (year, destination). Cells
/// without attributes are dropped and counted. religion_share of exactly 0
/// is raised to the configured floor and counted.
MergedDataset merge(const Aggregation& flows, std::span<const CountryYearAttributes> attrs,
                    const RemotenessByYear* remoteness = nullptr, const MergeOptions& options = {});

}  // namespace gravimetric
