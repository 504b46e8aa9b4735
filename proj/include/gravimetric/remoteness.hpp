#pragma once

// Expenditure-weighted remoteness indices used as observable proxies for
// multilateral resistance:  r_j,t = sum_k D_jk,t * E_k,t / Y_t  over partners
// k != j, with weights renormalised over those partners.

#include "gravimetric/datamodel.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gravimetric {

struct Expenditures {
  int year = 0;
  std::map<std::string, double> by_country;  // E_k: imports of k from all reporters
  double world_total = 0;                    // Y: sum of every flow in the year
};

/// Throws EmptyYear when no record carries `year`.
Expenditures expenditures(std::span<const BilateralTradeRecord> bilateral, int year);

/// Symmetric country-pair distances in km.
class DistanceTable {
public:
  /// Adds (a, b) and its mirror. Throws AsymmetricDistance if a different
  /// value is already stored for the pair, InvalidArgument for d <= 0.
  void add(const std::string& a, const std::string& b, double km);
  std::optional<double> get(const std::string& a, const std::string& b) const;
  std::size_t size() const noexcept { return km_.size() / 2; }
  /// Canonical (a < b) rows.
  std::vector<std::tuple<std::string, std::string, double>> rows() const;

private:
  std::map<std::pair<std::string, std::string>, double> km_;
};

/// Static table plus optional per-year overrides.
struct DistanceSource {
  DistanceTable static_table;
  std::map<int, DistanceTable> per_year;

  const DistanceTable& for_year(int year) const;
};

struct RemotenessIndex {
  std::string country;
  int year = 0;
  double r = 0;
};

/// Throws MissingDistance(k) if a positive-expenditure partner has no
/// distance, InsufficientData if no partner other than `country` spends.
RemotenessIndex remoteness_of(const std::string& country, int year, const DistanceTable& distances,
                              const Expenditures& exp);

std::vector<RemotenessIndex> exporter_remoteness_series(const std::string& exporter, std::span<const int> years,
                                                        std::span<const BilateralTradeRecord> bilateral,
                                                        const DistanceSource& distances);

/// distances.csv: country_a,country_b,distance_km
DistanceTable read_distances(const std::filesystem::path& path);
void write_distances(const std::filesystem::path& path, const DistanceTable& table);
/// remoteness.csv: country,year,r
void write_remoteness(const std::filesystem::path& path, std::span<const RemotenessIndex> series);
std::vector<RemotenessIndex> read_remoteness(const std::filesystem::path& path);

}  // namespace gravimetric
