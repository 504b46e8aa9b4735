#include "gravimetric/remoteness.hpp"

#include "csv.hpp"
#include "gravimetric/error.hpp"

#include <array>

namespace gravimetric {

Expenditures expenditures(std::span<const BilateralTradeRecord> bilateral, int year) {
  Expenditures e;
  e.year = year;
  bool any = false;
  for (const auto& b : bilateral) {
    if (b.year != year) continue;
    any = true;
    e.by_country[b.reporter];  // reporters with no imports still appear with E = 0
    e.by_country[b.partner] += b.flow_value;
  }
  if (!any) throw Error(ErrorCode::EmptyYear, "no bilateral records for year " + std::to_string(year));
  // Summing the per-country totals keeps sum_k E_k == Y exact.
  for (const auto& [k, v] : e.by_country) e.world_total += v;
  return e;
}

void DistanceTable::add(const std::string& a, const std::string& b, double km) {
  if (a == b) throw Error(ErrorCode::InvalidArgument, "self distance for " + a);
  if (!(km > 0)) throw Error(ErrorCode::InvalidArgument, "distance " + a + "-" + b + " must be > 0");
  for (const auto& key : {std::pair{a, b}, std::pair{b, a}}) {
    auto [it, inserted] = km_.emplace(key, km);
    if (!inserted && it->second != km)
      throw Error(ErrorCode::AsymmetricDistance, "conflicting distances for " + a + "-" + b);
  }
}

std::optional<double> DistanceTable::get(const std::string& a, const std::string& b) const {
  auto it = km_.find({a, b});
  if (it == km_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::tuple<std::string, std::string, double>> DistanceTable::rows() const {
  std::vector<std::tuple<std::string, std::string, double>> out;
  for (const auto& [k, v] : km_)
    if (k.first < k.second) out.emplace_back(k.first, k.second, v);
  return out;
}

const DistanceTable& DistanceSource::for_year(int year) const {
  auto it = per_year.find(year);
  return it == per_year.end() ? static_table : it->second;
}

RemotenessIndex remoteness_of(const std::string& country, int year, const DistanceTable& distances,
                              const Expenditures& exp) {
  double weighted = 0, weight = 0;
  for (const auto& [k, e] : exp.by_country) {
    if (k == country || !(e > 0)) continue;
    auto d = distances.get(country, k);
    if (!d) throw Error(ErrorCode::MissingDistance, "no distance between " + country + " and " + k);
    weighted += *d * e;
    weight += e;
  }
  if (!(weight > 0))
    throw Error(ErrorCode::InsufficientData,
                "no partner of " + country + " has positive expenditure in " + std::to_string(year));
  return {country, year, weighted / weight};
}

std::vector<RemotenessIndex> exporter_remoteness_series(const std::string& exporter, std::span<const int> years,
                                                        std::span<const BilateralTradeRecord> bilateral,
                                                        const DistanceSource& distances) {
  std::vector<RemotenessIndex> out;
  out.reserve(years.size());
  for (int y : years) out.push_back(remoteness_of(exporter, y, distances.for_year(y), expenditures(bilateral, y)));
  return out;
}

namespace {
constexpr std::array<std::string_view, 3> kDistanceHeader = {"country_a", "country_b", "distance_km"};
constexpr std::array<std::string_view, 3> kRemotenessHeader = {"country", "year", "r"};
}  // namespace

DistanceTable read_distances(const std::filesystem::path& path) {
  auto t = csv::read(path, kDistanceHeader);
  DistanceTable table;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c : {0u, 1u})
      if (!is_country_code(t.rows[r][c]))
        throw Error(ErrorCode::BadCode, csv::cell(t, r, c).where() + ": not a country code");
    auto d = csv::cell(t, r, 2);
    try {
      table.add(t.rows[r][0], t.rows[r][1], d.as_double());
    } catch (const Error& e) {
      throw Error(e.code(), d.where() + ": " + e.what());
    }
  }
  return table;
}

void write_distances(const std::filesystem::path& path, const DistanceTable& table) {
  std::string s = "country_a,country_b,distance_km\n";
  for (const auto& [a, b, d] : table.rows()) s += a + ',' + b + ',' + csv::format_double(d) + '\n';
  csv::write_file(path, s);
}

void write_remoteness(const std::filesystem::path& path, std::span<const RemotenessIndex> series) {
  std::string s = "country,year,r\n";
  for (const auto& r : series) s += r.country + ',' + std::to_string(r.year) + ',' + csv::format_double(r.r) + '\n';
  csv::write_file(path, s);
}

std::vector<RemotenessIndex> read_remoteness(const std::filesystem::path& path) {
  auto t = csv::read(path, kRemotenessHeader);
  std::vector<RemotenessIndex> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    out.push_back({t.rows[r][0], csv::cell(t, r, 1).as_int(), csv::cell(t, r, 2).as_double()});
  return out;
}

}  // namespace gravimetric
