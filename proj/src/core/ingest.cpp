#include "gravimetric/ingest.hpp"

#include "csv.hpp"
#include "gravimetric/error.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <tuple>

namespace gravimetric {

namespace {

constexpr std::array<std::string_view, 5> kFlowHeader = {"year", "destination", "cn8", "value_eur", "volume"};
constexpr std::array<std::string_view, 14> kAttrHeader = {
    "iso", "year", "gdp", "population", "area_km2", "distance_km", "religion_share",
    "gb",  "ni",   "gatt_wto", "english", "eu", "euro", "legal"};
constexpr std::array<std::string_view, 4> kBilateralHeader = {"year", "reporter", "partner", "flow_value"};
constexpr std::array<std::string_view, 2> kTariffHeader = {"hs6", "advalorem_rate"};
constexpr std::array<std::string_view, 2> kSectorHeader = {"cn_prefix", "sector_label"};

std::string country(const csv::Cell& c) {
  if (!is_country_code(c.text()))
    throw Error(ErrorCode::BadCode, c.where() + ": not a 2-3 letter country code: '" + c.text() + "'");
  return c.text();
}

double positive(const csv::Cell& c) {
  double v = c.as_double();
  if (!(v > 0)) throw Error(ErrorCode::NonPositiveCovariate, c.where() + ": must be > 0, got " + c.text());
  return v;
}

std::string header_line(std::span<const std::string_view> h) {
  std::string out;
  for (auto s : h) out += (out.empty() ? "" : ",") + std::string(s);
  return out + "\n";
}

std::string opt_double(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); }

}  // namespace

std::vector<TradeFlowRecord> read_trade_flows(const std::filesystem::path& path) {
  auto t = csv::read(path, kFlowHeader);
  std::vector<TradeFlowRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    TradeFlowRecord rec;
    rec.year = csv::cell(t, r, 0).as_int();
    rec.destination = country(csv::cell(t, r, 1));
    auto code = csv::cell(t, r, 2);
    if (!is_cn8(code.text())) throw Error(ErrorCode::BadCode, code.where() + ": not an 8-digit CN code: '" + code.text() + "'");
    rec.cn8 = code.text();
    auto value = csv::cell(t, r, 3);
    try {
      rec.value = parse_cents(value.text());
    } catch (const Error& e) {
      throw Error(e.code(), value.where() + ": " + value.text());
    }
    auto vol = csv::cell(t, r, 4);
    if (!vol.text().empty()) {
      double v = vol.as_double();
      if (v < 0) throw Error(ErrorCode::NegativeValue, vol.where() + ": " + vol.text());
      rec.volume = v;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<CountryYearAttributes> read_attributes(const std::filesystem::path& path) {
  auto t = csv::read(path, kAttrHeader);
  std::vector<CountryYearAttributes> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    CountryYearAttributes a;
    a.iso = country(csv::cell(t, r, 0));
    a.year = csv::cell(t, r, 1).as_int();
    a.gdp = positive(csv::cell(t, r, 2));
    a.population = positive(csv::cell(t, r, 3));
    a.area_km2 = positive(csv::cell(t, r, 4));
    a.distance_km = positive(csv::cell(t, r, 5));
    auto rel = csv::cell(t, r, 6);
    a.religion_share = rel.as_double();
    if (a.religion_share < 0 || a.religion_share > 1)
      throw Error(ErrorCode::OutOfRange, rel.where() + ": share must lie in [0, 1], got " + rel.text());
    for (std::size_t k = 0; k < kAllIndicators.size(); ++k)
      a.flags.set(kAllIndicators[k], csv::cell(t, r, 7 + k).as_flag());
    if (a.flags.gb && a.flags.ni)
      throw Error(ErrorCode::FlagConflict, t.path + ": row " + std::to_string(t.lines[r]) + ": gb and ni both set");
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<BilateralTradeRecord> read_bilateral(const std::filesystem::path& path) {
  auto t = csv::read(path, kBilateralHeader);
  std::vector<BilateralTradeRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    BilateralTradeRecord b;
    b.year = csv::cell(t, r, 0).as_int();
    b.reporter = country(csv::cell(t, r, 1));
    b.partner = country(csv::cell(t, r, 2));
    if (b.reporter == b.partner)
      throw Error(ErrorCode::BadCode, csv::cell(t, r, 2).where() + ": reporter equals partner");
    auto v = csv::cell(t, r, 3);
    b.flow_value = v.as_double();
    if (b.flow_value < 0) throw Error(ErrorCode::NegativeValue, v.where() + ": " + v.text());
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<TariffLine> read_tariffs(const std::filesystem::path& path) {
  auto t = csv::read(path, kTariffHeader);
  std::vector<TariffLine> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto code = csv::cell(t, r, 0);
    if (!is_hs6(code.text())) throw Error(ErrorCode::BadCode, code.where() + ": not a 6-digit HS code: '" + code.text() + "'");
    auto rate = csv::cell(t, r, 1);
    double v = rate.as_double();
    if (v < 0) throw Error(ErrorCode::NegativeValue, rate.where() + ": " + rate.text());
    out.push_back({code.text(), v});
  }
  return out;
}

SectorMap read_sector_map(const std::filesystem::path& path) {
  auto t = csv::read(path, kSectorHeader);
  SectorMap map;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto label = csv::cell(t, r, 1);
    auto sector = parse_sector(label.text());
    if (!sector || *sector == Sector::AllSectors)
      throw Error(ErrorCode::SchemaMismatch, label.where() + ": unknown sector '" + label.text() + "'");
    try {
      map.add(csv::cell(t, r, 0).text(), *sector);
    } catch (const Error& e) {
      throw Error(e.code(), csv::cell(t, r, 0).where() + ": " + e.what());
    }
  }
  return map;
}

void write_trade_flows(const std::filesystem::path& path, std::span<const TradeFlowRecord> flows) {
  std::string s = header_line(kFlowHeader);
  for (const auto& f : flows)
    s += std::to_string(f.year) + ',' + f.destination + ',' + f.cn8 + ',' + format_cents(f.value) + ',' +
         opt_double(f.volume) + '\n';
  csv::write_file(path, s);
}

void write_attributes(const std::filesystem::path& path, std::span<const CountryYearAttributes> attrs) {
  std::string s = header_line(kAttrHeader);
  for (const auto& a : attrs) {
    s += a.iso + ',' + std::to_string(a.year) + ',' + csv::format_double(a.gdp) + ',' +
         csv::format_double(a.population) + ',' + csv::format_double(a.area_km2) + ',' +
         csv::format_double(a.distance_km) + ',' + csv::format_double(a.religion_share);
    for (Indicator ind : kAllIndicators) s += a.flags.get(ind) ? ",1" : ",0";
    s += '\n';
  }
  csv::write_file(path, s);
}

void write_bilateral(const std::filesystem::path& path, std::span<const BilateralTradeRecord> rows) {
  std::string s = header_line(kBilateralHeader);
  for (const auto& b : rows)
    s += std::to_string(b.year) + ',' + b.reporter + ',' + b.partner + ',' + csv::format_double(b.flow_value) + '\n';
  csv::write_file(path, s);
}

void write_tariffs(const std::filesystem::path& path, std::span<const TariffLine> rows) {
  std::string s = header_line(kTariffHeader);
  for (const auto& t : rows) s += t.hs6 + ',' + csv::format_double(t.rate) + '\n';
  csv::write_file(path, s);
}

void write_sector_map(const std::filesystem::path& path, const SectorMap& map) {
  std::string s = header_line(kSectorHeader);
  for (const auto& [prefix, sector] : map.rules()) s += prefix + ',' + std::string(sector_slug(sector)) + '\n';
  csv::write_file(path, s);
}

Aggregation aggregate(std::span<const TradeFlowRecord> flows, AggregationLevel level, const SectorMap* map) {
  if (level == AggregationLevel::YearCountrySector && map == nullptr)
    throw Error(ErrorCode::InvalidArgument, "sector aggregation needs a sector map");
  using Key = std::tuple<int, std::string, std::string>;
  std::map<Key, FlowCell> cells;
  std::set<Key> seen_cn8;
  Aggregation agg;
  agg.level = level;
  agg.n_records = flows.size();
  for (const auto& f : flows) {
    if (!seen_cn8.emplace(f.year, f.destination, f.cn8).second) ++agg.n_duplicate_keys;
    std::string key;
    if (level == AggregationLevel::YearCountryCn8) key = f.cn8;
    else if (level == AggregationLevel::YearCountrySector) key = std::string(sector_slug(map->sector_of(f.cn8)));
    auto& cell = cells[Key{f.year, f.destination, key}];
    if (cell.n_records == 0) {
      cell.year = f.year;
      cell.destination = f.destination;
      cell.key = key;
    }
    cell.value += f.value;
    ++cell.n_records;
  }
  agg.cells.reserve(cells.size());
  for (auto& [k, c] : cells) agg.cells.push_back(std::move(c));
  return agg;
}

Aggregation aggregate_sector(std::span<const TradeFlowRecord> flows, Sector sector, const SectorMap& map) {
  if (sector == Sector::AllSectors) return aggregate(flows, AggregationLevel::YearCountry);
  std::vector<TradeFlowRecord> subset;
  for (const auto& f : flows)
    if (map.sector_of(f.cn8) == sector) subset.push_back(f);
  auto agg = aggregate(subset, AggregationLevel::YearCountry);
  for (auto& c : agg.cells) c.key = std::string(sector_slug(sector));
  return agg;
}

MergedDataset merge(const Aggregation& flows, std::span<const CountryYearAttributes> attrs,
                    const RemotenessByYear* remoteness, const MergeOptions& options) {
  if (!(options.religion_floor > 0) || options.religion_floor > 1)
    throw Error(ErrorCode::InvalidArgument, "religion floor must lie in (0, 1]");
  std::map<std::pair<int, std::string>, const CountryYearAttributes*> index;
  for (const auto& a : attrs) {
    if (!index.emplace(std::pair{a.year, a.iso}, &a).second)
      throw Error(ErrorCode::DuplicateAttributeKey,
                  "duplicate attributes for " + a.iso + " " + std::to_string(a.year));
  }
  MergedDataset out;
  out.report.n_flows_read = flows.n_records;
  out.report.n_attrs_read = attrs.size();
  out.report.n_cells = flows.cells.size();
  out.report.duplicate_keys = flows.n_duplicate_keys;
  std::vector<const FlowCell*> order;
  order.reserve(flows.cells.size());
  for (const auto& c : flows.cells) order.push_back(&c);
  std::stable_sort(order.begin(), order.end(), [](const FlowCell* a, const FlowCell* b) {
    return std::tie(a->year, a->destination, a->key) < std::tie(b->year, b->destination, b->key);
  });
  for (const FlowCell* c : order) {
    auto it = index.find({c->year, c->destination});
    if (it == index.end()) {
      ++out.report.n_dropped_no_attrs;
      continue;
    }
    GravityObservation obs;
    obs.year = c->year;
    obs.destination = c->destination;
    obs.key = c->key;
    obs.value = c->value;
    obs.attrs = *it->second;
    if (obs.attrs.religion_share == 0.0) {
      obs.attrs.religion_share = options.religion_floor;
      ++out.report.n_clamped;
    }
    if (remoteness) {
      if (auto r = remoteness->find(c->year); r != remoteness->end()) obs.remoteness = r->second;
    }
    out.observations.push_back(std::move(obs));
    ++out.report.n_matched;
  }
  return out;
}

}  // namespace gravimetric
