#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gravimetric/error.hpp"
#include "gravimetric/ingest.hpp"
#include "../support.hpp"

using namespace gravimetric;

namespace {

const std::string kFlowsHeader = "year,destination,cn8,value_eur,volume\n";
const std::string kAttrsHeader =
    "iso,year,gdp,population,area_km2,distance_km,religion_share,gb,ni,gatt_wto,english,eu,euro,legal\n";

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("flows: one row, negative value, empty file") {
  auto dir = support::scratch("ingest_flows");
  auto one = support::put(dir / "one.csv", kFlowsHeader + "2016,FR,01012100,1000,50\n");
  auto rows = read_trade_flows(one);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].year == 2016);
  CHECK(rows[0].destination == "FR");
  CHECK(rows[0].value == 100000);
  CHECK(rows[0].volume == 50.0);

  auto neg = support::put(dir / "neg.csv", kFlowsHeader + "2016,FR,01012100,-5,\n");
  CHECK(code_of([&] { read_trade_flows(neg); }) == ErrorCode::NegativeValue);

  auto empty = support::put(dir / "empty.csv", kFlowsHeader);
  CHECK(read_trade_flows(empty).empty());
}

TEST_CASE("flows: schema and code errors name the place") {
  auto dir = support::scratch("ingest_flows_bad");
  auto wrong = support::put(dir / "wrong.csv", "year,dest,cn8,value,volume\n");
  CHECK(code_of([&] { read_trade_flows(wrong); }) == ErrorCode::SchemaMismatch);

  auto badcode = support::put(dir / "badcode.csv", kFlowsHeader + "2016,FR,0101,10,\n2016,FR,0101210x,10,\n");
  CHECK(code_of([&] { read_trade_flows(badcode); }) == ErrorCode::BadCode);
  const auto msg = message_of([&] { read_trade_flows(badcode); });
  CHECK(msg.find("row 2") != std::string::npos);  // file line, header is line 1
  CHECK(msg.find("cn8") != std::string::npos);

  auto badnum = support::put(dir / "badnum.csv", kFlowsHeader + "2016,FR,01012100,10,\n2016,FR,01012100,abc,\n");
  const auto msg2 = message_of([&] { read_trade_flows(badnum); });
  CHECK(msg2.find("row 3") != std::string::npos);
  CHECK(msg2.find("value_eur") != std::string::npos);

  CHECK(code_of([&] { read_trade_flows(dir / "missing.csv"); }) == ErrorCode::Io);
  CHECK(message_of([&] { read_trade_flows(dir / "missing.csv"); }).find("missing.csv") != std::string::npos);
}

TEST_CASE("attributes: flags parse, bad covariates and flag conflicts fail") {
  auto dir = support::scratch("ingest_attrs");
  auto ok = support::put(dir / "ok.csv", kAttrsHeader + "FR,2016,2.4e12,6.7e7,551695,870,0.6,0,0,1,0,1,1,0\n");
  auto rows = read_attributes(ok);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].flags.gatt_wto);
  CHECK(rows[0].flags.eu);
  CHECK(rows[0].flags.euro);
  CHECK_FALSE(rows[0].flags.gb);
  CHECK_FALSE(rows[0].flags.english);
  CHECK(rows[0].distance_km == 870);

  auto zero = support::put(dir / "zero.csv", kAttrsHeader + "FR,2016,0,6.7e7,551695,870,0.6,0,0,1,0,1,1,0\n");
  CHECK(code_of([&] { read_attributes(zero); }) == ErrorCode::NonPositiveCovariate);

  auto both = support::put(dir / "both.csv", kAttrsHeader + "GB,2016,2e12,6e7,2e5,400,0.6,1,1,1,1,1,0,1\n");
  CHECK(code_of([&] { read_attributes(both); }) == ErrorCode::FlagConflict);

  auto share = support::put(dir / "share.csv", kAttrsHeader + "FR,2016,2e12,6e7,2e5,400,1.5,0,0,1,1,1,0,1\n");
  CHECK(code_of([&] { read_attributes(share); }) == ErrorCode::OutOfRange);

  auto flag = support::put(dir / "flag.csv", kAttrsHeader + "FR,2016,2e12,6e7,2e5,400,0.5,0,0,2,1,1,0,1\n");
  CHECK_THROWS_AS(read_attributes(flag), Error);
}

TEST_CASE("bilateral, tariff and sector tables") {
  auto dir = support::scratch("ingest_other");
  auto bil = support::put(dir / "b.csv", "year,reporter,partner,flow_value\n2016,FR,DE,10.5\n");
  auto b = read_bilateral(bil);
  REQUIRE(b.size() == 1);
  CHECK(b[0].flow_value == 10.5);
  auto self = support::put(dir / "self.csv", "year,reporter,partner,flow_value\n2016,FR,FR,1\n");
  CHECK_THROWS_AS(read_bilateral(self), Error);
  auto negb = support::put(dir / "negb.csv", "year,reporter,partner,flow_value\n2016,FR,DE,-1\n");
  CHECK(code_of([&] { read_bilateral(negb); }) == ErrorCode::NegativeValue);

  auto tar = support::put(dir / "t.csv", "hs6,advalorem_rate\n010121,0.1\n020110,0.8\n");
  auto t = read_tariffs(tar);
  REQUIRE(t.size() == 2);
  CHECK(t[1].rate == 0.8);
  auto badt = support::put(dir / "badt.csv", "hs6,advalorem_rate\n01012,0.1\n");
  CHECK(code_of([&] { read_tariffs(badt); }) == ErrorCode::BadCode);
  auto negt = support::put(dir / "negt.csv", "hs6,advalorem_rate\n010121,-0.1\n");
  CHECK_THROWS_AS(read_tariffs(negt), Error);

  auto sec = support::put(dir / "s.csv", "cn_prefix,sector_label\n01,Agriculture/Forestry/Fishing\n3004,chemicals_pharma\n");
  auto m = read_sector_map(sec);
  CHECK(m.sector_of("01012100") == Sector::Agriculture);
  CHECK(m.sector_of("30049000") == Sector::ChemicalsPharma);
}

TEST_CASE("writers round-trip") {
  auto dir = support::scratch("ingest_roundtrip");
  std::vector<TradeFlowRecord> flows{support::flow(2016, "FR", "01012100", 100050, 12.25),
                                     support::flow(2017, "GB", "30049000", 0)};
  write_trade_flows(dir / "f.csv", flows);
  CHECK(read_trade_flows(dir / "f.csv") == flows);

  auto a = support::attrs("FR", 2016, 2.4e12 / 3, 870.125);
  a.religion_share = 1.0 / 3;
  a.flags.eu = true;
  std::vector<CountryYearAttributes> attrs{a};
  write_attributes(dir / "a.csv", attrs);
  CHECK(read_attributes(dir / "a.csv") == attrs);

  std::vector<BilateralTradeRecord> bil{{2016, "FR", "DE", 1.0 / 7}};
  write_bilateral(dir / "b.csv", bil);
  CHECK(read_bilateral(dir / "b.csv") == bil);

  std::vector<TariffLine> tar{{"010121", 0.125}};
  write_tariffs(dir / "t.csv", tar);
  CHECK(read_tariffs(dir / "t.csv") == tar);

  SectorMap m;
  m.add("01", Sector::Agriculture);
  m.add("3004", Sector::ChemicalsPharma);
  write_sector_map(dir / "s.csv", m);
  CHECK(read_sector_map(dir / "s.csv").rules() == m.rules());
}

TEST_CASE("aggregation sums exactly and keeps zero cells") {
  std::vector<TradeFlowRecord> flows{support::flow(2016, "FR", "01011000", 10000),
                                     support::flow(2016, "FR", "02011000", 20000)};
  auto agg = aggregate(flows, AggregationLevel::YearCountry);
  REQUIRE(agg.cells.size() == 1);
  CHECK(agg.cells[0].value == 30000);
  CHECK(aggregate(flows, AggregationLevel::YearCountryCn8).cells.size() == 2);
  CHECK(aggregate({}, AggregationLevel::YearCountry).cells.empty());

  flows.push_back(support::flow(2016, "DE", "01011000", 0));
  flows.push_back(support::flow(2016, "FR", "01011000", 5));
  auto agg2 = aggregate(flows, AggregationLevel::YearCountryCn8);
  CHECK(agg2.n_duplicate_keys == 1);
  Cents total = 0;
  bool zero_cell = false;
  for (const auto& c : agg2.cells) {
    total += c.value;
    zero_cell |= c.destination == "DE" && c.value == 0;
  }
  CHECK(total == 30005);
  CHECK(zero_cell);

  SectorMap m;
  m.add("01", Sector::Agriculture);
  m.add("02", Sector::FoodBeverage);
  auto by_sector = aggregate(flows, AggregationLevel::YearCountrySector, &m);
  CHECK(by_sector.cells.size() == 3);
  auto agri = aggregate_sector(flows, Sector::Agriculture, m);
  Cents agri_total = 0;
  for (const auto& c : agri.cells) agri_total += c.value;
  CHECK(agri_total == 10005);
}

TEST_CASE("merge is an inner join with counted drops") {
  std::vector<TradeFlowRecord> flows{support::flow(2016, "FR", "01011000", 100),
                                     support::flow(2016, "DE", "01011000", 200),
                                     support::flow(2016, "IT", "01011000", 300)};
  std::vector<CountryYearAttributes> attrs{support::attrs("FR", 2016), support::attrs("DE", 2016)};
  auto merged = merge(aggregate(flows, AggregationLevel::YearCountry), attrs);
  CHECK(merged.observations.size() == 2);
  CHECK(merged.report.n_matched == 2);
  CHECK(merged.report.n_dropped_no_attrs == 1);
  CHECK(merged.report.n_matched + merged.report.n_dropped_no_attrs == merged.report.n_cells);
  CHECK(merged.observations[0].destination == "DE");
  for (const auto& o : merged.observations) CHECK(o.attrs.iso == o.destination);

  attrs.push_back(support::attrs("FR", 2016));
  CHECK(code_of([&] { merge(aggregate(flows, AggregationLevel::YearCountry), attrs); }) ==
        ErrorCode::DuplicateAttributeKey);
}

TEST_CASE("merge clamps zero religion shares and attaches remoteness") {
  std::vector<TradeFlowRecord> flows{support::flow(2016, "FR", "01011000", 100)};
  auto a = support::attrs("FR", 2016);
  a.religion_share = 0;
  std::vector<CountryYearAttributes> attrs{a};
  RemotenessByYear r{{2016, 1234.5}};
  auto merged = merge(aggregate(flows, AggregationLevel::YearCountry), attrs, &r);
  CHECK(merged.report.n_clamped == 1);
  CHECK(merged.observations[0].attrs.religion_share == 1e-4);
  CHECK(merged.observations[0].remoteness == 1234.5);
}

TEST_CASE("merge keeps every cell of a full synthetic match") {
  // 4061 cells over 31 years x 131 countries
  std::vector<TradeFlowRecord> flows;
  std::vector<CountryYearAttributes> attrs;
  int n = 0;
  for (int y = 1993; y < 2024 && n < 4061; ++y)
    for (int c = 0; c < 131 && n < 4061; ++c, ++n) {
      std::string iso{static_cast<char>('A' + c / 26), static_cast<char>('A' + c % 26), 'X'};
      flows.push_back(support::flow(y, iso, "01011000", 100 + n));
      attrs.push_back(support::attrs(iso, y));
    }
  auto merged = merge(aggregate(flows, AggregationLevel::YearCountry), attrs);
  CHECK(merged.observations.size() == 4061);
  CHECK(merged.report.n_dropped_no_attrs == 0);
}
