#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gravimetric/scenario.hpp"
#include "gravimetric/synth.hpp"
#include "../support.hpp"

#include <cmath>
#include <set>

using namespace gravimetric;
using support::thrown_code;

namespace {

CountryYearAttributes flagged(std::string iso, int year, bool eu, bool gb = false, bool ni = false) {
  auto a = support::attrs(std::move(iso), year);
  a.flags.eu = eu;
  a.flags.gb = gb;
  a.flags.ni = ni;
  return a;
}

SectorMap food_map() {
  SectorMap m;
  m.add("01", Sector::Agriculture);
  m.add("22", Sector::FoodBeverage);
  return m;
}

TariffSchedule schedule(std::vector<TariffLine> lines) { return TariffSchedule(lines); }

Cents total(std::span<const TradeFlowRecord> flows) {
  Cents s = 0;
  for (const auto& f : flows) s += f.value;
  return s;
}

BaselineInputs synthetic_inputs(std::uint64_t seed, std::size_t countries, int years) {
  synth::SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_countries = countries;
  cfg.first_year = 2012;
  cfg.last_year = 2012 + years - 1;
  BaselineInputs in;
  in.attrs = synth::generate_attributes(cfg);
  in.flows = synth::generate_flows(in.attrs, cfg);
  in.sectors = synth::sector_map(cfg);
  auto lines = synth::generate_tariffs(cfg);
  in.tariffs = TariffSchedule(lines);
  return in;
}

ScenarioOptions ppml_options() {
  ScenarioOptions o;
  o.estimate.estimator = Estimator::PPML;
  o.estimate.spec = classical_spec();
  o.estimate.sectors = {Sector::AllSectors};
  return o;
}

}  // namespace

TEST_CASE("names round trip") {
  for (auto k : {ScenarioKind::Baseline, ScenarioKind::SoftBrexit, ScenarioKind::RegulatoryAlignment,
                 ScenarioKind::HardBrexit, ScenarioKind::LongTermHardBrexit})
    CHECK(parse_scenario(scenario_name(k)) == k);
  CHECK_FALSE(parse_scenario("brexit").has_value());
  CHECK(parse_incidence("divisive") == TariffIncidence::Divisive);
}

TEST_CASE("apply_soft flips only the eu flag of uk rows") {
  std::vector<CountryYearAttributes> a{flagged("GB", 2016, true, true), flagged("XI", 2016, true, false, true),
                                       flagged("FR", 2016, true)};
  auto r = apply_soft(a);
  CHECK(r.n_modified == 2);
  CHECK_FALSE(r.attrs[0].flags.eu);
  CHECK(r.attrs[0].flags.gb);
  CHECK_FALSE(r.attrs[1].flags.eu);
  CHECK(r.attrs[2] == a[2]);
  auto copy = r.attrs[0];
  copy.flags.eu = true;
  CHECK(copy == a[0]);

  std::vector<CountryYearAttributes> none{flagged("FR", 2016, true)};
  auto n = apply_soft(none);
  CHECK(n.n_modified == 0);
  CHECK(n.attrs == none);

  synth::SynthConfig cfg;
  auto full = synth::generate_attributes(cfg);
  CHECK(apply_soft(full).n_modified == 2u * static_cast<std::size_t>(cfg.last_year - cfg.first_year + 1));
}

TEST_CASE("tariffed_value") {
  CHECK(tariffed_value(1000, 0.10, TariffIncidence::Multiplicative) == 900);
  CHECK(tariffed_value(1000, 0.0, TariffIncidence::Multiplicative) == 1000);
  CHECK(tariffed_value(1100, 0.10, TariffIncidence::Divisive) == 1000);
  CHECK(tariffed_value(1000, 1.0, TariffIncidence::Multiplicative) == 0);
  CHECK(thrown_code([] { tariffed_value(1000, 1.01, TariffIncidence::Multiplicative); }) ==
        ErrorCode::RateAbove100Pct);
}

TEST_CASE("apply_tariffs: mixed three-row instance") {
  std::vector<TradeFlowRecord> f{support::flow(2016, "GB", "01011000", 1000),
                                 support::flow(2016, "GB", "22030000", 1000),
                                 support::flow(2016, "GB", "99999999", 1000),
                                 support::flow(2016, "FR", "22030000", 1000)};
  auto sched = schedule({{"010110", 0.0}, {"220300", 0.5}});
  auto r = apply_tariffs(f, sched, {"GB"});
  CHECK(r.flows[0].value == 1000);
  CHECK(r.flows[1].value == 500);
  CHECK(r.flows[2].value == 1000);
  CHECK(r.flows[3].value == 1000);
  CHECK(r.n_missing_rate == 1);
  CHECK(r.n_tariffed == 3);
}

TEST_CASE("apply_tariffs: zero schedule is the identity, higher rates never raise values") {
  auto in = synthetic_inputs(9, 20, 2);
  const auto targets = uk_destinations(in.attrs);
  CHECK(targets == std::set<std::string>{"GB", "NI"});
  std::vector<TariffLine> zero, lo, hi;
  synth::CounterRng rng(77, 0);
  std::set<std::string> hs6s;
  for (const auto& f : in.flows) hs6s.insert(f.hs6());
  for (const auto& h : hs6s) {
    zero.push_back({h, 0.0});
    const double a = rng.uniform(), b = rng.uniform();
    lo.push_back({h, std::min(a, b)});
    hi.push_back({h, std::max(a, b)});
  }
  auto id = apply_tariffs(in.flows, TariffSchedule(zero), targets);
  CHECK(id.flows == in.flows);
  TariffSchedule slo(lo), shi(hi);
  auto a = apply_tariffs(in.flows, slo, targets);
  auto b = apply_tariffs(in.flows, shi, targets);
  for (std::size_t i = 0; i < in.flows.size(); ++i) {
    CHECK(b.flows[i].value <= a.flows[i].value);
    CHECK(a.flows[i].value <= in.flows[i].value);
  }
}

TEST_CASE("apply_substitution: repricing, fallback and flagged paths") {
  std::vector<CountryYearAttributes> attrs{flagged("GB", 2016, true, true), flagged("FR", 2016, true),
                                           flagged("DE", 2016, true), flagged("US", 2016, false)};
  auto sched = schedule({{"220300", 0.2}});
  SUBCASE("reassigned at the candidate unit value") {
    std::vector<TradeFlowRecord> f{support::flow(2016, "GB", "22030000", 1000, 100.0),
                                   support::flow(2016, "FR", "22030000", 4000, 200.0)};
    auto r = apply_substitution(f, attrs, sched, {"GB"});
    CHECK(r.flows[0].destination == "FR");
    CHECK(r.flows[0].value == 2000);  // 100 units at FR's 20 cents/unit
    CHECK(r.log[0].disposition == Disposition::Reassigned);
    CHECK(r.log[0].new_dest == "FR");
    CHECK(r.log[1].disposition == Disposition::Kept);
  }
  SUBCASE("largest candidate wins, ties go to the first iso") {
    std::vector<TradeFlowRecord> f{support::flow(2016, "GB", "22030000", 1000, 10.0),
                                   support::flow(2016, "FR", "22030000", 500, 5.0),
                                   support::flow(2016, "DE", "22030000", 500, 5.0)};
    auto r = apply_substitution(f, attrs, sched, {"GB"});
    CHECK(r.flows[0].destination == "DE");
  }
  SUBCASE("no EU-27 match keeps the destination and tariffs") {
    std::vector<TradeFlowRecord> f{support::flow(2016, "GB", "22030000", 1000, 10.0),
                                   support::flow(2016, "US", "22030000", 500, 5.0),
                                   support::flow(2015, "FR", "22030000", 500, 5.0)};
    auto r = apply_substitution(f, attrs, sched, {"GB"});
    CHECK(r.flows[0].destination == "GB");
    CHECK(r.flows[0].value == 800);
    CHECK(r.log[0].disposition == Disposition::Tariffed);
  }
  SUBCASE("missing volumes reassign without repricing") {
    std::vector<TradeFlowRecord> f{support::flow(2016, "GB", "22030000", 1000),
                                   support::flow(2016, "FR", "22030000", 300)};
    auto r = apply_substitution(f, attrs, sched, {"GB"});
    CHECK(r.flows[0].destination == "FR");
    CHECK(r.flows[0].value == 1000);
    CHECK(r.log[0].disposition == Disposition::Flagged);
  }
}

TEST_CASE("apply_substitution: twin-goods bundle") {
  // Every UK-bound good has an EU twin at the same unit value.
  std::vector<CountryYearAttributes> attrs;
  std::vector<TradeFlowRecord> f;
  for (int y = 2014; y <= 2016; ++y) {
    attrs.push_back(flagged("GB", y, true, true));
    attrs.push_back(flagged("NI", y, true, false, true));
    attrs.push_back(flagged("FR", y, true));
    attrs.push_back(flagged("IT", y, true));
    attrs.push_back(flagged("US", y, false));
    for (int g = 0; g < 12; ++g) {
      char cn8[9];
      std::snprintf(cn8, sizeof cn8, "%02d%06d", g % 2 ? 22 : 1, g * 37 + y);
      const double price = 3.0 + g;
      const double units = 10.0 + g + y % 7;
      f.push_back(support::flow(y, "GB", cn8, std::llround(units * price * 100), units));
      f.push_back(support::flow(y, "NI", cn8, std::llround(units * price * 50), units / 2));
      f.push_back(support::flow(y, g % 3 ? "FR" : "IT", cn8, std::llround(units * price * 300), units * 3));
      f.push_back(support::flow(y, "US", cn8, std::llround(units * price * 70), units * 0.7));
    }
  }
  auto r = apply_substitution(f, attrs, TariffSchedule{}, uk_destinations(attrs));
  CHECK(r.flows.size() == f.size());
  REQUIRE(r.log.size() == f.size());
  std::size_t uk = 0, reassigned = 0, kept = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(r.log[i].old_dest == f[i].destination);
    CHECK(r.log[i].cn8 == f[i].cn8);
    if (r.flows[i].destination == "GB" || r.flows[i].destination == "NI") ++uk;
    if (r.log[i].disposition == Disposition::Reassigned) ++reassigned;
    if (r.log[i].disposition == Disposition::Kept) ++kept;
  }
  CHECK(uk == 0);
  CHECK(reassigned == 2 * 36);
  CHECK(kept == 2 * 36);
  CHECK(total(r.flows) == total(f));
}

TEST_CASE("impact arithmetic") {
  CHECK(std::abs(indicator_relative_impact(-0.850, -0.800) - -4.9) <= 0.1);
  CHECK(std::abs(indicator_relative_impact(-1.787, -1.721) - -6.4) <= 0.1);
  CHECK(indicator_relative_impact(0.3, 0.3) == 0.0);
  CHECK(std::abs(continuous_relative_impact(-0.146, -0.088) - 65.9) <= 0.1);
  CHECK(std::abs(continuous_relative_impact(0.380, 0.432) - -12.0) <= 0.1);
  CHECK(continuous_relative_impact(0.5, 0.5) == 0.0);
  CHECK(thrown_code([] { continuous_relative_impact(0.1, 0.0); }) == ErrorCode::ZeroBaseline);
  CHECK(worst_case_two_se(0, 0) == 0.0);
  CHECK(worst_case_two_se(-0.05, 0.1) == doctest::Approx(std::expm1(-0.25) * 100).epsilon(1e-14));
  CHECK(std::abs(worst_case_two_se(-0.05, 0.1) - -22.12) < 0.005);
  CHECK(std::abs(worst_case_two_se(-0.050, 0.0101) - -6.8) < 0.05);
  auto g = gni_adjustment(181.0, 115.5, 114.7);
  CHECK(std::abs(g.adjusted - 180.2) < 0.05);
  CHECK(std::abs(g.percent - -0.4) < 0.05);
  auto h = gni_adjustment(181.0, 115.5, 106.3);
  CHECK(std::abs(h.adjusted - 171.8) < 0.05);
  CHECK(std::abs(h.percent - -5.1) < 0.05);
  CHECK(thrown_code([] { gni_adjustment(0, 1, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("eu28 impact: 10% tariff on a 30% uk share is -3%") {
  BaselineInputs in;
  in.attrs = {flagged("GB", 2016, true, true), flagged("FR", 2016, true), flagged("US", 2016, false)};
  in.flows = {support::flow(2016, "GB", "22030000", 3'000'000), support::flow(2016, "FR", "22030000", 7'000'000),
              support::flow(2016, "US", "22030000", 5'000'000)};
  in.sectors = food_map();
  in.tariffs = schedule({{"220300", 0.10}});
  ScenarioOptions o;
  o.refit = false;
  auto soft = run_scenario(ScenarioKind::SoftBrexit, in, o);
  auto hard = run_scenario(ScenarioKind::HardBrexit, in, o);
  CHECK(soft.totals.at(Sector::AllSectors).at(DestinationGroup::EU28) == 10'000'000);
  CHECK(hard.totals.at(Sector::AllSectors).at(DestinationGroup::World) == 14'700'000);
  auto rep = build_impact_report(hard, soft);
  auto v = rep.value(Sector::AllSectors, "eu28_value_impact_pct");
  REQUIRE(v.has_value());
  CHECK(std::abs(*v - -3.0) <= 0.01);
  CHECK(std::abs(*rep.value(Sector::FoodBeverage, "eu28_value_impact_pct") - -3.0) <= 0.01);
  // Sectors without any EU-28 value cannot be scored.
  CHECK(thrown_code([&] { eu28_impact(hard, soft); }) == ErrorCode::ZeroBaseValue);

  auto self = build_impact_report(soft, soft);
  CHECK(*self.value(Sector::AllSectors, "eu28_value_impact_pct") == 0.0);
}

TEST_CASE("regulatory alignment tariffs GB only") {
  BaselineInputs in;
  in.attrs = {flagged("GB", 2016, true, true), flagged("NI", 2016, true, false, true), flagged("FR", 2016, true)};
  in.flows = {support::flow(2016, "GB", "22030000", 1000), support::flow(2016, "NI", "22030000", 1000)};
  in.sectors = food_map();
  in.tariffs = schedule({{"220300", 0.10}});
  ScenarioOptions o;
  o.refit = false;
  auto ra = run_scenario(ScenarioKind::RegulatoryAlignment, in, o);
  CHECK(ra.flows[0].value == 900);
  CHECK(ra.flows[1].value == 1000);
  auto hard = run_scenario(ScenarioKind::HardBrexit, in, o);
  CHECK(hard.flows[1].value == 900);
  CHECK(hard.substitution_log.size() == in.flows.size());
}

TEST_CASE("soft re-estimation is a reparametrization of the baseline") {
  auto in = synthetic_inputs(21, 50, 5);
  auto o = ppml_options();
  auto base = run_scenario(ScenarioKind::Baseline, in, o);
  auto soft = run_scenario(ScenarioKind::SoftBrexit, in, o);
  const auto& fb = *base.fit_for(Sector::AllSectors)->fit;
  const auto& fs = *soft.fit_for(Sector::AllSectors)->fit;
  const double scale = fb.fitted.cwiseAbs().maxCoeff();
  CHECK((fs.fitted - fb.fitted).cwiseAbs().maxCoeff() <= 1e-8 * scale);
  CHECK(std::abs(fs.loglik - fb.loglik) <= 1e-8 * std::abs(fb.loglik));
  const double beu = fb.coefficient("eu");
  CHECK(std::abs(fs.coefficient("gb") - fb.coefficient("gb") - beu) <= 1e-6);
  CHECK(std::abs(fs.coefficient("ni") - fb.coefficient("ni") - beu) <= 1e-6);
}

TEST_CASE("hard with a zero schedule matches soft") {
  auto in = synthetic_inputs(22, 30, 3);
  std::vector<TariffLine> zero;
  std::set<std::string> hs6s;
  for (const auto& f : in.flows) hs6s.insert(f.hs6());
  for (const auto& h : hs6s) zero.push_back({h, 0.0});
  in.tariffs = TariffSchedule(zero);
  auto o = ppml_options();
  auto soft = run_scenario(ScenarioKind::SoftBrexit, in, o);
  auto hard = run_scenario(ScenarioKind::HardBrexit, in, o);
  CHECK(hard.flows == soft.flows);
  const auto& a = *soft.fit_for(Sector::AllSectors)->fit;
  const auto& b = *hard.fit_for(Sector::AllSectors)->fit;
  CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() <= 1e-8);
  auto rep = build_impact_report(hard, soft);
  CHECK(*rep.value(Sector::AllSectors, "eu28_value_impact_pct") == 0.0);
  CHECK(std::abs(*rep.value(Sector::AllSectors, "gb_relative_impact_pct")) <= 1e-6);
}

TEST_CASE("gni block in the impact report") {
  BaselineInputs in;
  in.attrs = {flagged("GB", 2016, true, true), flagged("FR", 2016, true)};
  in.flows = {support::flow(2016, "GB", "22030000", 1000), support::flow(2016, "FR", "22030000", 1000)};
  in.sectors = food_map();
  in.tariffs = schedule({{"220300", 0.10}});
  ScenarioOptions o;
  o.refit = false;
  auto soft = run_scenario(ScenarioKind::SoftBrexit, in, o);
  auto hard = run_scenario(ScenarioKind::HardBrexit, in, o);
  GniInputs g{181.0, 115.5, 114.7};
  auto rep = build_impact_report(hard, soft, nullptr, g);
  REQUIRE(rep.gni.has_value());
  CHECK(std::abs(rep.gni->result.adjusted - 180.2) < 0.05);
}
