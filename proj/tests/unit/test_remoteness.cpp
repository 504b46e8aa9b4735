#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gravimetric/remoteness.hpp"
#include "gravimetric/synth.hpp"
#include "../support.hpp"

#include <algorithm>
#include <cmath>

using namespace gravimetric;
using support::thrown_code;

namespace {

// Exporter "X" and partners P0..Pn with the given imports from X and distances.
struct Instance {
  std::vector<BilateralTradeRecord> flows;
  DistanceTable dist;
};

Instance instance(const std::vector<double>& imports, const std::vector<double>& km, int year = 2000) {
  Instance in;
  for (std::size_t k = 0; k < imports.size(); ++k) {
    const std::string p = "P" + std::to_string(k);
    if (imports[k] > 0) in.flows.push_back({year, "X", p, imports[k]});
    in.dist.add("X", p, km[k]);
  }
  return in;
}

double r_of(const Instance& in, int year = 2000) {
  return remoteness_of("X", year, in.dist, expenditures(in.flows, year)).r;
}

}  // namespace

TEST_CASE("expenditures") {
  std::vector<BilateralTradeRecord> f{{2000, "A", "B", 10}, {2000, "B", "A", 30}};
  auto e = expenditures(f, 2000);
  CHECK(e.by_country.at("A") == 30);
  CHECK(e.by_country.at("B") == 10);
  CHECK(e.world_total == 40);

  std::vector<BilateralTradeRecord> g{{2000, "A", "B", 5}};
  auto e2 = expenditures(g, 2000);
  CHECK(e2.by_country.at("B") == 5);
  CHECK((e2.by_country.count("A") == 0 || e2.by_country.at("A") == 0));
  CHECK(e2.world_total == 5);

  CHECK(thrown_code([&] { expenditures(g, 2001); }) == ErrorCode::EmptyYear);
}

TEST_CASE("remoteness closed-form instances") {
  CHECK(std::abs(r_of(instance({1, 1}, {100, 300})) - 200.0) <= 1e-12);
  CHECK(std::abs(r_of(instance({7}, {432.5})) - 432.5) <= 1e-12);
  CHECK(std::abs(r_of(instance({1, 2, 3}, {10, 20, 30})) - 140.0 / 6.0) <= 1e-12);
}

TEST_CASE("self expenditure is excluded") {
  auto in = instance({1, 1}, {100, 300});
  in.flows.push_back({2000, "P0", "X", 50});
  // X's own spending must not enter; P0 and P1 still weigh 1 each.
  CHECK(std::abs(r_of(in) - 200.0) <= 1e-12);
}

TEST_CASE("missing distance for a spending partner") {
  auto in = instance({1, 1}, {100, 300});
  in.flows.push_back({2000, "X", "Q", 4});
  auto e = expenditures(in.flows, 2000);
  try {
    remoteness_of("X", 2000, in.dist, e);
    FAIL("expected MissingDistance");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::MissingDistance);
    CHECK(std::string(err.what()).find("Q") != std::string::npos);
  }
}

TEST_CASE("distance table symmetry") {
  DistanceTable t;
  t.add("A", "B", 10);
  CHECK(*t.get("B", "A") == 10);
  t.add("B", "A", 10);
  CHECK(t.size() == 1);
  CHECK(thrown_code([&] { t.add("B", "A", 11); }) == ErrorCode::AsymmetricDistance);
  CHECK(thrown_code([&] { t.add("A", "C", 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("random instances: scale invariance, bounds, monotonicity") {
  synth::CounterRng rng(2024, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 10);
    std::vector<double> imp(n), km(n);
    for (std::size_t k = 0; k < n; ++k) {
      imp[k] = rng.uniform(0.1, 1000.0);
      km[k] = rng.uniform(10.0, 20000.0);
    }
    const double r = r_of(instance(imp, km));
    const double c = rng.uniform(0.01, 1e4);
    std::vector<double> scaled(imp);
    for (double& v : scaled) v *= c;
    CHECK(std::abs(r_of(instance(scaled, km)) - r) <= 1e-10 * r);
    CHECK(r >= *std::min_element(km.begin(), km.end()) * (1 - 1e-12));
    CHECK(r <= *std::max_element(km.begin(), km.end()) * (1 + 1e-12));

    // Move half of the nearest partner's spending to the farthest one.
    const auto near = static_cast<std::size_t>(std::min_element(km.begin(), km.end()) - km.begin());
    const auto far = static_cast<std::size_t>(std::max_element(km.begin(), km.end()) - km.begin());
    if (near != far && km[far] > km[near]) {
      std::vector<double> shifted(imp);
      shifted[far] += shifted[near] / 2;
      shifted[near] /= 2;
      CHECK(r_of(instance(shifted, km)) > r);
    }
  }
}

TEST_CASE("series: constant and scaled years") {
  std::vector<BilateralTradeRecord> f;
  for (int y : {2000, 2001}) {
    const double scale = y == 2001 ? 2.0 : 1.0;
    f.push_back({y, "X", "A", 3 * scale});
    f.push_back({y, "X", "B", 1 * scale});
    f.push_back({y, "A", "B", 2 * scale});
  }
  DistanceSource src;
  src.static_table.add("X", "A", 100);
  src.static_table.add("X", "B", 500);
  src.static_table.add("A", "B", 50);
  std::vector<int> years{2000, 2001};
  auto s = exporter_remoteness_series("X", years, f, src);
  REQUIRE(s.size() == 2);
  CHECK(s[0].r == doctest::Approx(s[1].r).epsilon(1e-14));
  // E_A = 3, E_B = 3 -> mean of 100 and 500.
  CHECK(std::abs(s[0].r - 300.0) <= 1e-12);

  // A per-year override is honoured.
  src.per_year[2001].add("X", "A", 200);
  src.per_year[2001].add("X", "B", 500);
  auto t = exporter_remoteness_series("X", years, f, src);
  CHECK(std::abs(t[1].r - 350.0) <= 1e-12);
  CHECK(std::abs(t[0].r - 300.0) <= 1e-12);
}

TEST_CASE("synthetic 23-year panel") {
  synth::SynthConfig cfg;
  cfg.first_year = 1993;
  cfg.last_year = 2015;
  cfg.n_countries = 15;
  auto attrs = synth::generate_attributes(cfg);
  auto world = synth::generate_world(attrs, cfg);
  std::vector<int> years;
  for (int y = cfg.first_year; y <= cfg.last_year; ++y) years.push_back(y);
  DistanceSource src;
  src.static_table = world.distances;
  auto s = exporter_remoteness_series(cfg.exporter, years, world.bilateral, src);
  REQUIRE(s.size() == 23);
  for (const auto& ri : s) {
    CHECK(ri.r > 0);
    CHECK(ri.country == cfg.exporter);
  }
}

TEST_CASE("csv round trips") {
  auto dir = support::scratch("remoteness");
  DistanceTable t;
  t.add("AA", "BB", 12.5);
  t.add("CC", "AA", 7);
  write_distances(dir / "d.csv", t);
  auto back = read_distances(dir / "d.csv");
  CHECK(back.rows() == t.rows());
  std::vector<RemotenessIndex> s{{"IE", 2000, 123.456789012345}, {"IE", 2001, 99}};
  write_remoteness(dir / "r.csv", s);
  auto rs = read_remoteness(dir / "r.csv");
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].r == s[0].r);
  CHECK(rs[1].year == 2001);
  std::filesystem::remove_all(dir);
}
