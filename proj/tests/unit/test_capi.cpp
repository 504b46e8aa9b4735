// Links the shared library only, through the C header.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gravimetric/gravimetric.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("gm_capi_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  gm_string_free(s);
  return out;
}

gm_bundle* load_bundle(const fs::path& dir) {
  gm_bundle* b = nullptr;
  REQUIRE(gm_bundle_new(&b) == GM_OK);
  REQUIRE(gm_bundle_load_flows(b, (dir / "flows.csv").c_str()) == GM_OK);
  REQUIRE(gm_bundle_load_attrs(b, (dir / "attrs.csv").c_str()) == GM_OK);
  REQUIRE(gm_bundle_load_tariffs(b, (dir / "tariffs.csv").c_str()) == GM_OK);
  REQUIRE(gm_bundle_load_sectors(b, (dir / "sectors.csv").c_str()) == GM_OK);
  REQUIRE(gm_bundle_load_bilateral(b, (dir / "bilateral.csv").c_str()) == GM_OK);
  REQUIRE(gm_bundle_load_distances(b, (dir / "distances.csv").c_str()) == GM_OK);
  return b;
}

fs::path synth_bundle(const std::string& name) {
  auto dir = scratch(name);
  gm_synth_options o;
  gm_synth_options_init(&o);
  o.n_countries = 20;
  o.seed = 4;
  REQUIRE(gm_synth_write_bundle(&o, dir.c_str()) == GM_OK);
  return dir;
}

}  // namespace

TEST_CASE("version and rng strings") {
  CHECK(std::string(gm_version()).size() > 0);
  CHECK(std::string(gm_rng_algorithm()) == "splitmix64-ctr/v1");
}

TEST_CASE("formula helpers") {
  double v = 0, p = 0;
  REQUIRE(gm_percent_effect(0.64, &v) == GM_OK);
  CHECK(std::abs(v - 90) <= 1);
  REQUIRE(gm_indicator_relative_impact(-0.850, -0.800, &v) == GM_OK);
  CHECK(std::abs(v - -4.9) <= 0.1);
  REQUIRE(gm_continuous_relative_impact(0.380, 0.432, &v) == GM_OK);
  CHECK(std::abs(v - -12.0) <= 0.1);
  CHECK(gm_continuous_relative_impact(0.1, 0.0, &v) == GM_ERR_INPUT);
  CHECK(std::string(gm_last_error_kind()) == "ZeroBaseline");
  REQUIRE(gm_worst_case_two_se(-0.05, 0.1, &v) == GM_OK);
  CHECK(std::abs(v - -22.12) < 0.01);
  REQUIRE(gm_gni_adjustment(181.0, 115.5, 106.3, &v, &p) == GM_OK);
  CHECK(std::abs(v - 171.8) < 0.05);
  CHECK(std::abs(p - -5.1) < 0.05);
  CHECK(std::string(gm_last_error_kind()).empty());
  CHECK(gm_percent_effect(0.1, nullptr) == GM_ERR_INPUT);
}

TEST_CASE("load errors carry kinds and exit codes") {
  auto dir = scratch("errors");
  gm_bundle* b = nullptr;
  REQUIRE(gm_bundle_new(&b) == GM_OK);
  CHECK(gm_bundle_load_flows(b, (dir / "absent.csv").c_str()) == GM_ERR_INPUT);
  CHECK(std::string(gm_last_error_kind()) == "Io");
  {
    std::FILE* f = std::fopen((dir / "bad.csv").c_str(), "w");
    std::fputs("year,destination\n2016,FR\n", f);
    std::fclose(f);
  }
  CHECK(gm_bundle_load_flows(b, (dir / "bad.csv").c_str()) == GM_ERR_INPUT);
  CHECK(std::string(gm_last_error_kind()) == "SchemaMismatch");
  CHECK(std::string(gm_last_error()).size() > 0);
  gm_spec* s = nullptr;
  CHECK(gm_spec_preset("nonsense", &s) == GM_ERR_INPUT);
  gm_bundle_free(b);
  fs::remove_all(dir);
}

TEST_CASE("estimate through the C interface") {
  auto dir = synth_bundle("estimate");
  gm_bundle* b = load_bundle(dir);
  gm_spec* s = nullptr;
  REQUIRE(gm_spec_preset("classical", &s) == GM_OK);
  CHECK_FALSE(gm_spec_needs_remoteness(s));
  CHECK(take([&] {
          char* j = nullptr;
          gm_spec_to_json(s, &j);
          return j;
        }()).find("continuous_terms") != std::string::npos);

  gm_estimate_options o;
  gm_estimate_options_init(&o);
  o.estimator = "ppml";
  o.sector = "all";
  o.workers = 1;
  gm_estimate* e = nullptr;
  REQUIRE(gm_estimate_run(b, s, &o, &e) == GM_OK);
  CHECK(gm_estimate_exit_code(e) == 0);
  CHECK(gm_estimate_sector_count(e) == 9);
  CHECK(std::string(gm_estimate_sector(e, 8)) == "all");
  double gdp = 0;
  REQUIRE(gm_estimate_coefficient(e, "all", "log_gdp", &gdp) == GM_OK);
  CHECK(std::abs(gdp - 0.8) < 0.2);
  double dummy = 0;
  CHECK(gm_estimate_coefficient(e, "all", "no_such_term", &dummy) != GM_OK);
  auto out = dir / "out";
  REQUIRE(gm_estimate_write(e, out.c_str()) == GM_OK);
  CHECK(fs::exists(out / "coefficients_all.csv"));
  CHECK(fs::exists(out / "fit_all.json"));
  char* hex = nullptr;
  REQUIRE(gm_file_sha256((out / "fit_all.json").c_str(), &hex) == GM_OK);
  CHECK(take(hex).size() == 64);
  gm_estimate_free(e);

  // Remoteness spec without a series fails up front; with one it runs.
  gm_spec* r = nullptr;
  REQUIRE(gm_spec_preset("remoteness", &r) == GM_OK);
  CHECK(gm_spec_needs_remoteness(r));
  o.sector = "agriculture";
  CHECK(gm_estimate_run(b, r, &o, &e) == GM_ERR_INPUT);
  REQUIRE(gm_bundle_compute_remoteness(b, "IE") == GM_OK);
  CHECK(gm_bundle_has_remoteness(b));
  REQUIRE(gm_estimate_run(b, r, &o, &e) == GM_OK);
  CHECK(gm_estimate_sector_count(e) == 1);
  gm_estimate_free(e);
  gm_spec_free(r);

  gm_spec_free(s);
  gm_bundle_free(b);
  fs::remove_all(dir);
}

TEST_CASE("scenario through the C interface") {
  auto dir = synth_bundle("scenario");
  gm_bundle* b = load_bundle(dir);
  gm_spec* s = nullptr;
  REQUIRE(gm_spec_preset("classical", &s) == GM_OK);
  gm_scenario_options o;
  gm_scenario_options_init(&o);
  o.kind = "hard";
  o.estimate.sector = "all";
  o.estimate.workers = 1;
  o.gni_enabled = 1;
  o.gni_star = 181.0;
  o.has_soft_total = 1;
  o.soft_total = 115.5;
  o.has_scenario_total = 1;
  o.scenario_total = 114.7;
  gm_scenario* sc = nullptr;
  REQUIRE(gm_scenario_run(b, s, &o, &sc) == GM_OK);
  CHECK(gm_scenario_exit_code(sc) == 0);
  double v = 0;
  REQUIRE(gm_scenario_impact(sc, "all", "eu28_value_impact_pct", &v) == GM_OK);
  CHECK(v < 0);
  REQUIRE(gm_scenario_impact(sc, "all", "gni_adjusted", &v) == GM_OK);
  CHECK(std::abs(v - 180.2) < 0.05);
  auto out = dir / "out";
  REQUIRE(gm_scenario_write(sc, out.c_str()) == GM_OK);
  CHECK(fs::exists(out / "impact.csv"));
  CHECK(fs::exists(out / "impact.md"));
  CHECK(fs::exists(out / "hard" / "coefficients_all.csv"));
  CHECK(fs::exists(out / "soft" / "fit_all.json"));
  gm_scenario_free(sc);

  o.kind = "sideways";
  CHECK(gm_scenario_run(b, s, &o, &sc) == GM_ERR_INPUT);

  gm_spec_free(s);
  gm_bundle_free(b);
  fs::remove_all(dir);
}
