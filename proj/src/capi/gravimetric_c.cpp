#include "gravimetric/gravimetric.h"

#include "gravimetric/design.hpp"
#include "gravimetric/digest.hpp"
#include "gravimetric/error.hpp"
#include "gravimetric/glm.hpp"
#include "gravimetric/ingest.hpp"
#include "gravimetric/pipeline.hpp"
#include "gravimetric/remoteness.hpp"
#include "gravimetric/report.hpp"
#include "gravimetric/scenario.hpp"
#include "gravimetric/synth.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <set>
#include <thread>

using namespace gravimetric;

struct gm_bundle {
  std::vector<TradeFlowRecord> flows;
  std::vector<CountryYearAttributes> attrs;
  std::vector<BilateralTradeRecord> bilateral;
  DistanceSource distances;
  std::vector<TariffLine> tariffs;
  SectorMap sectors;
  std::optional<RemotenessByYear> remoteness;
  bool have_flows = false, have_attrs = false, have_bilateral = false, have_distances = false,
       have_sectors = false;
};

struct gm_spec {
  ModelSpec spec;
};

struct gm_estimate {
  Estimator estimator = Estimator::PPML;
  std::vector<SectorFit> fits;
  std::vector<std::string> slugs;
};

struct gm_scenario {
  Estimator estimator = Estimator::PPML;
  ScenarioOutcome baseline, soft, scenario;
  ImpactReport report;
};

namespace {

thread_local std::string t_error;
thread_local std::string t_kind;

gm_status status_of(int exit_code) {
  switch (exit_code) {
    case 0: return GM_OK;
    case 2: return GM_ERR_INPUT;
    case 3: return GM_ERR_CONVERGENCE;
    case 4: return GM_ERR_STRUCTURE;
    default: return GM_ERR_INTERNAL;
  }
}

template <class F>
gm_status guard(F&& f) {
  try {
    f();
    t_error.clear();
    t_kind.clear();
    return GM_OK;
  } catch (const Error& e) {
    t_error = e.what();
    t_kind = error_code_name(e.code());
    return status_of(exit_code_of(e.code()));
  } catch (const std::bad_alloc&) {
    t_error = "out of memory";
    t_kind = "Internal";
    return GM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    t_error = e.what();
    t_kind = "Internal";
    return GM_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::InvalidArgument, std::string("null argument: ") + what);
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed: " + p.string());
}

void make_dir(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + p.string() + ": " + ec.message());
}

EstimateRequest make_request(const gm_bundle& b, const ModelSpec& spec, const gm_estimate_options& o) {
  EstimateRequest req;
  auto est = parse_estimator(o.estimator ? o.estimator : "ppml");
  if (!est) throw Error(ErrorCode::InvalidArgument, std::string("unknown estimator: ") + o.estimator);
  req.estimator = *est;
  req.spec = spec;
  if (o.max_iterations > 0) req.options.max_iterations = o.max_iterations;
  const std::string sector = o.sector ? o.sector : "all";
  if (sector == "all") {
    if (!b.have_sectors) throw Error(ErrorCode::InvalidArgument, "a sector map is required for --sector all");
    req.sectors.assign(kAllSectors.begin(), kAllSectors.end());
  } else {
    auto s = parse_sector(sector);
    if (!s) throw Error(ErrorCode::InvalidArgument, "unknown sector: " + sector);
    if (*s != Sector::AllSectors && !b.have_sectors)
      throw Error(ErrorCode::InvalidArgument, "a sector map is required for sector " + sector);
    req.sectors = {*s};
  }
  req.workers = o.workers ? o.workers : std::max(1u, std::thread::hardware_concurrency());
  if (!b.have_flows) throw Error(ErrorCode::InvalidArgument, "no flows loaded");
  if (!b.have_attrs) throw Error(ErrorCode::InvalidArgument, "no attributes loaded");
  if (spec.remoteness_terms && !b.remoteness)
    throw Error(ErrorCode::MissingRemoteness, "the spec uses remoteness but none was loaded or computed");
  return req;
}

std::string fits_summary(std::span<const SectorFit> fits, const char* prefix) {
  std::string s;
  for (const auto& f : fits) {
    s += prefix;
    s += sector_slug(f.sector);
    if (f.error) {
      s += "\t" + std::string(error_code_name(*f.error)) + "\t" + f.message + "\n";
    } else if (f.fit && !f.fit->converged) {
      s += "\tNotConverged\tno convergence after " + std::to_string(f.fit->iterations) + " iterations\n";
    } else {
      s += "\tok\tn=" + std::to_string(f.fit ? f.fit->n_obs : 0) + "\n";
    }
  }
  return s;
}

void write_fits(const std::filesystem::path& dir, std::span<const SectorFit> fits, Estimator est,
                const std::string& manifest = "manifest.json") {
  make_dir(dir);
  for (const auto& f : fits) write_sector_fit(dir, f, est, manifest);
}

const SectorFit* find_fit(std::span<const SectorFit> fits, const char* sector) {
  auto s = parse_sector(sector ? sector : "all");
  if (!s) throw Error(ErrorCode::InvalidArgument, std::string("unknown sector: ") + sector);
  for (const auto& f : fits)
    if (f.sector == *s) return &f;
  throw Error(ErrorCode::InvalidArgument, std::string("sector not estimated: ") + sector);
}

}  // namespace

extern "C" {

GM_API const char* gm_version(void) { return "0.3.0"; }
GM_API const char* gm_rng_algorithm(void) { return synth::kRngAlgorithm.data(); }
GM_API const char* gm_last_error(void) { return t_error.c_str(); }
GM_API const char* gm_last_error_kind(void) { return t_kind.c_str(); }
GM_API void gm_string_free(char* s) { std::free(s); }

GM_API gm_status gm_bundle_new(gm_bundle** out) {
  return guard([&] {
    require(out, "out");
    *out = new gm_bundle();
  });
}

GM_API void gm_bundle_free(gm_bundle* b) { delete b; }

GM_API gm_status gm_bundle_load_flows(gm_bundle* b, const char* path) {
  return guard([&] {
    require(b, "bundle");
    require(path, "path");
    b->flows = read_trade_flows(path);
    b->have_flows = true;
  });
}

GM_API gm_status gm_bundle_load_attrs(gm_bundle* b, const char* path) {
  return guard([&] {
    require(b, "bundle");
    require(path, "path");
    b->attrs = read_attributes(path);
    b->have_attrs = true;
  });
}

GM_API gm_status gm_bundle_load_bilateral(gm_bundle* b, const char* path) {
  return guard([&] {
    require(b, "bundle");
    require(path, "path");
    b->bilateral = read_bilateral(path);
    b->have_bilateral = true;
  });
}

GM_API gm_status gm_bundle_load_distances(gm_bundle* b, const char* path) {
  return guard([&] {
    require(b, "bundle");
    require(path, "path");
    b->distances.static_table = read_distances(path);
    b->have_distances = true;
  });
}

GM_API gm_status gm_bundle_load_tariffs(gm_bundle* b, const char* path) {
  return guard([&] {
    require(b, "bundle");
    require(path, "path");
    b->tariffs = read_tariffs(path);
    TariffSchedule check(b->tariffs);  // conflicting duplicates fail here
  });
}

GM_API gm_status gm_bundle_load_sectors(gm_bundle* b, const char* path) {
  return guard([&] {
    require(b, "bundle");
    require(path, "path");
    b->sectors = read_sector_map(path);
    b->have_sectors = true;
  });
}

GM_API gm_status gm_bundle_load_remoteness(gm_bundle* b, const char* path, const char* exporter) {
  return guard([&] {
    require(b, "bundle");
    require(path, "path");
    require(exporter, "exporter");
    RemotenessByYear r;
    for (const auto& row : read_remoteness(path))
      if (row.country == exporter) r[row.year] = row.r;
    if (r.empty()) throw Error(ErrorCode::MissingRemoteness, std::string("no remoteness rows for ") + exporter);
    b->remoteness = std::move(r);
  });
}

GM_API gm_status gm_bundle_compute_remoteness(gm_bundle* b, const char* exporter) {
  return guard([&] {
    require(b, "bundle");
    require(exporter, "exporter");
    if (!b->have_bilateral || !b->have_distances)
      throw Error(ErrorCode::InvalidArgument, "remoteness needs both bilateral and distance tables");
    std::set<int> years;
    for (const auto& r : b->bilateral) years.insert(r.year);
    std::vector<int> ys(years.begin(), years.end());
    RemotenessByYear r;
    for (const auto& idx : exporter_remoteness_series(exporter, ys, b->bilateral, b->distances)) r[idx.year] = idx.r;
    b->remoteness = std::move(r);
  });
}

GM_API int gm_bundle_has_remoteness(const gm_bundle* b) { return b && b->remoteness ? 1 : 0; }

GM_API gm_status gm_bundle_merge_report(const gm_bundle* b, char** json_out) {
  return guard([&] {
    require(b, "bundle");
    require(json_out, "json_out");
    if (!b->have_flows || !b->have_attrs) throw Error(ErrorCode::InvalidArgument, "flows and attributes are required");
    auto agg = aggregate(b->flows, AggregationLevel::YearCountry);
    auto merged = merge(agg, b->attrs, nullptr);
    const auto& r = merged.report;
    nlohmann::json j = {{"n_flows_read", r.n_flows_read},         {"n_attrs_read", r.n_attrs_read},
                        {"n_cells", r.n_cells},                   {"n_matched", r.n_matched},
                        {"n_dropped_no_attrs", r.n_dropped_no_attrs}, {"n_clamped", r.n_clamped},
                        {"duplicate_keys", r.duplicate_keys}};
    if (b->have_sectors) {
      std::size_t unmatched = 0;
      for (const auto& f : b->flows)
        if (!b->sectors.find(f.cn8)) ++unmatched;
      j["n_flows_without_sector"] = unmatched;
    }
    if (b->have_bilateral) j["n_bilateral_rows"] = b->bilateral.size();
    if (b->have_distances) j["n_distance_pairs"] = b->distances.static_table.size();
    j["n_tariff_lines"] = b->tariffs.size();
    *json_out = dup(j.dump(2));
  });
}

GM_API gm_status gm_remoteness_write(const gm_bundle* b, const char* exporter, const char* path) {
  return guard([&] {
    require(b, "bundle");
    require(exporter, "exporter");
    require(path, "path");
    if (!b->have_bilateral || !b->have_distances)
      throw Error(ErrorCode::InvalidArgument, "remoteness needs both bilateral and distance tables");
    std::set<int> years;
    for (const auto& r : b->bilateral) years.insert(r.year);
    std::vector<int> ys(years.begin(), years.end());
    auto series = exporter_remoteness_series(exporter, ys, b->bilateral, b->distances);
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    write_remoteness(path, series);
  });
}

GM_API gm_status gm_spec_load(const char* path, gm_spec** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto s = std::make_unique<gm_spec>();
    s->spec = load_model_spec(path);
    *out = s.release();
  });
}

GM_API gm_status gm_spec_preset(const char* name, gm_spec** out) {
  return guard([&] {
    require(name, "name");
    require(out, "out");
    auto s = std::make_unique<gm_spec>();
    const std::string n = name;
    if (n == "classical") s->spec = classical_spec();
    else if (n == "remoteness") s->spec = remoteness_spec();
    else throw Error(ErrorCode::InvalidSpec, "unknown preset: " + n);
    *out = s.release();
  });
}

GM_API void gm_spec_free(gm_spec* s) { delete s; }

GM_API gm_status gm_spec_to_json(const gm_spec* s, char** json_out) {
  return guard([&] {
    require(s, "spec");
    require(json_out, "json_out");
    *json_out = dup(to_json(s->spec).dump());
  });
}

GM_API int gm_spec_needs_remoteness(const gm_spec* s) { return s && s->spec.remoteness_terms ? 1 : 0; }

GM_API void gm_estimate_options_init(gm_estimate_options* o) {
  if (!o) return;
  o->estimator = "ppml";
  o->sector = "all";
  o->workers = 0;
  o->max_iterations = 0;
}

GM_API gm_status gm_estimate_run(const gm_bundle* b, const gm_spec* s, const gm_estimate_options* o,
                                 gm_estimate** out) {
  return guard([&] {
    require(b, "bundle");
    require(s, "spec");
    require(o, "options");
    require(out, "out");
    auto req = make_request(*b, s->spec, *o);
    auto e = std::make_unique<gm_estimate>();
    e->estimator = req.estimator;
    e->fits = estimate_sectors(b->flows, b->attrs, b->sectors, b->remoteness ? &*b->remoteness : nullptr, req);
    for (const auto& f : e->fits) e->slugs.emplace_back(sector_slug(f.sector));
    *out = e.release();
  });
}

GM_API void gm_estimate_free(gm_estimate* e) { delete e; }

GM_API int gm_estimate_exit_code(const gm_estimate* e) { return e ? exit_code_of(e->fits) : 5; }

GM_API size_t gm_estimate_sector_count(const gm_estimate* e) { return e ? e->fits.size() : 0; }

GM_API const char* gm_estimate_sector(const gm_estimate* e, size_t i) {
  return e && i < e->slugs.size() ? e->slugs[i].c_str() : nullptr;
}

GM_API gm_status gm_estimate_coefficient(const gm_estimate* e, const char* sector, const char* name, double* value) {
  return guard([&] {
    require(e, "estimate");
    require(name, "name");
    require(value, "value");
    const SectorFit* f = find_fit(e->fits, sector);
    if (!f->fit) throw Error(f->error.value_or(ErrorCode::Internal), "no fit for sector: " + f->message);
    *value = f->fit->coefficient(name);
  });
}

GM_API gm_status gm_estimate_summary(const gm_estimate* e, char** text_out) {
  return guard([&] {
    require(e, "estimate");
    require(text_out, "text_out");
    *text_out = dup(fits_summary(e->fits, ""));
  });
}

GM_API gm_status gm_estimate_write(const gm_estimate* e, const char* dir) {
  return guard([&] {
    require(e, "estimate");
    require(dir, "dir");
    write_fits(dir, e->fits, e->estimator);
  });
}

GM_API void gm_scenario_options_init(gm_scenario_options* o) {
  if (!o) return;
  o->kind = "hard";
  o->incidence = "multiplicative";
  gm_estimate_options_init(&o->estimate);
  o->gni_enabled = 0;
  o->gni_star = 0;
  o->has_soft_total = 0;
  o->soft_total = 0;
  o->has_scenario_total = 0;
  o->scenario_total = 0;
}

GM_API gm_status gm_scenario_run(const gm_bundle* b, const gm_spec* s, const gm_scenario_options* o,
                                 gm_scenario** out) {
  return guard([&] {
    require(b, "bundle");
    require(s, "spec");
    require(o, "options");
    require(out, "out");
    auto kind = parse_scenario(o->kind ? o->kind : "");
    if (!kind || *kind == ScenarioKind::Baseline)
      throw Error(ErrorCode::InvalidArgument, std::string("unknown scenario kind: ") + (o->kind ? o->kind : ""));
    auto incidence = parse_incidence(o->incidence ? o->incidence : "multiplicative");
    if (!incidence) throw Error(ErrorCode::InvalidArgument, std::string("unknown incidence: ") + o->incidence);

    BaselineInputs in;
    in.flows = b->flows;
    in.attrs = b->attrs;
    in.sectors = b->sectors;
    in.tariffs = TariffSchedule(b->tariffs);
    in.remoteness = b->remoteness;
    ScenarioOptions opts;
    opts.estimate = make_request(*b, s->spec, o->estimate);
    opts.incidence = *incidence;

    auto sc = std::make_unique<gm_scenario>();
    sc->estimator = opts.estimate.estimator;
    sc->baseline = run_scenario(ScenarioKind::Baseline, in, opts);
    sc->soft = run_scenario(ScenarioKind::SoftBrexit, in, opts);
    sc->scenario = *kind == ScenarioKind::SoftBrexit ? sc->soft : run_scenario(*kind, in, opts);
    std::optional<GniInputs> gni;
    if (o->gni_enabled) {
      GniInputs g;
      g.gni_star = o->gni_star;
      if (o->has_soft_total) g.soft_total = o->soft_total;
      if (o->has_scenario_total) g.scenario_total = o->scenario_total;
      gni = g;
    }
    sc->report = build_impact_report(sc->scenario, sc->soft, &sc->baseline, gni);
    *out = sc.release();
  });
}

GM_API void gm_scenario_free(gm_scenario* sc) { delete sc; }

GM_API int gm_scenario_exit_code(const gm_scenario* sc) {
  if (!sc) return 5;
  std::vector<SectorFit> all = sc->baseline.fits;
  all.insert(all.end(), sc->soft.fits.begin(), sc->soft.fits.end());
  all.insert(all.end(), sc->scenario.fits.begin(), sc->scenario.fits.end());
  return exit_code_of(all);
}

GM_API gm_status gm_scenario_impact(const gm_scenario* sc, const char* sector, const char* metric, double* value) {
  return guard([&] {
    require(sc, "scenario");
    require(metric, "metric");
    require(value, "value");
    auto s = parse_sector(sector ? sector : "all");
    if (!s) throw Error(ErrorCode::InvalidArgument, std::string("unknown sector: ") + sector);
    const std::string m = metric;
    if (sc->report.gni && *s == Sector::AllSectors) {
      const auto& g = *sc->report.gni;
      if (m == "gni_adjusted") return void(*value = g.result.adjusted);
      if (m == "gni_percent_change") return void(*value = g.result.percent);
      if (m == "soft_total") return void(*value = g.soft_total);
      if (m == "scenario_total") return void(*value = g.scenario_total);
    }
    auto v = sc->report.value(*s, m);
    if (!v) throw Error(ErrorCode::InvalidArgument, "no impact value for " + m + " in " + std::string(sector_slug(*s)));
    *value = *v;
  });
}

GM_API gm_status gm_scenario_summary(const gm_scenario* sc, char** text_out) {
  return guard([&] {
    require(sc, "scenario");
    require(text_out, "text_out");
    std::string s = fits_summary(sc->baseline.fits, "baseline/");
    s += fits_summary(sc->soft.fits, "soft/");
    s += fits_summary(sc->scenario.fits, (std::string(scenario_name(sc->scenario.kind)) + "/").c_str());
    *text_out = dup(s);
  });
}

GM_API gm_status gm_scenario_write(const gm_scenario* sc, const char* dir) {
  return guard([&] {
    require(sc, "scenario");
    require(dir, "dir");
    const std::filesystem::path root(dir);
    make_dir(root);
    write_fits(root / "baseline", sc->baseline.fits, sc->estimator, "../manifest.json");
    write_fits(root / "soft", sc->soft.fits, sc->estimator, "../manifest.json");
    if (sc->scenario.kind != ScenarioKind::SoftBrexit)
      write_fits(root / std::string(scenario_name(sc->scenario.kind)), sc->scenario.fits, sc->estimator,
                 "../manifest.json");
    write_text(root / "impact.csv", impact_csv(sc->report));
    write_text(root / "impact.md", impact_markdown(sc->report));
    if (sc->scenario.kind == ScenarioKind::LongTermHardBrexit)
      write_text(root / "substitution.csv", substitution_csv(sc->scenario.substitution_log));
  });
}

GM_API gm_status gm_percent_effect(double beta, double* out) {
  return guard([&] {
    require(out, "out");
    *out = percent_effect(beta);
  });
}

GM_API gm_status gm_indicator_relative_impact(double beta_scenario, double beta_soft, double* out) {
  return guard([&] {
    require(out, "out");
    *out = indicator_relative_impact(beta_scenario, beta_soft);
  });
}

GM_API gm_status gm_continuous_relative_impact(double beta_scenario, double beta_soft, double* out) {
  return guard([&] {
    require(out, "out");
    *out = continuous_relative_impact(beta_scenario, beta_soft);
  });
}

GM_API gm_status gm_worst_case_two_se(double delta, double se, double* out) {
  return guard([&] {
    require(out, "out");
    *out = worst_case_two_se(delta, se);
  });
}

GM_API gm_status gm_gni_adjustment(double gni_star, double soft_total, double scenario_total, double* adjusted,
                                   double* percent) {
  return guard([&] {
    require(adjusted, "adjusted");
    require(percent, "percent");
    auto g = gni_adjustment(gni_star, soft_total, scenario_total);
    *adjusted = g.adjusted;
    *percent = g.percent;
  });
}

GM_API void gm_synth_options_init(gm_synth_options* o) {
  if (!o) return;
  synth::SynthConfig c;
  o->seed = c.seed;
  o->n_countries = c.n_countries;
  o->first_year = c.first_year;
  o->last_year = c.last_year;
  o->n_goods = c.n_goods;
  o->family = "poisson";
  o->alpha = 0;
  o->sigma = 0;
}

GM_API gm_status gm_synth_write_bundle(const gm_synth_options* o, const char* dir) {
  return guard([&] {
    require(o, "options");
    require(dir, "dir");
    synth::SynthConfig c;
    c.seed = o->seed;
    c.n_countries = o->n_countries;
    c.first_year = o->first_year;
    c.last_year = o->last_year;
    c.n_goods = o->n_goods;
    const std::string fam = o->family ? o->family : "poisson";
    if (fam == "poisson") c.family.kind = synth::Family::Poisson;
    else if (fam == "nb2") c.family = {synth::Family::NB2, o->alpha, 0};
    else if (fam == "lognormal") c.family = {synth::Family::LogNormal, 0, o->sigma};
    else throw Error(ErrorCode::InvalidArgument, "unknown family: " + fam);
    synth::write_bundle(c, dir);
  });
}

GM_API gm_status gm_file_sha256(const char* path, char** hex_out) {
  return guard([&] {
    require(path, "path");
    require(hex_out, "hex_out");
    *hex_out = dup(sha256_file(path));
  });
}

}  // extern "C"
