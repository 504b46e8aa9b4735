// gravimetric command-line front end. Talks to the library only through the C API.

#include "gravimetric/gravimetric.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Inputs {
  std::string flows, attrs, bilateral, distances, tariffs, sectors, remoteness;
  std::string exporter = "IE";
};

struct Common {
  std::string estimator = "ppml";
  std::string spec;
  std::string preset = "classical";
  std::string sector = "all";
  std::string out;
  std::size_t workers = 0;
  int max_iterations = 0;
  bool reproducible = false;
};

struct Failure {
  int code;
};

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Bundle = std::unique_ptr<gm_bundle, Deleter<gm_bundle, gm_bundle_free>>;
using Spec = std::unique_ptr<gm_spec, Deleter<gm_spec, gm_spec_free>>;
using Estimate = std::unique_ptr<gm_estimate, Deleter<gm_estimate, gm_estimate_free>>;
using Scenario = std::unique_ptr<gm_scenario, Deleter<gm_scenario, gm_scenario_free>>;

void check(gm_status st) {
  if (st == GM_OK) return;
  std::cerr << "error: " << gm_last_error() << "\n";
  throw Failure{static_cast<int>(st)};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  gm_string_free(s);
  return out;
}

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string digest(const std::string& path) {
  char* hex = nullptr;
  check(gm_file_sha256(path.c_str(), &hex));
  return take(hex);
}

class Manifest {
public:
  Manifest(std::string command, bool reproducible) : reproducible_(reproducible) {
    j_["command"] = std::move(command);
    j_["tool"] = "gravimetric";
    j_["version"] = gm_version();
    j_["rng_algorithm"] = gm_rng_algorithm();
    j_["inputs"] = json::array();
    j_["spec_echo"] = nullptr;
    j_["seed"] = nullptr;
    j_["options"] = json::object();
    started_ = now_utc();
  }

  void input(const std::string& role, const std::string& path) {
    if (path.empty()) return;
    j_["inputs"].push_back({{"role", role}, {"path", path}, {"sha256", digest(path)}});
  }
  json& operator[](const char* key) { return j_[key]; }

  // Lists every regular file under `dir` (relative, sorted) with its digest,
  // then writes manifest.json there.
  void write(const fs::path& dir, int exit_code, const std::vector<fs::path>& only = {}) {
    std::vector<std::string> files;
    if (only.empty()) {
      for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "manifest.json")
          files.push_back(fs::relative(e.path(), dir).generic_string());
    } else {
      for (const auto& p : only) files.push_back(fs::relative(p, dir).generic_string());
    }
    std::sort(files.begin(), files.end());
    json outs = json::array();
    for (const auto& f : files) outs.push_back({{"path", f}, {"sha256", digest((dir / f).string())}});
    j_["outputs"] = outs;
    j_["exit_code"] = exit_code;
    if (reproducible_) {
      j_["timestamps"] = nullptr;
    } else {
      j_["timestamps"] = {{"started", started_}, {"finished", now_utc()}};
    }
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << j_.dump(2) << "\n";
    if (!out) {
      std::cerr << "error: cannot write " << (dir / "manifest.json").string() << "\n";
      throw Failure{2};
    }
  }

private:
  json j_;
  bool reproducible_;
  std::string started_;
};

void add_input_flags(CLI::App* app, Inputs& in, bool flows_required) {
  auto* f = app->add_option("--flows", in.flows, "flows.csv (year,destination,cn8,value_eur,volume)");
  auto* a = app->add_option("--attrs", in.attrs, "attrs.csv");
  if (flows_required) {
    f->required();
    a->required();
  }
  app->add_option("--bilateral", in.bilateral, "bilateral.csv for remoteness");
  app->add_option("--distances", in.distances, "distances.csv for remoteness");
  app->add_option("--tariffs", in.tariffs, "tariffs.csv (hs6,rate)");
  app->add_option("--sectors", in.sectors, "sectors.csv (cn8_prefix,sector)");
  app->add_option("--remoteness", in.remoteness, "precomputed remoteness.csv");
  app->add_option("--exporter", in.exporter, "exporter code for remoteness")->capture_default_str();
}

void add_common_flags(CLI::App* app, Common& c) {
  app->add_option("--estimator", c.estimator, "ols | ppml | nbpml")
      ->check(CLI::IsMember({"ols", "ppml", "nbpml"}))
      ->capture_default_str();
  app->add_option("--spec", c.spec, "model spec file (.json or .toml)");
  app->add_option("--preset", c.preset, "built-in spec when --spec is absent: classical | remoteness")
      ->capture_default_str();
  app->add_option("--sector", c.sector, "sector slug or all")->capture_default_str();
  app->add_option("--out", c.out, "output directory")->required();
  app->add_option("--workers", c.workers, "worker threads (0 = logical CPUs)")->capture_default_str();
  app->add_option("--max-iterations", c.max_iterations, "IRLS iteration cap (0 = default)");
  app->add_flag("--reproducible", c.reproducible, "omit timestamps from the manifest");
}

Bundle load_bundle(const Inputs& in, Manifest& m) {
  gm_bundle* raw = nullptr;
  check(gm_bundle_new(&raw));
  Bundle b(raw);
  if (!in.flows.empty()) check(gm_bundle_load_flows(b.get(), in.flows.c_str()));
  if (!in.attrs.empty()) check(gm_bundle_load_attrs(b.get(), in.attrs.c_str()));
  if (!in.bilateral.empty()) check(gm_bundle_load_bilateral(b.get(), in.bilateral.c_str()));
  if (!in.distances.empty()) check(gm_bundle_load_distances(b.get(), in.distances.c_str()));
  if (!in.tariffs.empty()) check(gm_bundle_load_tariffs(b.get(), in.tariffs.c_str()));
  if (!in.sectors.empty()) check(gm_bundle_load_sectors(b.get(), in.sectors.c_str()));
  if (!in.remoteness.empty()) check(gm_bundle_load_remoteness(b.get(), in.remoteness.c_str(), in.exporter.c_str()));
  m.input("flows", in.flows);
  m.input("attrs", in.attrs);
  m.input("bilateral", in.bilateral);
  m.input("distances", in.distances);
  m.input("tariffs", in.tariffs);
  m.input("sectors", in.sectors);
  m.input("remoteness", in.remoteness);
  return b;
}

Spec load_spec(const Common& c, const Inputs& in, gm_bundle* b, Manifest& m) {
  gm_spec* raw = nullptr;
  if (!c.spec.empty()) {
    check(gm_spec_load(c.spec.c_str(), &raw));
    m.input("spec", c.spec);
  } else {
    check(gm_spec_preset(c.preset.c_str(), &raw));
    m["options"]["preset"] = c.preset;
  }
  Spec s(raw);
  if (gm_spec_needs_remoteness(s.get()) && !gm_bundle_has_remoteness(b)) {
    if (in.bilateral.empty() || in.distances.empty()) {
      std::cerr << "error: MissingRemoteness: the spec uses remoteness; pass --remoteness or "
                   "--bilateral and --distances\n";
      throw Failure{2};
    }
    check(gm_bundle_compute_remoteness(b, in.exporter.c_str()));
  }
  char* js = nullptr;
  check(gm_spec_to_json(s.get(), &js));
  m["spec_echo"] = json::parse(take(js));
  return s;
}

gm_estimate_options estimate_options(const Common& c, Manifest& m) {
  gm_estimate_options o;
  gm_estimate_options_init(&o);
  o.estimator = c.estimator.c_str();
  o.sector = c.sector.c_str();
  o.workers = c.workers;
  o.max_iterations = c.max_iterations;
  m["options"]["estimator"] = c.estimator;
  m["options"]["sector"] = c.sector;
  if (c.max_iterations > 0) m["options"]["max_iterations"] = c.max_iterations;
  return o;
}

int cmd_validate(const Inputs& in) {
  Manifest m("validate", true);
  Bundle b = load_bundle(in, m);
  char* report = nullptr;
  check(gm_bundle_merge_report(b.get(), &report));
  std::cout << take(report) << "\n";
  return 0;
}

int cmd_estimate(const Inputs& in, const Common& c) {
  Manifest m("estimate", c.reproducible);
  Bundle b = load_bundle(in, m);
  Spec s = load_spec(c, in, b.get(), m);
  auto o = estimate_options(c, m);
  gm_estimate* raw = nullptr;
  check(gm_estimate_run(b.get(), s.get(), &o, &raw));
  Estimate e(raw);
  check(gm_estimate_write(e.get(), c.out.c_str()));
  char* summary = nullptr;
  check(gm_estimate_summary(e.get(), &summary));
  std::cout << take(summary);
  const int code = gm_estimate_exit_code(e.get());
  m.write(c.out, code);
  return code;
}

int cmd_remoteness(const Inputs& in, const std::string& out, bool reproducible) {
  Manifest m("remoteness", reproducible);
  Bundle b = load_bundle(in, m);
  m["options"]["exporter"] = in.exporter;
  check(gm_remoteness_write(b.get(), in.exporter.c_str(), out.c_str()));
  fs::path dir = fs::path(out).parent_path();
  if (dir.empty()) dir = ".";
  m.write(dir, 0, {fs::path(out)});
  return 0;
}

struct ScenarioFlags {
  std::string kind = "hard";
  std::string incidence = "multiplicative";
  std::optional<double> gni, gni_soft_total, gni_scenario_total;
};

int cmd_scenario(const Inputs& in, const Common& c, const ScenarioFlags& f) {
  Manifest m("scenario", c.reproducible);
  Bundle b = load_bundle(in, m);
  Spec s = load_spec(c, in, b.get(), m);
  gm_scenario_options o;
  gm_scenario_options_init(&o);
  o.estimate = estimate_options(c, m);
  o.kind = f.kind.c_str();
  o.incidence = f.incidence.c_str();
  m["options"]["kind"] = f.kind;
  m["options"]["incidence"] = f.incidence;
  if (f.gni) {
    o.gni_enabled = 1;
    o.gni_star = *f.gni;
    m["options"]["gni"] = *f.gni;
  }
  if (f.gni_soft_total) {
    o.has_soft_total = 1;
    o.soft_total = *f.gni_soft_total;
    m["options"]["gni_soft_total"] = *f.gni_soft_total;
  }
  if (f.gni_scenario_total) {
    o.has_scenario_total = 1;
    o.scenario_total = *f.gni_scenario_total;
    m["options"]["gni_scenario_total"] = *f.gni_scenario_total;
  }
  gm_scenario* raw = nullptr;
  check(gm_scenario_run(b.get(), s.get(), &o, &raw));
  Scenario sc(raw);
  check(gm_scenario_write(sc.get(), c.out.c_str()));
  char* summary = nullptr;
  check(gm_scenario_summary(sc.get(), &summary));
  std::cout << take(summary);
  const int code = gm_scenario_exit_code(sc.get());
  m.write(c.out, code);
  return code;
}

struct SynthFlags {
  std::string out;
  unsigned long long seed = 1;
  std::size_t countries = 50;
  int first_year = 2012, last_year = 2016;
  std::size_t goods = 24;
  std::string family = "poisson";
  double alpha = 0, sigma = 0;
  bool reproducible = false;
};

int cmd_synth(const SynthFlags& f) {
  Manifest m("synth", f.reproducible);
  gm_synth_options o;
  gm_synth_options_init(&o);
  o.seed = f.seed;
  o.n_countries = f.countries;
  o.first_year = f.first_year;
  o.last_year = f.last_year;
  o.n_goods = f.goods;
  o.family = f.family.c_str();
  o.alpha = f.alpha;
  o.sigma = f.sigma;
  check(gm_synth_write_bundle(&o, f.out.c_str()));
  m["seed"] = f.seed;
  m["options"] = {{"countries", f.countries}, {"first_year", f.first_year}, {"last_year", f.last_year},
                  {"goods", f.goods},         {"family", f.family},         {"alpha", f.alpha},
                  {"sigma", f.sigma}};
  m.write(f.out, 0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structural gravity estimation and counterfactual trade scenarios"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gm_version());

  Inputs in;
  Common common;
  ScenarioFlags sflags;
  SynthFlags synth;
  std::string remoteness_out;
  bool remoteness_repro = false;

  auto* validate = app.add_subcommand("validate", "check inputs and print the merge report");
  add_input_flags(validate, in, true);

  auto* estimate = app.add_subcommand("estimate", "fit the gravity model per sector");
  add_input_flags(estimate, in, true);
  add_common_flags(estimate, common);

  auto* remote = app.add_subcommand("remoteness", "yearly remoteness index of the exporter");
  add_input_flags(remote, in, false);
  remote->get_option("--bilateral")->required();
  remote->get_option("--distances")->required();
  remote->add_option("--out", remoteness_out, "output csv")->required();
  remote->add_flag("--reproducible", remoteness_repro, "omit timestamps from the manifest");

  auto* scenario = app.add_subcommand("scenario", "re-estimate under a counterfactual");
  add_input_flags(scenario, in, true);
  add_common_flags(scenario, common);
  scenario->add_option("--kind", sflags.kind, "soft | regalign | hard | longterm")
      ->check(CLI::IsMember({"soft", "regalign", "hard", "longterm"}))
      ->capture_default_str();
  scenario->add_option("--incidence", sflags.incidence, "multiplicative | divisive")
      ->check(CLI::IsMember({"multiplicative", "divisive"}))
      ->capture_default_str();
  scenario->add_option("--gni", sflags.gni, "modified GNI, EUR bn");
  scenario->add_option("--gni-soft-total", sflags.gni_soft_total, "soft-scenario export total, EUR bn");
  scenario->add_option("--gni-scenario-total", sflags.gni_scenario_total, "scenario export total, EUR bn");

  auto* syn = app.add_subcommand("synth", "write a seeded synthetic input bundle");
  syn->add_option("--out", synth.out, "output directory")->required();
  syn->add_option("--seed", synth.seed)->capture_default_str();
  syn->add_option("--countries", synth.countries)->capture_default_str();
  syn->add_option("--first-year", synth.first_year)->capture_default_str();
  syn->add_option("--last-year", synth.last_year)->capture_default_str();
  syn->add_option("--goods", synth.goods)->capture_default_str();
  syn->add_option("--family", synth.family)->check(CLI::IsMember({"poisson", "nb2", "lognormal"}))->capture_default_str();
  syn->add_option("--alpha", synth.alpha, "NB2 dispersion");
  syn->add_option("--sigma", synth.sigma, "log-normal sd");
  syn->add_flag("--reproducible", synth.reproducible, "omit timestamps from the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*validate) return cmd_validate(in);
    if (*estimate) return cmd_estimate(in, common);
    if (*remote) return cmd_remoteness(in, remoteness_out, remoteness_repro);
    if (*scenario) return cmd_scenario(in, common, sflags);
    if (*syn) return cmd_synth(synth);
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 5;
  }
  return 5;
}
