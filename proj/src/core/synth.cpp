#include "gravimetric/synth.hpp"

#include "gravimetric/error.hpp"
#include "gravimetric/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>

namespace gravimetric::synth {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t string_key(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

enum Stream : std::uint64_t {
  kAttrs = 1,
  kFlows = 2,
  kTariffs = 3,
  kWorld = 4,
  kGoods = 5,
  kSimulate = 6,
  kDestPrice = 7,
};

constexpr std::array<std::array<const char*, 3>, 8> kChapters = {{
    {"01", "03", "06"},  // Agriculture/Forestry/Fishing
    {"25", "26", "27"},  // Mining/Quarrying
    {"02", "04", "22"},  // Food/Beverage
    {"52", "61", "62"},  // Textiles
    {"44", "47", "48"},  // Wood/Paper
    {"29", "30", "40"},  // Chemicals/Pharma/Rubber
    {"72", "84", "85"},  // Metals/Machinery
    {"90", "94", "95"},  // OtherProducts
}};

double log_uniform(CounterRng& rng, Range r) { return std::exp(rng.uniform(std::log(r.lo), std::log(r.hi))); }

double clamp_to(double v, Range r) { return std::clamp(v, r.lo, r.hi); }

std::string country_code(std::size_t i) {
  return {static_cast<char>('A' + (i / 676) % 26), static_cast<char>('A' + (i / 26) % 26),
          static_cast<char>('A' + i % 26)};
}

double draw_response(CounterRng& rng, double mu, const FamilySpec& fam) {
  switch (fam.kind) {
    case Family::Poisson: return static_cast<double>(rng.poisson(mu));
    case Family::NB2: return static_cast<double>(rng.negative_binomial(mu, fam.alpha));
    case Family::LogNormal: return mu * std::exp(fam.sigma * rng.normal());
  }
  return mu;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(mix64(seed ^ mix64(stream + kGamma))) {}

std::uint64_t CounterRng::next() noexcept { return mix64(key_ + (++counter_) * kGamma); }

double CounterRng::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double CounterRng::normal() noexcept {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t CounterRng::poisson(double mean) {
  if (!(mean >= 0) || !std::isfinite(mean) || mean > 1e15)
    throw Error(ErrorCode::MeanOverflow, "Poisson mean out of range: " + std::to_string(mean));
  if (mean == 0) return 0;
  if (mean < 10) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }
  // Transformed rejection with squeeze (Hoermann's PTRS).
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2);
  for (;;) {
    const double U = uniform() - 0.5;
    const double V = uniform();
    const double us = 0.5 - std::abs(U);
    const double k = std::floor((2 * a / us + b) * U + mean + 0.43);
    if (us >= 0.07 && V <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0 || (us < 0.013 && V > us)) continue;
    if (std::log(V) + std::log(invalpha) - std::log(a / (us * us) + b) <= -mean + k * loglam - std::lgamma(k + 1))
      return static_cast<std::uint64_t>(k);
  }
}

double CounterRng::gamma(double shape) {
  if (!(shape > 0)) throw Error(ErrorCode::InvalidArgument, "gamma shape must be positive");
  if (shape < 1) {
    const double u = 1.0 - uniform();
    return gamma(shape + 1) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1 + c * x;
    } while (v <= 0);
    v = v * v * v;
    const double u = 1.0 - uniform();
    if (u < 1 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1 - v + std::log(v))) return d * v;
  }
}

std::uint64_t CounterRng::negative_binomial(double mu, double alpha) {
  if (alpha <= 0) return poisson(mu);
  const double shape = 1.0 / alpha;
  return poisson(mu * alpha * gamma(shape));
}

CounterRng CounterRng::split(std::uint64_t stream) const noexcept {
  CounterRng child(key_, stream);
  return child;
}

void SynthConfig::validate() const {
  for (Range r : {gdp, population, area_km2, distance_km})
    if (!(r.lo > 0) || !(r.hi >= r.lo)) throw Error(ErrorCode::InvalidArgument, "synthetic ranges must be positive");
  if (!(religion_share.lo > 0) || religion_share.hi > 1 || religion_share.hi < religion_share.lo)
    throw Error(ErrorCode::InvalidArgument, "religion share range must lie in (0, 1]");
  if (last_year < first_year) throw Error(ErrorCode::InvalidArgument, "year span is empty");
  if (first_year <= kTimeOrigin) throw Error(ErrorCode::InvalidArgument, "years must be after 1992");
  if (n_goods == 0) throw Error(ErrorCode::InvalidArgument, "need at least one good");
  if (family.kind == Family::NB2 && !(family.alpha > 0)) throw Error(ErrorCode::InvalidArgument, "NB2 needs alpha > 0");
  if (family.kind == Family::LogNormal && family.sigma < 0) throw Error(ErrorCode::InvalidArgument, "sigma < 0");
}

std::vector<CountryYearAttributes> generate_attributes(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<std::string> codes;
  if (cfg.include_uk) {
    codes.push_back("GB");
    codes.push_back("NI");
  }
  for (std::size_t i = 0; i < cfg.n_countries; ++i) codes.push_back(country_code(i));

  std::vector<CountryYearAttributes> out;
  const CounterRng root(cfg.seed, kAttrs);
  for (std::size_t c = 0; c < codes.size(); ++c) {
    CounterRng rng = root.split(c);
    const bool gb = codes[c] == "GB" && cfg.include_uk;
    const bool ni = codes[c] == "NI" && cfg.include_uk;
    const double gdp0 = log_uniform(rng, cfg.gdp);
    const double pop0 = log_uniform(rng, cfg.population);
    const double area = log_uniform(rng, cfg.area_km2);
    double distance = log_uniform(rng, cfg.distance_km);
    if (gb || ni) distance = clamp_to(cfg.distance_km.lo * rng.uniform(1.0, 2.0), cfg.distance_km);
    const double religion = rng.uniform(cfg.religion_share.lo, cfg.religion_share.hi);
    IndicatorFlags flags;
    flags.gatt_wto = rng.uniform() < 0.8;
    flags.english = rng.uniform() < cfg.flag_probability;
    flags.eu = rng.uniform() < cfg.flag_probability;
    flags.euro = flags.eu && rng.uniform() < 0.6;
    flags.legal = rng.uniform() < cfg.flag_probability;
    if (gb || ni) {
      flags.gb = gb;
      flags.ni = ni;
      flags.eu = true;
      flags.euro = false;
      flags.english = true;
      flags.legal = true;
      flags.gatt_wto = true;
    }
    for (int y = cfg.first_year; y <= cfg.last_year; ++y) {
      const double t = y - cfg.first_year;
      CountryYearAttributes a;
      a.iso = codes[c];
      a.year = y;
      a.gdp = clamp_to(gdp0 * std::exp(0.03 * t + 0.05 * rng.normal()), cfg.gdp);
      a.population = clamp_to(pop0 * std::exp(0.01 * t), cfg.population);
      a.area_km2 = area;
      a.distance_km = distance;
      a.religion_share = religion;
      a.flags = flags;
      out.push_back(std::move(a));
    }
  }
  return out;
}

double true_mean(const CountryYearAttributes& row, const SynthConfig& cfg) {
  double eta = 0;
  for (const auto& [name, beta] : cfg.beta_true) {
    double x = 0;
    if (name == "intercept") x = 1;
    else if (name == "log_gdp") x = std::log(row.gdp);
    else if (name == "log_population") x = std::log(row.population);
    else if (name == "log_area") x = std::log(row.area_km2);
    else if (name == "log_distance") x = std::log(row.distance_km);
    else if (name == "log_religion") x = std::log(row.religion_share);
    else if (name == "log_time") x = std::log(static_cast<double>(row.year - kTimeOrigin));
    else if (auto ind = parse_indicator(name)) x = row.flags.get(*ind) ? 1 : 0;
    else throw Error(ErrorCode::InvalidArgument, "unknown coefficient name in beta_true: " + name);
    eta += beta * x;
  }
  const double mu = std::exp(eta);
  if (!std::isfinite(mu) || mu > 1e15)
    throw Error(ErrorCode::MeanOverflow, "mean overflow for " + row.iso + " " + std::to_string(row.year));
  return mu;
}

std::vector<Good> goods(const SynthConfig& cfg) {
  std::vector<Good> out;
  CounterRng rng(cfg.seed, kGoods);
  double total = 0;
  for (std::size_t g = 0; g < cfg.n_goods; ++g) {
    Good good;
    const std::size_t s = g % 8;
    good.sector = kAllSectors[s];
    char digits[8];
    std::snprintf(digits, sizeof digits, "%06u", static_cast<unsigned>((g * 7919u) % 1000000u));
    good.cn8 = std::string(kChapters[s][(g / 8) % 3]) + digits;
    good.share = rng.uniform(0.5, 1.5);
    good.unit_price = std::exp(rng.uniform(0.0, std::log(100.0)));
    total += good.share;
    out.push_back(std::move(good));
  }
  for (auto& g : out) g.share /= total;
  return out;
}

SectorMap sector_map(const SynthConfig&) {
  SectorMap map;
  for (std::size_t s = 0; s < kChapters.size(); ++s)
    for (const char* ch : kChapters[s]) map.add(ch, kAllSectors[s]);
  return map;
}

std::vector<TradeFlowRecord> generate_flows(std::span<const CountryYearAttributes> attrs, const SynthConfig& cfg) {
  cfg.validate();
  const auto universe = goods(cfg);
  const CounterRng root(cfg.seed, kFlows);
  const CounterRng price_root(cfg.seed, kDestPrice);
  std::vector<TradeFlowRecord> out;
  out.reserve(attrs.size() * universe.size());
  for (std::size_t r = 0; r < attrs.size(); ++r) {
    const auto& a = attrs[r];
    const double mu = true_mean(a, cfg);
    CounterRng rng = root.split(r);
    CounterRng price_rng = price_root.split(string_key(a.iso));
    const double dest_factor = price_rng.uniform(0.8, 1.25);
    // Each destination buys a fixed subset of goods. Goods from the third
    // chapter of each sector go to the UK only, so some UK lines have no
    // EU-27 substitute.
    const bool uk = a.flags.gb || a.flags.ni;
    std::vector<bool> bought(universe.size());
    double covered = 0;
    for (std::size_t g = 0; g < universe.size(); ++g) {
      const bool keep = price_rng.uniform() < 0.8;
      bought[g] = uk || ((g / 8) % 3 != 2 && keep);
      if (bought[g]) covered += universe[g].share;
    }
    if (covered == 0) continue;
    for (std::size_t gi = 0; gi < universe.size(); ++gi) {
      if (!bought[gi]) continue;
      const Good& g = universe[gi];
      const double y = draw_response(rng, mu * g.share / covered, cfg.family);
      TradeFlowRecord rec;
      rec.year = a.year;
      rec.destination = a.iso;
      rec.cn8 = g.cn8;
      rec.value = static_cast<Cents>(std::llround(y * 100.0));
      rec.volume = cents_to_eur(rec.value) / (g.unit_price * dest_factor);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::vector<TariffLine> generate_tariffs(const SynthConfig& cfg) {
  std::set<std::pair<std::string, Sector>> lines;
  for (const auto& g : goods(cfg)) lines.emplace(g.cn8.substr(0, 6), g.sector);
  CounterRng rng(cfg.seed, kTariffs);
  std::vector<TariffLine> out;
  for (const auto& [hs6, sector] : lines) {
    const bool omitted = rng.uniform() < 0.125;
    double hi = 0.08;
    if (sector == Sector::Agriculture || sector == Sector::FoodBeverage) hi = 0.40;
    else if (sector == Sector::Textiles) hi = 0.15;
    else if (sector == Sector::ChemicalsPharma) hi = 0.03;
    const double rate = std::round(rng.uniform(0.0, hi) * 1e4) / 1e4;
    if (!omitted) out.push_back({hs6, rate});
  }
  return out;
}

WorldTables generate_world(std::span<const CountryYearAttributes> attrs, const SynthConfig& cfg) {
  struct Place {
    double x = 0, y = 0, distance = 0;
  };
  std::map<std::string, Place> places;
  std::map<std::pair<int, std::string>, double> gdp;
  CounterRng rng(cfg.seed, kWorld);
  for (const auto& a : attrs) {
    gdp[{a.year, a.iso}] = a.gdp;
    if (places.count(a.iso)) continue;
    const double theta = rng.uniform(0.0, 2 * M_PI);
    places[a.iso] = {a.distance_km * std::cos(theta), a.distance_km * std::sin(theta), a.distance_km};
  }
  WorldTables w;
  std::vector<std::string> codes;
  for (const auto& [iso, p] : places) {
    w.distances.add(cfg.exporter, iso, p.distance);
    codes.push_back(iso);
  }
  for (std::size_t i = 0; i < codes.size(); ++i)
    for (std::size_t j = i + 1; j < codes.size(); ++j) {
      const auto& p = places[codes[i]];
      const auto& q = places[codes[j]];
      w.distances.add(codes[i], codes[j], std::max(10.0, std::round(std::hypot(p.x - q.x, p.y - q.y))));
    }
  std::vector<std::string> all = codes;
  all.push_back(cfg.exporter);
  std::sort(all.begin(), all.end());
  const double exporter_gdp = std::sqrt(cfg.gdp.lo * cfg.gdp.hi);
  for (int y = cfg.first_year; y <= cfg.last_year; ++y) {
    for (const auto& a : all)
      for (const auto& b : all) {
        if (a == b) continue;
        const double ga = a == cfg.exporter ? exporter_gdp : gdp.count({y, a}) ? gdp[{y, a}] : exporter_gdp;
        const double gb = b == cfg.exporter ? exporter_gdp : gdp.count({y, b}) ? gdp[{y, b}] : exporter_gdp;
        const double d = *w.distances.get(a, b);
        const double v = 1e-12 * std::pow(ga, 0.8) * std::pow(gb, 0.8) / std::pow(d, 0.9) * std::exp(0.3 * rng.normal());
        w.bilateral.push_back({y, a, b, std::round(v * 1e3) / 1e3});
      }
  }
  return w;
}

BundlePaths bundle_paths(const std::filesystem::path& dir) {
  return {dir / "flows.csv",     dir / "attrs.csv",   dir / "bilateral.csv",
          dir / "distances.csv", dir / "tariffs.csv", dir / "sectors.csv"};
}

BundlePaths write_bundle(const SynthConfig& cfg, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  const auto attrs = generate_attributes(cfg);
  const auto flows = generate_flows(attrs, cfg);
  const auto world = generate_world(attrs, cfg);
  auto p = bundle_paths(dir);
  write_attributes(p.attrs, attrs);
  write_trade_flows(p.flows, flows);
  write_bilateral(p.bilateral, world.bilateral);
  write_distances(p.distances, world.distances);
  write_tariffs(p.tariffs, generate_tariffs(cfg));
  write_sector_map(p.sectors, sector_map(cfg));
  return p;
}

DesignMatrix simulate_design(const SimulationSpec& spec) {
  if (spec.beta.empty()) throw Error(ErrorCode::InvalidArgument, "need at least an intercept");
  if (spec.n_clusters == 0) throw Error(ErrorCode::InvalidArgument, "need at least one cluster");
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto p = static_cast<Eigen::Index>(spec.beta.size());
  CounterRng rng(spec.seed, kSimulate);
  DesignMatrix d;
  d.X.resize(n, p);
  d.y.resize(n);
  d.names.push_back("intercept");
  for (Eigen::Index k = 1; k < p; ++k) d.names.push_back("x" + std::to_string(k));
  d.spec_echo.response_scale =
      spec.family.kind == Family::LogNormal ? ResponseScale::Log : ResponseScale::Natural;
  for (Eigen::Index i = 0; i < n; ++i) {
    double eta = spec.beta[0];
    d.X(i, 0) = 1.0;
    for (Eigen::Index k = 1; k < p; ++k) {
      const double x = spec.binary_regressors ? (rng.uniform() < 0.5 ? 1.0 : 0.0) : rng.normal();
      d.X(i, k) = x;
      eta += spec.beta[static_cast<std::size_t>(k)] * x;
    }
    if (spec.family.kind == Family::LogNormal) {
      d.y[i] = eta + spec.family.sigma * rng.normal();
    } else {
      d.y[i] = draw_response(rng, std::exp(eta), spec.family);
    }
    char label[24];
    std::snprintf(label, sizeof label, "g%04zu", static_cast<std::size_t>(i) % spec.n_clusters);
    d.clusters.emplace_back(label);
    d.years.push_back(2000);
    d.destinations.emplace_back(label);
  }
  return d;
}

}  // namespace gravimetric::synth
