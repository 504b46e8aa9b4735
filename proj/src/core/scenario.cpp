#include "gravimetric/scenario.hpp"

#include "gravimetric/error.hpp"

#include <cmath>
#include <tuple>

namespace gravimetric {

std::string_view scenario_name(ScenarioKind k) noexcept {
  switch (k) {
    case ScenarioKind::Baseline: return "baseline";
    case ScenarioKind::SoftBrexit: return "soft";
    case ScenarioKind::RegulatoryAlignment: return "regalign";
    case ScenarioKind::HardBrexit: return "hard";
    case ScenarioKind::LongTermHardBrexit: return "longterm";
  }
  return "";
}

std::optional<ScenarioKind> parse_scenario(std::string_view text) noexcept {
  for (auto k : {ScenarioKind::Baseline, ScenarioKind::SoftBrexit, ScenarioKind::RegulatoryAlignment,
                 ScenarioKind::HardBrexit, ScenarioKind::LongTermHardBrexit})
    if (scenario_name(k) == text) return k;
  return std::nullopt;
}

std::string_view incidence_name(TariffIncidence t) noexcept {
  return t == TariffIncidence::Multiplicative ? "multiplicative" : "divisive";
}

std::optional<TariffIncidence> parse_incidence(std::string_view text) noexcept {
  if (text == "multiplicative") return TariffIncidence::Multiplicative;
  if (text == "divisive") return TariffIncidence::Divisive;
  return std::nullopt;
}

TariffSchedule::TariffSchedule(std::span<const TariffLine> lines) {
  for (const auto& l : lines) {
    if (!is_hs6(l.hs6)) throw Error(ErrorCode::BadCode, "not a 6-digit HS code: " + l.hs6);
    if (l.rate < 0) throw Error(ErrorCode::NegativeValue, "negative tariff rate for " + l.hs6);
    auto [it, inserted] = rates_.emplace(l.hs6, l.rate);
    if (!inserted && it->second != l.rate)
      throw Error(ErrorCode::DuplicateAttributeKey, "conflicting tariff rates for " + l.hs6);
  }
}

std::optional<double> TariffSchedule::rate(std::string_view hs6) const {
  auto it = rates_.find(hs6);
  if (it == rates_.end()) return std::nullopt;
  return it->second;
}

Cents tariffed_value(Cents value, double rate, TariffIncidence incidence) {
  if (rate < 0) throw Error(ErrorCode::NegativeValue, "negative tariff rate");
  if (rate > 1.0) throw Error(ErrorCode::RateAbove100Pct, "tariff rate above 100%: " + std::to_string(rate));
  if (rate == 0.0) return value;
  const double v = static_cast<double>(value);
  const double out = incidence == TariffIncidence::Multiplicative ? v * (1.0 - rate) : v / (1.0 + rate);
  return static_cast<Cents>(std::llround(out));
}

SoftResult apply_soft(std::span<const CountryYearAttributes> attrs) {
  SoftResult r;
  r.attrs.assign(attrs.begin(), attrs.end());
  for (auto& a : r.attrs) {
    if ((a.flags.gb || a.flags.ni) && a.flags.eu) {
      a.flags.eu = false;
      ++r.n_modified;
    }
  }
  return r;
}

std::set<std::string> uk_destinations(std::span<const CountryYearAttributes> attrs, bool include_ni) {
  std::set<std::string> out;
  for (const auto& a : attrs)
    if (a.flags.gb || (include_ni && a.flags.ni)) out.insert(a.iso);
  return out;
}

std::string_view disposition_name(Disposition d) noexcept {
  switch (d) {
    case Disposition::Kept: return "kept";
    case Disposition::Tariffed: return "tariffed";
    case Disposition::Reassigned: return "reassigned";
    case Disposition::Flagged: return "flagged";
  }
  return "";
}

namespace {

SubstitutionEntry entry_for(const TradeFlowRecord& before, const TradeFlowRecord& after, Disposition d) {
  return {before.year, before.cn8, before.destination, d, after.destination, before.value, after.value, false};
}

struct CandidateCell {
  Cents value = 0;
  double volume = 0;
  bool volumes_complete = true;
};

}  // namespace

TariffApplication apply_tariffs(std::span<const TradeFlowRecord> flows, const TariffSchedule& tariffs,
                                const std::set<std::string>& targets, TariffIncidence incidence) {
  TariffApplication out;
  out.flows.reserve(flows.size());
  for (const auto& f : flows) {
    TradeFlowRecord g = f;
    if (targets.count(f.destination)) {
      auto rate = tariffs.rate(f.hs6());
      if (!rate) ++out.n_missing_rate;
      g.value = tariffed_value(f.value, rate.value_or(0.0), incidence);
      ++out.n_tariffed;
    }
    out.flows.push_back(std::move(g));
  }
  return out;
}

SubstitutionResult apply_substitution(std::span<const TradeFlowRecord> flows,
                                      std::span<const CountryYearAttributes> attrs, const TariffSchedule& tariffs,
                                      const std::set<std::string>& targets, TariffIncidence incidence) {
  std::set<std::pair<int, std::string>> eu27;
  for (const auto& a : attrs)
    if (a.flags.eu && !a.flags.gb && !a.flags.ni && !targets.count(a.iso)) eu27.emplace(a.year, a.iso);

  // (year, cn8) -> destination -> summed value/volume, over EU-27 destinations.
  std::map<std::pair<int, std::string>, std::map<std::string, CandidateCell>> candidates;
  for (const auto& f : flows) {
    if (targets.count(f.destination) || !eu27.count({f.year, f.destination})) continue;
    auto& c = candidates[{f.year, f.cn8}][f.destination];
    c.value += f.value;
    if (f.volume) c.volume += *f.volume;
    else c.volumes_complete = false;
  }

  SubstitutionResult out;
  out.flows.reserve(flows.size());
  out.log.reserve(flows.size());
  for (const auto& f : flows) {
    TradeFlowRecord g = f;
    if (!targets.count(f.destination)) {
      out.flows.push_back(g);
      out.log.push_back(entry_for(f, g, Disposition::Kept));
      continue;
    }
    const std::string* best = nullptr;
    const CandidateCell* best_cell = nullptr;
    if (auto it = candidates.find({f.year, f.cn8}); it != candidates.end()) {
      for (const auto& [iso, cell] : it->second) {  // iso ascending: strict > keeps the lexicographic tie-break
        if (cell.value <= 0) continue;
        if (!best_cell || cell.value > best_cell->value) {
          best = &iso;
          best_cell = &cell;
        }
      }
    }
    if (best) {
      g.destination = *best;
      Disposition d = Disposition::Flagged;
      if (f.volume && best_cell->volumes_complete && best_cell->volume > 0) {
        const double unit_value = static_cast<double>(best_cell->value) / best_cell->volume;  // cents per unit
        g.value = static_cast<Cents>(std::llround(*f.volume * unit_value));
        d = Disposition::Reassigned;
      }
      out.flows.push_back(g);
      out.log.push_back(entry_for(f, g, d));
    } else {
      auto rate = tariffs.rate(f.hs6());
      g.value = tariffed_value(f.value, rate.value_or(0.0), incidence);
      out.flows.push_back(g);
      auto e = entry_for(f, g, Disposition::Tariffed);
      e.missing_rate = !rate.has_value();
      if (e.missing_rate) ++out.n_missing_rate;
      out.log.push_back(std::move(e));
    }
  }
  return out;
}

std::string_view group_name(DestinationGroup g) noexcept {
  switch (g) {
    case DestinationGroup::GB: return "GB";
    case DestinationGroup::NI: return "NI";
    case DestinationGroup::EU27: return "EU-27";
    case DestinationGroup::EU28: return "EU-28";
    case DestinationGroup::World: return "World";
  }
  return "";
}

ValueTotals value_totals(std::span<const TradeFlowRecord> flows, std::span<const CountryYearAttributes> baseline_attrs,
                         const SectorMap& sectors) {
  std::map<std::pair<int, std::string>, const IndicatorFlags*> flags;
  for (const auto& a : baseline_attrs) flags.emplace(std::pair{a.year, a.iso}, &a.flags);
  ValueTotals totals;
  for (Sector s : kAllSectors)
    for (auto g : {DestinationGroup::GB, DestinationGroup::NI, DestinationGroup::EU27, DestinationGroup::EU28,
                   DestinationGroup::World})
      totals[s][g] = 0;
  for (const auto& f : flows) {
    const Sector s = sectors.sector_of(f.cn8);
    std::vector<DestinationGroup> groups{DestinationGroup::World};
    if (auto it = flags.find({f.year, f.destination}); it != flags.end()) {
      const auto& fl = *it->second;
      if (fl.gb) groups.push_back(DestinationGroup::GB);
      else if (fl.ni) groups.push_back(DestinationGroup::NI);
      else if (fl.eu) groups.push_back(DestinationGroup::EU27);
      if (fl.gb || fl.ni || fl.eu) groups.push_back(DestinationGroup::EU28);
    }
    for (auto g : groups) {
      totals[s][g] += f.value;
      totals[Sector::AllSectors][g] += f.value;
    }
  }
  return totals;
}

const SectorFit* ScenarioOutcome::fit_for(Sector s) const noexcept {
  for (const auto& f : fits)
    if (f.sector == s) return &f;
  return nullptr;
}

ScenarioOutcome run_scenario(ScenarioKind kind, const BaselineInputs& in, const ScenarioOptions& options) {
  ScenarioOutcome out;
  out.kind = kind;
  out.incidence = options.incidence;
  if (kind == ScenarioKind::Baseline) {
    out.attrs = in.attrs;
  } else {
    auto soft = apply_soft(in.attrs);
    out.attrs = std::move(soft.attrs);
    out.n_soft_modified = soft.n_modified;
  }

  switch (kind) {
    case ScenarioKind::Baseline:
    case ScenarioKind::SoftBrexit:
      out.flows = in.flows;
      for (const auto& f : in.flows) out.substitution_log.push_back(entry_for(f, f, Disposition::Kept));
      break;
    case ScenarioKind::RegulatoryAlignment:
    case ScenarioKind::HardBrexit: {
      const auto targets = uk_destinations(in.attrs, kind == ScenarioKind::HardBrexit);
      auto t = apply_tariffs(in.flows, in.tariffs, targets, options.incidence);
      for (std::size_t i = 0; i < in.flows.size(); ++i) {
        const bool hit = targets.count(in.flows[i].destination) > 0;
        auto e = entry_for(in.flows[i], t.flows[i], hit ? Disposition::Tariffed : Disposition::Kept);
        e.missing_rate = hit && !in.tariffs.rate(in.flows[i].hs6());
        out.substitution_log.push_back(std::move(e));
      }
      out.flows = std::move(t.flows);
      out.n_tariffed = t.n_tariffed;
      out.n_missing_rate = t.n_missing_rate;
      break;
    }
    case ScenarioKind::LongTermHardBrexit: {
      auto s = apply_substitution(in.flows, in.attrs, in.tariffs, uk_destinations(in.attrs, true), options.incidence);
      out.flows = std::move(s.flows);
      out.substitution_log = std::move(s.log);
      out.n_missing_rate = s.n_missing_rate;
      for (const auto& e : out.substitution_log)
        if (e.disposition == Disposition::Tariffed) ++out.n_tariffed;
      break;
    }
  }

  out.totals = value_totals(out.flows, in.attrs, in.sectors);
  if (options.refit) {
    const RemotenessByYear* r = in.remoteness ? &*in.remoteness : nullptr;
    out.fits = estimate_sectors(out.flows, out.attrs, in.sectors, r, options.estimate);
  }
  return out;
}

double indicator_relative_impact(double beta_scenario, double beta_soft) {
  return std::expm1(beta_scenario - beta_soft) * 100.0;
}

double continuous_relative_impact(double beta_scenario, double beta_soft) {
  if (beta_soft == 0.0) throw Error(ErrorCode::ZeroBaseline, "relative change from a zero coefficient");
  return (beta_scenario - beta_soft) / beta_soft * 100.0;
}

double worst_case_two_se(double delta, double se) {
  if (se < 0) throw Error(ErrorCode::InvalidArgument, "standard error must be non-negative");
  return std::expm1(delta - 2.0 * se) * 100.0;
}

std::map<Sector, double> eu28_impact(const ScenarioOutcome& scenario, const ScenarioOutcome& soft) {
  std::map<Sector, double> out;
  for (const auto& [sector, groups] : soft.totals) {
    const Cents base = groups.at(DestinationGroup::EU28);
    if (base == 0)
      throw Error(ErrorCode::ZeroBaseValue, "EU-28 soft value is zero for " + std::string(sector_label(sector)));
    auto it = scenario.totals.find(sector);
    const Cents now = it == scenario.totals.end() ? 0 : it->second.at(DestinationGroup::EU28);
    out[sector] = 100.0 * static_cast<double>(now - base) / static_cast<double>(base);
  }
  return out;
}

GniAdjustment gni_adjustment(double gni_star, double soft_total, double scenario_total) {
  if (!(gni_star > 0) || !(soft_total > 0) || !(scenario_total > 0))
    throw Error(ErrorCode::InvalidArgument, "GNI* inputs must be positive");
  GniAdjustment g;
  g.adjusted = gni_star - (soft_total - scenario_total);
  g.percent = 100.0 * (g.adjusted - gni_star) / gni_star;
  return g;
}

std::optional<double> ImpactReport::value(Sector s, std::string_view metric) const {
  for (const auto& r : rows)
    if (r.sector == s && r.metric == metric) return r.value;
  return std::nullopt;
}

ImpactReport build_impact_report(const ScenarioOutcome& scenario, const ScenarioOutcome& soft,
                                 const ScenarioOutcome* baseline, const std::optional<GniInputs>& gni) {
  ImpactReport rep;
  rep.kind = scenario.kind;
  rep.incidence = scenario.incidence;

  std::map<Sector, double> eu28;
  for (Sector s : kAllSectors) {
    const auto& base = soft.totals.count(s) ? soft.totals.at(s).at(DestinationGroup::EU28) : 0;
    if (base != 0) {
      const Cents now = scenario.totals.count(s) ? scenario.totals.at(s).at(DestinationGroup::EU28) : 0;
      eu28[s] = 100.0 * static_cast<double>(now - base) / static_cast<double>(base);
    }
  }

  for (Sector s : kAllSectors) {
    const SectorFit* sc = scenario.fit_for(s);
    const SectorFit* so = soft.fit_for(s);
    const bool have = sc && so && sc->fit && so->fit;
    if (have) {
      const FitResult& fs = *sc->fit;
      const FitResult& fb = *so->fit;
      for (std::string_view ind : {"gb", "ni"}) {
        auto i = fs.index_of(ind);
        auto j = fb.index_of(ind);
        if (!i || !j) continue;
        const double bs = fs.coefficients[static_cast<Eigen::Index>(*i)];
        const double bb = fb.coefficients[static_cast<Eigen::Index>(*j)];
        rep.rows.push_back({s, std::string(ind) + "_relative_impact_pct", indicator_relative_impact(bs, bb)});
        if (fs.covariance_robust) {
          const double se = std::sqrt(std::max(0.0, (*fs.covariance_robust)(static_cast<Eigen::Index>(*i),
                                                                              static_cast<Eigen::Index>(*i))));
          rep.rows.push_back({s, std::string(ind) + "_worst_case_two_se_pct", worst_case_two_se(bs - bb, se)});
        }
      }
      for (auto [col, label] : {std::pair{"log_gdp", "gdp"}, std::pair{"log_distance", "distance"}}) {
        auto i = fs.index_of(col);
        auto j = fb.index_of(col);
        if (!i || !j) continue;
        const double bb = fb.coefficients[static_cast<Eigen::Index>(*j)];
        if (bb == 0.0) continue;
        rep.rows.push_back({s, std::string(label) + "_relative_impact_pct",
                            continuous_relative_impact(fs.coefficients[static_cast<Eigen::Index>(*i)], bb)});
      }
    }
    if (auto it = eu28.find(s); it != eu28.end()) rep.rows.push_back({s, "eu28_value_impact_pct", it->second});
    if (baseline) {
      const SectorFit* bl = baseline->fit_for(s);
      if (sc && bl && sc->fit && bl->fit) {
        const FitResult& fs = *sc->fit;
        const FitResult& fb = *bl->fit;
        for (std::string_view ind : {"gb", "ni"}) {
          auto i = fs.index_of(ind);
          auto j = fb.index_of(ind);
          if (i && j)
            rep.rows.push_back({s, std::string(ind) + "_shift_vs_baseline",
                                fs.coefficients[static_cast<Eigen::Index>(*i)] -
                                    fb.coefficients[static_cast<Eigen::Index>(*j)]});
        }
        if (auto e = fb.index_of("eu"))
          rep.rows.push_back({s, "eu_baseline_coefficient", fb.coefficients[static_cast<Eigen::Index>(*e)]});
      }
    }
  }

  if (gni) {
    GniBlock b;
    b.gni_star = gni->gni_star;
    auto world_bn = [](const ScenarioOutcome& o) {
      return static_cast<double>(o.totals.at(Sector::AllSectors).at(DestinationGroup::World)) / 1e11;
    };
    b.soft_total = gni->soft_total.value_or(world_bn(soft));
    b.scenario_total = gni->scenario_total.value_or(world_bn(scenario));
    b.result = gni_adjustment(b.gni_star, b.soft_total, b.scenario_total);
    rep.gni = b;
  }
  return rep;
}

}  // namespace gravimetric
