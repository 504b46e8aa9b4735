#pragma once

// Counterfactual trade-policy scenarios: EU indicator flip, ad-valorem
// tariffs on UK-bound goods, and long-run market substitution into the EU-27,
// followed by re-estimation and impact metrics.

#include "gravimetric/datamodel.hpp"
#include "gravimetric/pipeline.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace gravimetric {

enum class ScenarioKind { Baseline, SoftBrexit, RegulatoryAlignment, HardBrexit, LongTermHardBrexit };

/// "baseline", "soft", "regalign", "hard", "longterm".
std::string_view scenario_name(ScenarioKind k) noexcept;
std::optional<ScenarioKind> parse_scenario(std::string_view text) noexcept;

enum class TariffIncidence {
  Multiplicative,  // value * (1 - rate)
  Divisive,        // value / (1 + rate)
};

std::string_view incidence_name(TariffIncidence t) noexcept;
std::optional<TariffIncidence> parse_incidence(std::string_view text) noexcept;

class TariffSchedule {
public:
  TariffSchedule() = default;
  explicit TariffSchedule(std::span<const TariffLine> lines);
  std::optional<double> rate(std::string_view hs6) const;
  std::size_t size() const noexcept { return rates_.size(); }

private:
  std::map<std::string, double, std::less<>> rates_;
};

/// Throws RateAbove100Pct when rate > 1.
Cents tariffed_value(Cents value, double rate, TariffIncidence incidence);

struct SoftResult {
  std::vector<CountryYearAttributes> attrs;
  std::size_t n_modified = 0;
};

/// Clears the eu flag on every gb/ni row; nothing else changes.
SoftResult apply_soft(std::span<const CountryYearAttributes> attrs);

/// Destinations flagged gb (and ni when `include_ni`) in any year.
std::set<std::string> uk_destinations(std::span<const CountryYearAttributes> attrs, bool include_ni = true);

enum class Disposition { Kept, Tariffed, Reassigned, Flagged };
std::string_view disposition_name(Disposition d) noexcept;

struct SubstitutionEntry {
  int year = 0;
  std::string cn8;
  std::string old_dest;
  Disposition disposition = Disposition::Kept;
  std::string new_dest;
  Cents old_value = 0;
  Cents new_value = 0;
  bool missing_rate = false;

  bool operator==(const SubstitutionEntry&) const = default;
};

struct TariffApplication {
  std::vector<TradeFlowRecord> flows;
  std::size_t n_tariffed = 0;
  std::size_t n_missing_rate = 0;  // targeted rows whose hs6 is absent (rate 0 applied)
};

TariffApplication apply_tariffs(std::span<const TradeFlowRecord> flows, const TariffSchedule& tariffs,
                                const std::set<std::string>& targets,
                                TariffIncidence incidence = TariffIncidence::Multiplicative);

struct SubstitutionResult {
  std::vector<TradeFlowRecord> flows;
  std::vector<SubstitutionEntry> log;  // one entry per input record, input order
  std::size_t n_missing_rate = 0;
};

/// For each target-bound record: move it to the EU-27 destination with the
/// largest value of the same (cn8, year) (ties: lexicographic ISO) and reprice
/// at that destination's unit value; without volumes on both sides keep the
/// value and flag it. With no EU-27 candidate, keep the destination and tariff.
SubstitutionResult apply_substitution(std::span<const TradeFlowRecord> flows,
                                      std::span<const CountryYearAttributes> attrs, const TariffSchedule& tariffs,
                                      const std::set<std::string>& targets,
                                      TariffIncidence incidence = TariffIncidence::Multiplicative);

enum class DestinationGroup { GB, NI, EU27, EU28, World };
std::string_view group_name(DestinationGroup g) noexcept;

/// Value sums in cents by sector (including AllSectors) and destination group.
using ValueTotals = std::map<Sector, std::map<DestinationGroup, Cents>>;

/// Group membership comes from `baseline_attrs`: gb rows -> GB, ni rows -> NI,
/// other eu rows -> EU27; EU28 is their union.
ValueTotals value_totals(std::span<const TradeFlowRecord> flows, std::span<const CountryYearAttributes> baseline_attrs,
                         const SectorMap& sectors);

struct BaselineInputs {
  std::vector<TradeFlowRecord> flows;
  std::vector<CountryYearAttributes> attrs;
  SectorMap sectors;
  TariffSchedule tariffs;
  std::optional<RemotenessByYear> remoteness;
};

struct ScenarioOptions {
  EstimateRequest estimate;
  TariffIncidence incidence = TariffIncidence::Multiplicative;
  bool refit = true;
};

struct ScenarioOutcome {
  ScenarioKind kind = ScenarioKind::Baseline;
  TariffIncidence incidence = TariffIncidence::Multiplicative;
  std::vector<TradeFlowRecord> flows;
  std::vector<CountryYearAttributes> attrs;
  std::vector<SectorFit> fits;
  std::vector<SubstitutionEntry> substitution_log;
  ValueTotals totals;
  std::size_t n_soft_modified = 0;
  std::size_t n_tariffed = 0;
  std::size_t n_missing_rate = 0;

  const SectorFit* fit_for(Sector s) const noexcept;
};

/// Soft: indicator flip. RegulatoryAlignment: flip + tariffs on GB only.
/// Hard: flip + tariffs on GB and NI. LongTermHard: flip + substitution.
/// Then re-estimates every requested sector with the same spec.
ScenarioOutcome run_scenario(ScenarioKind kind, const BaselineInputs& inputs, const ScenarioOptions& options);

// Impact arithmetic.

/// (exp(beta_scenario - beta_soft) - 1) * 100.
double indicator_relative_impact(double beta_scenario, double beta_soft);
/// (beta_scenario - beta_soft) / beta_soft * 100. Throws ZeroBaseline.
double continuous_relative_impact(double beta_scenario, double beta_soft);
/// (exp(delta - 2 se) - 1) * 100.
double worst_case_two_se(double delta, double se);

/// 100 * (V_scenario - V_soft) / V_soft on EU-28 value totals, per sector.
/// Throws ZeroBaseValue(sector).
std::map<Sector, double> eu28_impact(const ScenarioOutcome& scenario, const ScenarioOutcome& soft);

struct GniAdjustment {
  double adjusted = 0;
  double percent = 0;
};
GniAdjustment gni_adjustment(double gni_star, double soft_total, double scenario_total);

struct ImpactRow {
  Sector sector = Sector::AllSectors;
  std::string metric;
  double value = 0;
};

struct GniBlock {
  double gni_star = 0;
  double soft_total = 0;
  double scenario_total = 0;
  GniAdjustment result;
};

struct ImpactReport {
  ScenarioKind kind = ScenarioKind::SoftBrexit;
  TariffIncidence incidence = TariffIncidence::Multiplicative;
  std::vector<ImpactRow> rows;
  std::optional<GniBlock> gni;

  std::optional<double> value(Sector s, std::string_view metric) const;
};

struct GniInputs {
  double gni_star = 0;
  // Exports totals in the same unit as gni_star; default: World all-sector
  // values of the two outcomes in EUR bn.
  std::optional<double> soft_total;
  std::optional<double> scenario_total;
};

/// Worst-case rows use the scenario fit's robust SE of the indicator.
/// `baseline` (optional) adds the coefficient-shift rows.
ImpactReport build_impact_report(const ScenarioOutcome& scenario, const ScenarioOutcome& soft,
                                 const ScenarioOutcome* baseline = nullptr,
                                 const std::optional<GniInputs>& gni = std::nullopt);

}  // namespace gravimetric
