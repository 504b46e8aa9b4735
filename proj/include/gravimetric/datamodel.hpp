#pragma once

// Core value types shared across the toolkit. Money lives in integer euro
// cents until it reaches a numeric kernel.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gravimetric {

using Cents = std::int64_t;

inline double cents_to_eur(Cents c) { return static_cast<double>(c) / 100.0; }

/// Exact decimal parse of a non-negative euro amount with at most two
/// decimals ("1000", "12.5", "0.07"). Throws BadNumber / NegativeValue.
Cents parse_cents(std::string_view text);
std::string format_cents(Cents c);

bool is_cn8(std::string_view code);
bool is_hs6(std::string_view code);
bool is_country_code(std::string_view code);

struct TradeFlowRecord {
  int year = 0;
  std::string destination;
  std::string cn8;
  Cents value = 0;
  std::optional<double> volume;

  std::string hs6() const { return cn8.substr(0, 6); }
  bool operator==(const TradeFlowRecord&) const = default;
};

enum class Indicator { GB, NI, GattWto, English, EU, Euro, Legal };

inline constexpr std::array<Indicator, 7> kAllIndicators = {
    Indicator::GB,   Indicator::NI,   Indicator::GattWto, Indicator::English,
    Indicator::EU,   Indicator::Euro, Indicator::Legal};

std::string_view indicator_name(Indicator ind) noexcept;
std::optional<Indicator> parse_indicator(std::string_view name) noexcept;

struct IndicatorFlags {
  bool gb = false;
  bool ni = false;
  bool gatt_wto = false;
  bool english = false;
  bool eu = false;
  bool euro = false;
  bool legal = false;

  bool get(Indicator ind) const noexcept;
  void set(Indicator ind, bool value) noexcept;
  bool operator==(const IndicatorFlags&) const = default;
};

struct CountryYearAttributes {
  std::string iso;
  int year = 0;
  double gdp = 0;
  double population = 0;
  double area_km2 = 0;
  double distance_km = 0;
  double religion_share = 0;
  IndicatorFlags flags;

  bool operator==(const CountryYearAttributes&) const = default;
};

struct BilateralTradeRecord {
  int year = 0;
  std::string reporter;
  std::string partner;
  double flow_value = 0;

  bool operator==(const BilateralTradeRecord&) const = default;
};

struct TariffLine {
  std::string hs6;
  double rate = 0;

  bool operator==(const TariffLine&) const = default;
};

enum class Sector {
  Agriculture,
  Mining,
  FoodBeverage,
  Textiles,
  WoodPaper,
  ChemicalsPharma,
  MetalsMachinery,
  OtherProducts,
  AllSectors,
};

/// The eight mapped sectors followed by the AllSectors aggregate.
inline constexpr std::array<Sector, 9> kAllSectors = {
    Sector::Agriculture,     Sector::Mining,          Sector::FoodBeverage,
    Sector::Textiles,        Sector::WoodPaper,       Sector::ChemicalsPharma,
    Sector::MetalsMachinery, Sector::OtherProducts,   Sector::AllSectors};

std::string_view sector_label(Sector s) noexcept;
/// Filename-safe identifier, e.g. "food_beverage", "all".
std::string_view sector_slug(Sector s) noexcept;
/// Accepts either the label or the slug.
std::optional<Sector> parse_sector(std::string_view text) noexcept;

/// Longest-prefix lookup from CN code prefixes (2-8 digits) to sectors.
/// AllSectors is the union of every sector and is never a mapping target.
class SectorMap {
public:
  void add(std::string prefix, Sector sector);
  Sector sector_of(std::string_view cn8) const;
  std::optional<Sector> find(std::string_view cn8) const noexcept;
  const std::map<std::string, Sector>& rules() const noexcept { return rules_; }
  bool empty() const noexcept { return rules_.empty(); }

private:
  std::map<std::string, Sector> rules_;
};

inline Sector sector_of(std::string_view cn8, const SectorMap& map) { return map.sector_of(cn8); }

/// One aggregated flow cell joined to its destination-year attributes.
struct GravityObservation {
  int year = 0;
  std::string destination;
  std::string key;  // sector slug or cn8 for finer aggregation levels, else empty
  Cents value = 0;
  CountryYearAttributes attrs;
  std::optional<double> remoteness;
};

enum class Estimator { OLS, PPML, NBPML };

std::string_view estimator_name(Estimator e) noexcept;
std::optional<Estimator> parse_estimator(std::string_view text) noexcept;

struct FitResult {
  Estimator estimator = Estimator::PPML;
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  // Withheld (empty) when the NBPML Hessian is not positive definite.
  std::optional<Eigen::MatrixXd> covariance_model;
  std::optional<Eigen::MatrixXd> covariance_robust;
  // Fitted mean (PPML/NBPML) or fitted log value (OLS), one per used row.
  Eigen::VectorXd fitted;
  double loglik = 0;
  double deviance = 0;
  double null_deviance = 0;
  std::optional<double> pseudo_r2;
  std::optional<double> r2;
  std::optional<double> r2_adjusted;
  std::optional<double> dispersion;
  std::size_t n_obs = 0;
  std::size_t n_dropped_zeros = 0;
  std::size_t n_clusters = 0;
  double small_sample_factor = 1.0;
  bool has_intercept = false;
  bool converged = false;
  int iterations = 0;

  std::optional<std::size_t> index_of(std::string_view name) const noexcept;
  double coefficient(std::string_view name) const;
  /// Square roots of the robust covariance diagonal; NaN when withheld.
  Eigen::VectorXd robust_se() const;
  /// robust_se / |coef| per coefficient; NaN where the coefficient is zero.
  Eigen::VectorXd cv_per_coef() const;
};

}  // namespace gravimetric
