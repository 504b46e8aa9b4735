#include "gravimetric/datamodel.hpp"

#include "gravimetric/error.hpp"

#include <cctype>
#include <cmath>
#include <limits>

namespace gravimetric {

namespace {

bool all_digits(std::string_view s) {
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

}  // namespace

Cents parse_cents(std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::BadNumber, "empty money value");
  if (text.front() == '-') throw Error(ErrorCode::NegativeValue, std::string(text));
  if (text.front() == '+') text.remove_prefix(1);
  auto dot = text.find('.');
  std::string_view whole = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if ((whole.empty() && frac.empty()) || !all_digits(whole) || !all_digits(frac) || frac.size() > 2)
    throw Error(ErrorCode::BadNumber, "not a money amount with at most 2 decimals: " + std::string(text));
  if (whole.size() > 16) throw Error(ErrorCode::BadNumber, "money amount too large: " + std::string(text));
  Cents euros = 0;
  for (char c : whole) euros = euros * 10 + (c - '0');
  Cents cents = 0;
  if (frac.size() >= 1) cents += 10 * (frac[0] - '0');
  if (frac.size() == 2) cents += frac[1] - '0';
  return euros * 100 + cents;
}

std::string format_cents(Cents c) {
  std::string sign = c < 0 ? "-" : "";
  Cents a = c < 0 ? -c : c;
  Cents frac = a % 100;
  std::string out = sign + std::to_string(a / 100);
  if (frac != 0) {
    out += '.';
    out += static_cast<char>('0' + frac / 10);
    if (frac % 10 != 0) out += static_cast<char>('0' + frac % 10);
  }
  return out;
}

bool is_cn8(std::string_view code) { return code.size() == 8 && all_digits(code); }
bool is_hs6(std::string_view code) { return code.size() == 6 && all_digits(code); }

bool is_country_code(std::string_view code) {
  if (code.size() < 2 || code.size() > 3) return false;
  for (char c : code)
    if (!std::isupper(static_cast<unsigned char>(c))) return false;
  return true;
}

std::string_view indicator_name(Indicator ind) noexcept {
  switch (ind) {
    case Indicator::GB: return "gb";
    case Indicator::NI: return "ni";
    case Indicator::GattWto: return "gatt_wto";
    case Indicator::English: return "english";
    case Indicator::EU: return "eu";
    case Indicator::Euro: return "euro";
    case Indicator::Legal: return "legal";
  }
  return "";
}

std::optional<Indicator> parse_indicator(std::string_view name) noexcept {
  for (Indicator ind : kAllIndicators)
    if (indicator_name(ind) == name) return ind;
  return std::nullopt;
}

bool IndicatorFlags::get(Indicator ind) const noexcept {
  switch (ind) {
    case Indicator::GB: return gb;
    case Indicator::NI: return ni;
    case Indicator::GattWto: return gatt_wto;
    case Indicator::English: return english;
    case Indicator::EU: return eu;
    case Indicator::Euro: return euro;
    case Indicator::Legal: return legal;
  }
  return false;
}

void IndicatorFlags::set(Indicator ind, bool value) noexcept {
  switch (ind) {
    case Indicator::GB: gb = value; break;
    case Indicator::NI: ni = value; break;
    case Indicator::GattWto: gatt_wto = value; break;
    case Indicator::English: english = value; break;
    case Indicator::EU: eu = value; break;
    case Indicator::Euro: euro = value; break;
    case Indicator::Legal: legal = value; break;
  }
}

std::string_view sector_label(Sector s) noexcept {
  switch (s) {
    case Sector::Agriculture: return "Agriculture/Forestry/Fishing";
    case Sector::Mining: return "Mining/Quarrying";
    case Sector::FoodBeverage: return "Food/Beverage";
    case Sector::Textiles: return "Textiles";
    case Sector::WoodPaper: return "Wood/Paper";
    case Sector::ChemicalsPharma: return "Chemicals/Pharma/Rubber";
    case Sector::MetalsMachinery: return "Metals/Machinery";
    case Sector::OtherProducts: return "OtherProducts";
    case Sector::AllSectors: return "AllSectors";
  }
  return "";
}

std::string_view sector_slug(Sector s) noexcept {
  switch (s) {
    case Sector::Agriculture: return "agriculture";
    case Sector::Mining: return "mining";
    case Sector::FoodBeverage: return "food_beverage";
    case Sector::Textiles: return "textiles";
    case Sector::WoodPaper: return "wood_paper";
    case Sector::ChemicalsPharma: return "chemicals_pharma";
    case Sector::MetalsMachinery: return "metals_machinery";
    case Sector::OtherProducts: return "other_products";
    case Sector::AllSectors: return "all";
  }
  return "";
}

std::optional<Sector> parse_sector(std::string_view text) noexcept {
  for (Sector s : kAllSectors)
    if (sector_label(s) == text || sector_slug(s) == text) return s;
  return std::nullopt;
}

void SectorMap::add(std::string prefix, Sector sector) {
  if (prefix.size() < 2 || prefix.size() > 8 || !all_digits(prefix))
    throw Error(ErrorCode::BadCode, "sector prefix must be 2-8 digits: " + prefix);
  if (sector == Sector::AllSectors)
    throw Error(ErrorCode::InvalidArgument, "AllSectors is an aggregate, not a mapping target");
  auto [it, inserted] = rules_.emplace(prefix, sector);
  if (!inserted && it->second != sector)
    throw Error(ErrorCode::DuplicateAttributeKey, "conflicting sector rules for prefix " + prefix);
}

std::optional<Sector> SectorMap::find(std::string_view cn8) const noexcept {
  for (std::size_t len = std::min<std::size_t>(8, cn8.size()); len >= 2; --len) {
    auto it = rules_.find(std::string(cn8.substr(0, len)));
    if (it != rules_.end()) return it->second;
  }
  return std::nullopt;
}

Sector SectorMap::sector_of(std::string_view cn8) const {
  if (!is_cn8(cn8)) throw Error(ErrorCode::BadCode, "not an 8-digit CN code: " + std::string(cn8));
  if (auto s = find(cn8)) return *s;
  throw Error(ErrorCode::NoSectorMatch, "no sector prefix matches " + std::string(cn8));
}

std::string_view estimator_name(Estimator e) noexcept {
  switch (e) {
    case Estimator::OLS: return "ols";
    case Estimator::PPML: return "ppml";
    case Estimator::NBPML: return "nbpml";
  }
  return "";
}

std::optional<Estimator> parse_estimator(std::string_view text) noexcept {
  for (Estimator e : {Estimator::OLS, Estimator::PPML, Estimator::NBPML})
    if (estimator_name(e) == text) return e;
  return std::nullopt;
}

std::optional<std::size_t> FitResult::index_of(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  return std::nullopt;
}

double FitResult::coefficient(std::string_view name) const {
  auto i = index_of(name);
  if (!i) throw Error(ErrorCode::InvalidArgument, "no coefficient named " + std::string(name));
  return coefficients[static_cast<Eigen::Index>(*i)];
}

Eigen::VectorXd FitResult::robust_se() const {
  const auto p = coefficients.size();
  if (!covariance_robust) return Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
  return covariance_robust->diagonal().cwiseMax(0.0).cwiseSqrt();
}

Eigen::VectorXd FitResult::cv_per_coef() const {
  Eigen::VectorXd se = robust_se();
  Eigen::VectorXd cv(coefficients.size());
  for (Eigen::Index k = 0; k < cv.size(); ++k)
    cv[k] = coefficients[k] == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                   : se[k] / std::abs(coefficients[k]);
  return cv;
}

}  // namespace gravimetric
