#include "gravimetric/design.hpp"

#include "gravimetric/error.hpp"

#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace gravimetric {

namespace {

using nlohmann::json;

json toml_to_json(const toml::node& node) {
  if (auto t = node.as_table()) {
    json out = json::object();
    for (auto&& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
    return out;
  }
  if (auto a = node.as_array()) {
    json out = json::array();
    for (auto&& v : *a) out.push_back(toml_to_json(v));
    return out;
  }
  if (auto s = node.as_string()) return s->get();
  if (auto b = node.as_boolean()) return b->get();
  if (auto i = node.as_integer()) return i->get();
  if (auto f = node.as_floating_point()) return f->get();
  throw Error(ErrorCode::InvalidSpec, "unsupported TOML value type in model spec");
}

double attribute_value(const CountryYearAttributes& a, ContinuousAttribute attr) {
  switch (attr) {
    case ContinuousAttribute::Gdp: return a.gdp;
    case ContinuousAttribute::Population: return a.population;
    case ContinuousAttribute::Area: return a.area_km2;
    case ContinuousAttribute::Distance: return a.distance_km;
    case ContinuousAttribute::Religion: return a.religion_share;
  }
  return 0;
}

double checked_log(double v, std::string_view what, std::size_t row) {
  if (!(v > 0) || !std::isfinite(v))
    throw Error(ErrorCode::NonPositiveUnderLog,
                std::string(what) + " at row " + std::to_string(row) + " is " + std::to_string(v));
  return std::log(v);
}

}  // namespace

std::string_view attribute_name(ContinuousAttribute a) noexcept {
  switch (a) {
    case ContinuousAttribute::Gdp: return "gdp";
    case ContinuousAttribute::Population: return "population";
    case ContinuousAttribute::Area: return "area";
    case ContinuousAttribute::Distance: return "distance";
    case ContinuousAttribute::Religion: return "religion";
  }
  return "";
}

std::optional<ContinuousAttribute> parse_attribute(std::string_view name) noexcept {
  for (auto a : {ContinuousAttribute::Gdp, ContinuousAttribute::Population, ContinuousAttribute::Area,
                 ContinuousAttribute::Distance, ContinuousAttribute::Religion})
    if (attribute_name(a) == name) return a;
  if (name == "area_km2") return ContinuousAttribute::Area;
  if (name == "distance_km") return ContinuousAttribute::Distance;
  if (name == "religion_share") return ContinuousAttribute::Religion;
  return std::nullopt;
}

void ModelSpec::validate() const {
  if (time_term && remoteness_terms)
    throw Error(ErrorCode::InvalidSpec, "time_term and remoteness_terms are mutually exclusive");
  if (cluster_by != "destination") throw Error(ErrorCode::InvalidSpec, "cluster_by must be 'destination'");
  std::set<ContinuousAttribute> c(continuous_terms.begin(), continuous_terms.end());
  if (c.size() != continuous_terms.size()) throw Error(ErrorCode::InvalidSpec, "repeated continuous term");
  std::set<Indicator> i(indicator_terms.begin(), indicator_terms.end());
  if (i.size() != indicator_terms.size()) throw Error(ErrorCode::InvalidSpec, "repeated indicator term");
}

json to_json(const ModelSpec& s) {
  json j;
  j["response"] = {{"variable", "value"}, {"scale", s.response_scale == ResponseScale::Log ? "log" : "natural"}};
  json cont = json::array();
  for (auto a : s.continuous_terms) cont.push_back({{"attribute", attribute_name(a)}, {"transform", "log"}});
  j["continuous_terms"] = cont;
  j["time_term"] = s.time_term;
  json ind = json::array();
  for (auto i : s.indicator_terms) ind.push_back(indicator_name(i));
  j["indicator_terms"] = ind;
  j["remoteness_terms"] = s.remoteness_terms;
  j["remoteness_mode"] = s.remoteness_mode == RemotenessMode::PerYear ? "per_year" : "single";
  j["importer_fixed_effects"] = s.importer_fixed_effects;
  j["cluster_by"] = s.cluster_by;
  j["intercept"] = s.intercept;
  return j;
}

ModelSpec model_spec_from_json(const json& j) {
  static const std::set<std::string> known = {"response", "continuous_terms", "time_term", "indicator_terms",
                                              "remoteness_terms", "remoteness_mode", "importer_fixed_effects",
                                              "cluster_by", "intercept"};
  if (!j.is_object()) throw Error(ErrorCode::InvalidSpec, "model spec must be an object");
  for (auto& [k, v] : j.items())
    if (!known.count(k)) throw Error(ErrorCode::InvalidSpec, "unknown model spec key '" + k + "'");
  ModelSpec s;
  try {
    if (j.contains("response")) {
      const auto& r = j.at("response");
      std::string scale = r.is_string() ? r.get<std::string>() : r.value("scale", std::string("natural"));
      if (scale == "log") s.response_scale = ResponseScale::Log;
      else if (scale != "natural") throw Error(ErrorCode::InvalidSpec, "response scale must be natural or log");
      if (r.is_object() && r.value("variable", std::string("value")) != "value")
        throw Error(ErrorCode::InvalidSpec, "response variable must be 'value'");
    }
    for (const auto& t : j.value("continuous_terms", json::array())) {
      std::string name = t.is_string() ? t.get<std::string>() : t.at("attribute").get<std::string>();
      if (t.is_object() && t.value("transform", std::string("log")) != "log")
        throw Error(ErrorCode::InvalidSpec, "only the log transform is supported");
      auto a = parse_attribute(name);
      if (!a) throw Error(ErrorCode::InvalidSpec, "unknown continuous attribute '" + name + "'");
      s.continuous_terms.push_back(*a);
    }
    s.time_term = j.value("time_term", false);
    for (const auto& t : j.value("indicator_terms", json::array())) {
      auto name = t.get<std::string>();
      auto ind = parse_indicator(name);
      if (!ind) throw Error(ErrorCode::InvalidSpec, "unknown indicator '" + name + "'");
      s.indicator_terms.push_back(*ind);
    }
    s.remoteness_terms = j.value("remoteness_terms", false);
    auto mode = j.value("remoteness_mode", std::string("per_year"));
    if (mode == "single") s.remoteness_mode = RemotenessMode::Single;
    else if (mode != "per_year") throw Error(ErrorCode::InvalidSpec, "remoteness_mode must be per_year or single");
    s.importer_fixed_effects = j.value("importer_fixed_effects", false);
    s.cluster_by = j.value("cluster_by", std::string("destination"));
    s.intercept = j.value("intercept", true);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, e.what());
  }
  s.validate();
  return s;
}

ModelSpec parse_model_spec_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, e.what());
  }
  return model_spec_from_json(j);
}

ModelSpec parse_model_spec_toml(std::string_view text) {
  try {
    auto table = toml::parse(text);
    return model_spec_from_json(toml_to_json(table));
  } catch (const toml::parse_error& e) {
    throw Error(ErrorCode::InvalidSpec, std::string(e.description()));
  }
}

ModelSpec load_model_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto ext = path.extension().string();
  if (ext == ".toml") return parse_model_spec_toml(ss.str());
  if (ext == ".json") return parse_model_spec_json(ss.str());
  throw Error(ErrorCode::InvalidSpec, "model spec must be .json or .toml: " + path.string());
}

ModelSpec classical_spec() {
  ModelSpec s;
  s.continuous_terms = {ContinuousAttribute::Gdp, ContinuousAttribute::Distance, ContinuousAttribute::Population,
                        ContinuousAttribute::Area, ContinuousAttribute::Religion};
  s.time_term = true;
  s.indicator_terms = {kAllIndicators.begin(), kAllIndicators.end()};
  return s;
}

ModelSpec remoteness_spec() {
  ModelSpec s = classical_spec();
  s.time_term = false;
  s.remoteness_terms = true;
  return s;
}

std::vector<std::string> dependent_columns(const Eigen::MatrixXd& X, std::span<const std::string> names) {
  std::vector<std::string> out;
  if (X.cols() == 0) return out;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() == X.cols()) return out;

  // Name the culprits in column order: a column is dependent when little of it
  // survives projection onto the kept earlier columns (Gram-Schmidt, twice).
  const auto deficit = X.cols() - qr.rank();
  std::vector<Eigen::VectorXd> basis;
  std::vector<std::pair<double, Eigen::Index>> residuals;
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    Eigen::VectorXd v = X.col(k);
    const double norm = v.norm();
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) v -= q.dot(v) * q;
    const double rel = norm > 0 ? v.norm() / norm : 0.0;
    residuals.emplace_back(rel, k);
    if (rel > 1e-8) basis.push_back(v / v.norm());
  }
  std::vector<Eigen::Index> bad;
  for (const auto& [rel, k] : residuals)
    if (rel <= 1e-8) bad.push_back(k);
  if (static_cast<Eigen::Index>(bad.size()) < deficit) {
    // Near-dependence the QR threshold sees but the projection does not: fall back to the pivot order.
    bad.clear();
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < X.cols(); ++k) bad.push_back(perm[k]);
    std::sort(bad.begin(), bad.end());
  }
  for (auto k : bad) out.push_back(names[static_cast<std::size_t>(k)]);
  return out;
}

DesignMatrix build_design(std::span<const GravityObservation> dataset, const ModelSpec& spec) {
  spec.validate();
  DesignMatrix d;
  d.spec_echo = spec;

  std::vector<const GravityObservation*> rows;
  rows.reserve(dataset.size());
  for (const auto& o : dataset) {
    if (o.value < 0) throw Error(ErrorCode::NegativeValue, "negative flow value for " + o.destination);
    if (spec.response_scale == ResponseScale::Log && o.value == 0) {
      ++d.n_dropped_zeros;
      continue;
    }
    rows.push_back(&o);
  }
  if (rows.empty()) {
    bool any_positive = std::any_of(dataset.begin(), dataset.end(), [](const auto& o) { return o.value > 0; });
    if (!dataset.empty() && !any_positive)
      throw Error(ErrorCode::AllZeroResponse, "every flow value is zero");
    throw Error(ErrorCode::InsufficientData, "no observations to build a design from");
  }

  std::vector<int> years;
  std::vector<std::string> countries;
  {
    std::set<int> ys;
    std::set<std::string> cs;
    for (auto* o : rows) {
      ys.insert(o->year);
      cs.insert(o->destination);
    }
    years.assign(ys.begin(), ys.end());
    countries.assign(cs.begin(), cs.end());
  }

  if (spec.intercept) d.names.push_back("intercept");
  for (auto a : spec.continuous_terms) d.names.push_back("log_" + std::string(attribute_name(a)));
  if (spec.time_term) d.names.push_back("log_time");
  for (auto i : spec.indicator_terms) d.names.push_back(std::string(indicator_name(i)));
  const auto remote_start = d.names.size();
  if (spec.remoteness_terms) {
    if (spec.remoteness_mode == RemotenessMode::PerYear) {
      // log r_t is constant within a year, so with an intercept one year is the reference.
      if (spec.intercept) d.remoteness_reference_year = years.front();
      for (int y : years)
        if (y != d.remoteness_reference_year) d.names.push_back("log_r_" + std::to_string(y));
    }
    else
      d.names.push_back("log_remoteness");
  }
  const auto fe_start = d.names.size();
  if (spec.importer_fixed_effects) {
    d.fe_reference = countries.front();
    for (std::size_t c = 1; c < countries.size(); ++c) d.names.push_back("fe_" + countries[c]);
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(d.names.size());
  d.X = Eigen::MatrixXd::Zero(n, p);
  d.y.resize(n);
  d.clusters.reserve(rows.size());
  d.years.reserve(rows.size());
  d.destinations.reserve(rows.size());

  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& o = *rows[static_cast<std::size_t>(r)];
    const auto row = static_cast<std::size_t>(r);
    double eur = cents_to_eur(o.value);
    d.y[r] = spec.response_scale == ResponseScale::Log ? std::log(eur) : eur;
    Eigen::Index k = 0;
    if (spec.intercept) d.X(r, k++) = 1.0;
    for (auto a : spec.continuous_terms) d.X(r, k++) = checked_log(attribute_value(o.attrs, a), attribute_name(a), row);
    if (spec.time_term) d.X(r, k++) = checked_log(static_cast<double>(o.year - kTimeOrigin), "year-1992", row);
    for (auto i : spec.indicator_terms) d.X(r, k++) = o.attrs.flags.get(i) ? 1.0 : 0.0;
    if (spec.remoteness_terms) {
      if (!o.remoteness)
        throw Error(ErrorCode::MissingRemoteness, "no remoteness index for year " + std::to_string(o.year));
      double lr = checked_log(*o.remoteness, "remoteness", row);
      if (spec.remoteness_mode == RemotenessMode::PerYear) {
        auto pos = std::lower_bound(years.begin(), years.end(), o.year) - years.begin();
        if (d.remoteness_reference_year) --pos;
        if (pos >= 0) d.X(r, static_cast<Eigen::Index>(remote_start) + pos) = lr;
      } else {
        d.X(r, static_cast<Eigen::Index>(remote_start)) = lr;
      }
    }
    if (spec.importer_fixed_effects) {
      auto pos = std::lower_bound(countries.begin(), countries.end(), o.destination) - countries.begin();
      if (pos > 0) d.X(r, static_cast<Eigen::Index>(fe_start) + pos - 1) = 1.0;
    }
    d.clusters.push_back(o.destination);
    d.years.push_back(o.year);
    d.destinations.push_back(o.destination);
  }

  auto bad = dependent_columns(d.X, d.names);
  if (!bad.empty()) {
    std::string list;
    for (const auto& b : bad) list += (list.empty() ? "" : ", ") + b;
    throw Error(ErrorCode::RankDeficient, "design is rank deficient; dependent columns: " + list);
  }
  return d;
}

}  // namespace gravimetric
