#include "gravimetric/report.hpp"

#include "csv.hpp"

#include <cmath>
#include <set>

namespace gravimetric {

namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json matrix_json(const std::optional<Eigen::MatrixXd>& m) {
  if (!m) return nullptr;
  json rows = json::array();
  for (Eigen::Index i = 0; i < m->rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m->cols(); ++j) row.push_back(number_or_null((*m)(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class T>
json opt_json(const std::optional<T>& v) {
  if (!v) return nullptr;
  return number_or_null(*v);
}

std::string cell_or_na(double v) { return std::isfinite(v) ? csv::format_double(v) : "NA"; }

}  // namespace

json fit_to_json(const SectorFit& sf, Estimator estimator, const std::string& manifest) {
  json j;
  j["manifest"] = manifest;
  j["sector"] = sector_label(sf.sector);
  j["estimator"] = estimator_name(estimator);
  j["spec_echo"] = to_json(sf.spec);
  j["merge"] = {{"n_flows_read", sf.merge.n_flows_read}, {"n_attrs_read", sf.merge.n_attrs_read},
                {"n_cells", sf.merge.n_cells},           {"n_matched", sf.merge.n_matched},
                {"n_dropped_no_attrs", sf.merge.n_dropped_no_attrs}, {"n_clamped", sf.merge.n_clamped},
                {"duplicate_keys", sf.merge.duplicate_keys}};
  j["metadata"] = {
      {"fixed_effect_reference", sf.fe_reference ? json(*sf.fe_reference) : json(nullptr)},
      {"remoteness_reference_year", sf.remoteness_reference_year ? json(*sf.remoteness_reference_year) : json(nullptr)},
      {"significance_test", "two-sided normal approximation, 1% level"},
      {"robust_covariance", "cluster sandwich by destination with small-sample factor G/(G-1)"},
      {"remoteness_weights", "self-expenditure excluded, weights renormalised over partners"},
  };
  if (sf.error) {
    j["error"] = {{"code", error_code_name(*sf.error)}, {"message", sf.message}};
  } else {
    j["error"] = nullptr;
  }
  if (!sf.fit) {
    j["fit"] = nullptr;
    return j;
  }
  const FitResult& f = *sf.fit;
  json fit;
  fit["names"] = f.names;
  json coef = json::array();
  for (Eigen::Index k = 0; k < f.coefficients.size(); ++k) coef.push_back(number_or_null(f.coefficients[k]));
  fit["coefficients"] = coef;
  Eigen::VectorXd se = f.robust_se();
  Eigen::VectorXd cv = f.cv_per_coef();
  json se_j = json::array(), cv_j = json::array();
  for (Eigen::Index k = 0; k < se.size(); ++k) {
    se_j.push_back(number_or_null(se[k]));
    cv_j.push_back(number_or_null(cv[k]));
  }
  fit["robust_se"] = se_j;
  fit["cv"] = cv_j;
  fit["covariance_model"] = matrix_json(f.covariance_model);
  fit["covariance_robust"] = matrix_json(f.covariance_robust);
  fit["covariance_withheld"] = !f.covariance_robust.has_value();
  fit["loglik"] = number_or_null(f.loglik);
  fit["deviance"] = number_or_null(f.deviance);
  fit["null_deviance"] = number_or_null(f.null_deviance);
  fit["pseudo_r2"] = opt_json(f.pseudo_r2);
  fit["r2"] = opt_json(f.r2);
  fit["r2_adjusted"] = opt_json(f.r2_adjusted);
  fit["dispersion"] = opt_json(f.dispersion);
  fit["n_obs"] = f.n_obs;
  fit["n_dropped_zeros"] = f.n_dropped_zeros;
  fit["n_clusters"] = f.n_clusters;
  fit["small_sample_factor"] = f.small_sample_factor;
  fit["converged"] = f.converged;
  fit["iterations"] = f.iterations;
  j["fit"] = std::move(fit);
  return j;
}

std::string coefficient_table_csv(const FitResult& fit) {
  std::string s = "name,estimate,robust_se,cv,significant_at_1pct\n";
  Eigen::VectorXd se = fit.robust_se();
  Eigen::VectorXd cv = fit.cv_per_coef();
  for (std::size_t k = 0; k < fit.names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    const bool have_se = std::isfinite(se[i]);
    s += fit.names[k] + ',' + csv::format_double(fit.coefficients[i]) + ',' + cell_or_na(se[i]) + ',' +
         cell_or_na(cv[i]) + ',' + (have_se ? (significant_at_1pct(fit.coefficients[i], se[i]) ? "1" : "0") : "NA") +
         '\n';
  }
  return s;
}

void write_sector_fit(const std::filesystem::path& dir, const SectorFit& sf, Estimator estimator,
                      const std::string& manifest) {
  const std::string slug(sector_slug(sf.sector));
  if (sf.fit) csv::write_file(dir / ("coefficients_" + slug + ".csv"), coefficient_table_csv(*sf.fit));
  csv::write_file(dir / ("fit_" + slug + ".json"), fit_to_json(sf, estimator, manifest).dump(2) + "\n");
}

std::string impact_csv(const ImpactReport& report) {
  std::string s = "sector,metric,value\n";
  for (const auto& r : report.rows)
    s += std::string(sector_slug(r.sector)) + ',' + r.metric + ',' + cell_or_na(r.value) + '\n';
  if (report.gni) {
    const auto& g = *report.gni;
    for (auto [name, v] : {std::pair{"gni_star", g.gni_star}, std::pair{"soft_total", g.soft_total},
                           std::pair{"scenario_total", g.scenario_total}, std::pair{"gni_adjusted", g.result.adjusted},
                           std::pair{"gni_percent_change", g.result.percent}})
      s += std::string("all,") + name + ',' + cell_or_na(v) + '\n';
  }
  return s;
}

std::string impact_markdown(const ImpactReport& report) {
  std::vector<Sector> sectors;
  std::vector<std::string> metrics;
  {
    std::set<Sector> seen_s;
    std::set<std::string> seen_m;
    for (Sector s : kAllSectors)
      for (const auto& r : report.rows)
        if (r.sector == s && seen_s.insert(s).second) sectors.push_back(s);
    for (const auto& r : report.rows)
      if (seen_m.insert(r.metric).second) metrics.push_back(r.metric);
  }
  char buf[64];
  std::string s = "# Impact of scenario '" + std::string(scenario_name(report.kind)) + "' relative to soft\n\n";
  s += "Tariff incidence: " + std::string(incidence_name(report.incidence)) +
       ". Worst-case rows use the scenario fit's robust SE of the indicator.\n\n";
  s += "| Metric |";
  for (Sector sec : sectors) s += " " + std::string(sector_label(sec)) + " |";
  s += "\n|---|";
  for (std::size_t i = 0; i < sectors.size(); ++i) s += "---:|";
  s += "\n";
  for (const auto& m : metrics) {
    s += "| " + m + " |";
    for (Sector sec : sectors) {
      auto v = report.value(sec, m);
      if (v) {
        std::snprintf(buf, sizeof buf, " %.1f |", *v);
        s += buf;
      } else {
        s += " |";
      }
    }
    s += "\n";
  }
  if (report.gni) {
    const auto& g = *report.gni;
    s += "\n## GNI* adjustment\n\n| GNI* | Soft exports | Scenario exports | Change | Adjusted GNI* | Change (%) |\n";
    s += "|---:|---:|---:|---:|---:|---:|\n";
    std::snprintf(buf, sizeof buf, "| %.1f ", g.gni_star);
    s += buf;
    std::snprintf(buf, sizeof buf, "| %.1f ", g.soft_total);
    s += buf;
    std::snprintf(buf, sizeof buf, "| %.1f ", g.scenario_total);
    s += buf;
    std::snprintf(buf, sizeof buf, "| %.1f ", g.soft_total - g.scenario_total);
    s += buf;
    std::snprintf(buf, sizeof buf, "| %.1f ", g.result.adjusted);
    s += buf;
    std::snprintf(buf, sizeof buf, "| %.1f |\n", g.result.percent);
    s += buf;
  }
  return s;
}

std::string substitution_csv(std::span<const SubstitutionEntry> log) {
  std::string s = "year,cn8,old_dest,disposition,new_dest,old_value,new_value\n";
  for (const auto& e : log)
    s += std::to_string(e.year) + ',' + e.cn8 + ',' + e.old_dest + ',' + std::string(disposition_name(e.disposition)) +
         ',' + e.new_dest + ',' + format_cents(e.old_value) + ',' + format_cents(e.new_value) + '\n';
  return s;
}

}  // namespace gravimetric
