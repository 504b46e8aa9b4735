#pragma once

#include "gravimetric/datamodel.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gravimetric {

enum class ResponseScale { Natural, Log };
enum class ContinuousAttribute { Gdp, Population, Area, Distance, Religion };
enum class RemotenessMode { PerYear, Single };

std::string_view attribute_name(ContinuousAttribute a) noexcept;
std::optional<ContinuousAttribute> parse_attribute(std::string_view name) noexcept;

/// Declarative gravity model. Every continuous term enters as a natural log.
struct ModelSpec {
  ResponseScale response_scale = ResponseScale::Natural;
  std::vector<ContinuousAttribute> continuous_terms;
  bool time_term = false;  // log(year - 1992)
  std::vector<Indicator> indicator_terms;
  bool remoteness_terms = false;
  RemotenessMode remoteness_mode = RemotenessMode::PerYear;
  bool importer_fixed_effects = false;
  std::string cluster_by = "destination";
  bool intercept = true;

  /// Throws InvalidSpec (e.g. time_term together with remoteness_terms).
  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);
ModelSpec parse_model_spec_json(std::string_view text);
ModelSpec parse_model_spec_toml(std::string_view text);
/// Chooses the parser from the extension (.json or .toml).
ModelSpec load_model_spec(const std::filesystem::path& path);

/// Classical specification: log GDP, population, area, distance,
/// religion share, log(year-1992), all seven indicators.
ModelSpec classical_spec();
/// Remoteness variant: time term replaced by the year-interacted remoteness block.
ModelSpec remoteness_spec();

inline constexpr int kTimeOrigin = 1992;

struct DesignMatrix {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> names;
  std::vector<std::string> clusters;
  std::vector<int> years;
  std::vector<std::string> destinations;
  ModelSpec spec_echo;
  std::size_t n_dropped_zeros = 0;
  std::optional<std::string> fe_reference;
  // Year whose remoteness column is omitted (per-year block with an intercept).
  std::optional<int> remoteness_reference_year;

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }
  bool has_intercept() const { return !names.empty() && names.front() == "intercept"; }
};

/// Realizes `spec` on a merged dataset. Response in euros (natural scale) or
/// log euros with zero rows dropped (log scale). Throws NonPositiveUnderLog,
/// MissingRemoteness, RankDeficient (offending columns named), InvalidSpec.
DesignMatrix build_design(std::span<const GravityObservation> dataset, const ModelSpec& spec);

/// Pivoted-QR rank check with relative tolerance 1e-10 of the largest pivot.
/// Returns the names of columns that are linearly dependent on earlier ones.
/// Failing that attribution, the columns the pivoting left out.
std::vector<std::string> dependent_columns(const Eigen::MatrixXd& X, std::span<const std::string> names);

}  // namespace gravimetric
