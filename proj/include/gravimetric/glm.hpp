#pragma once

// Gravity-model estimators: OLS on logs, Poisson PML and Negative-Binomial
// (NB2) PML with log link, plus cluster-robust inference and effect transforms.

#include "gravimetric/datamodel.hpp"
#include "gravimetric/design.hpp"
#include "gravimetric/error.hpp"

#include <span>

namespace gravimetric {

struct EstimatorOptions {
  int max_iterations = 100;
  double deviance_rel_tol = 1e-9;
  double coef_rel_tol = 1e-8;
  // Starting ridge for singular weighted normal equations; 0 picks a scale-aware start.
  double ridge_jitter = 0.0;

  void validate() const;
};

/// Thrown by fit_nbpml when the observed Hessian fails the symmetric
/// factorization test. The coefficients are still available via partial().
class HessianNotPositiveDefinite : public Error {
public:
  HessianNotPositiveDefinite(FitResult partial, const std::string& message)
      : Error(ErrorCode::HessianNotPositiveDefinite, message), partial_(std::move(partial)) {}
  const FitResult& partial() const noexcept { return partial_; }

private:
  FitResult partial_;
};

FitResult fit_ols(const DesignMatrix& design);
FitResult fit_ppml(const DesignMatrix& design, const EstimatorOptions& options = {});
FitResult fit_nbpml(const DesignMatrix& design, const EstimatorOptions& options = {});
FitResult fit_model(Estimator estimator, const DesignMatrix& design, const EstimatorOptions& options = {});

/// Cluster sandwich B^-1 (sum_g s_g s_g') B^-1 scaled by G/(G-1). Clusters
/// come from the design. Throws SingularBread, InsufficientData (< 2 clusters).
Eigen::MatrixXd cluster_robust_cov(const FitResult& fit, const DesignMatrix& design);
/// Same, with per-row frequency weights multiplying both bread and scores.
Eigen::MatrixXd cluster_robust_cov(const FitResult& fit, const DesignMatrix& design,
                                   std::span<const double> frequency_weights);

/// 1 - D(mu_hat)/D(y_bar); requires an intercept.
double pseudo_r2(const FitResult& fit);

/// Level effect of an indicator coefficient: (exp(beta) - 1) * 100.
double percent_effect(double beta);

/// Coefficient of variation robust_se / |coef|. Throws ZeroCoefficient.
double cv_of(double coef, double robust_se);

/// Two-sided normal test at the 1% level.
bool significant_at_1pct(double coef, double se);

struct YearValue {
  int year = 0;
  double value = 0;
};

struct MeanVarianceDiagnostic {
  std::vector<int> years;
  std::vector<double> mean;      // mean of log value per year
  std::vector<double> variance;  // sample variance of log value per year
  double slope = 0;
  double intercept = 0;
};

/// Per-year mean and variance of log positive values, and the OLS slope of
/// variance on mean across years. Throws InsufficientData / DegenerateSpread.
MeanVarianceDiagnostic mean_variance_diagnostic(std::span<const GravityObservation> dataset);
MeanVarianceDiagnostic mean_variance_diagnostic(std::span<const YearValue> values);

}  // namespace gravimetric
