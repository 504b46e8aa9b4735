#include "gravimetric/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace gravimetric {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kEtaMax = 700.0;
constexpr double kAlphaMin = 1e-8;
constexpr double kAlphaMax = 1e4;
constexpr double kAlphaRelTol = 1e-6;
constexpr int kMaxHalvings = 20;
constexpr double kZ995 = 2.5758293035489004;  // two-sided 1%

VectorXd mean_of(const VectorXd& eta) {
  return eta.unaryExpr([](double e) { return std::exp(std::clamp(e, -kEtaMax, kEtaMax)); });
}

// y log(y/mu) with the 0 log 0 = 0 convention.
double ylog(double y, double mu) { return y > 0 ? y * std::log(y / mu) : 0.0; }

// NB2 with alpha == 0 is Poisson.
double deviance(const VectorXd& y, const VectorXd& mu, double alpha) {
  double d = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (alpha == 0) {
      d += ylog(y[i], mu[i]) - (y[i] - mu[i]);
    } else {
      const double inv = 1.0 / alpha;
      d += ylog(y[i], mu[i]) - (y[i] + inv) * std::log((1 + alpha * y[i]) / (1 + alpha * mu[i]));
    }
  }
  return 2 * d;
}

double loglik(const VectorXd& y, const VectorXd& mu, double alpha) {
  double ll = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (alpha == 0) {
      ll += (y[i] > 0 ? y[i] * std::log(mu[i]) : 0.0) - mu[i] - std::lgamma(y[i] + 1);
    } else {
      const double inv = 1.0 / alpha;
      ll += std::lgamma(y[i] + inv) - std::lgamma(inv) - std::lgamma(y[i] + 1) -
            inv * std::log1p(alpha * mu[i]) +
            (y[i] > 0 ? y[i] * (std::log(alpha * mu[i]) - std::log1p(alpha * mu[i])) : 0.0);
    }
  }
  return ll;
}

// Solves min || sqrt(w) (r - X delta) ||, falling back to ridge-stabilised
// normal equations when the weighted design is numerically singular.
VectorXd weighted_step(const MatrixXd& X, const VectorXd& w, const VectorXd& r, double jitter) {
  VectorXd sw = w.cwiseSqrt();
  MatrixXd A = sw.asDiagonal() * X;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(A);
  if (qr.rank() == X.cols()) return qr.solve(sw.cwiseProduct(r));
  MatrixXd N = A.transpose() * A;
  VectorXd b = A.transpose() * sw.cwiseProduct(r);
  double lambda = jitter > 0 ? jitter : 1e-12 * std::max(N.trace() / static_cast<double>(N.rows()), 1e-300);
  for (int attempt = 0; attempt < 40; ++attempt, lambda *= 10) {
    Eigen::LLT<MatrixXd> llt(N + lambda * MatrixXd::Identity(N.rows(), N.cols()));
    if (llt.info() == Eigen::Success) return llt.solve(b);
  }
  throw Error(ErrorCode::RankDeficient, "weighted normal equations remain singular after ridge escalation");
}

struct IrlsResult {
  VectorXd beta;
  VectorXd mu;
  double deviance = 0;
  int iterations = 0;
  bool converged = false;
};

// Log-link IRLS for Poisson (alpha == 0) or NB2 with fixed alpha.
IrlsResult irls(const DesignMatrix& d, double alpha, VectorXd beta, const EstimatorOptions& opt) {
  const VectorXd& y = d.y;
  IrlsResult res;
  VectorXd mu = mean_of(d.X * beta);
  double dev = deviance(y, mu, alpha);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    res.iterations = it;
    VectorXd w(mu.size()), r(mu.size());
    for (Index i = 0; i < mu.size(); ++i) {
      w[i] = mu[i] / (1 + alpha * mu[i]);
      r[i] = (y[i] - mu[i]) / mu[i];
    }
    VectorXd delta = weighted_step(d.X, w, r, opt.ridge_jitter);
    double t = 1.0;
    VectorXd beta_new, mu_new;
    double dev_new = 0;
    for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
      beta_new = beta + t * delta;
      mu_new = mean_of(d.X * beta_new);
      dev_new = deviance(y, mu_new, alpha);
      if (std::isfinite(dev_new) && dev_new <= dev + 1e-12 * std::abs(dev)) break;
    }
    if (!std::isfinite(dev_new)) throw Error(ErrorCode::NotConverged, "deviance became non-finite");
    const double dev_change = std::abs(dev_new - dev) / (std::abs(dev_new) + 0.1);
    const double coef_change =
        (beta_new - beta).lpNorm<Eigen::Infinity>() / std::max(1.0, beta_new.lpNorm<Eigen::Infinity>());
    beta = std::move(beta_new);
    mu = std::move(mu_new);
    dev = dev_new;
    if (dev_change < opt.deviance_rel_tol && coef_change < opt.coef_rel_tol) {
      res.converged = true;
      break;
    }
  }
  res.beta = std::move(beta);
  res.mu = std::move(mu);
  res.deviance = dev;
  return res;
}

VectorXd initial_beta(const DesignMatrix& d) {
  VectorXd beta = VectorXd::Zero(d.cols());
  if (d.has_intercept()) beta[0] = std::log(d.y.mean() + 1e-8);
  return beta;
}

void check_count_response(const DesignMatrix& d) {
  if (d.spec_echo.response_scale != ResponseScale::Natural)
    throw Error(ErrorCode::InvalidArgument, "PML estimators need a natural-scale response");
  if (d.rows() == 0) throw Error(ErrorCode::InsufficientData, "empty design");
  if ((d.y.array() < 0).any()) throw Error(ErrorCode::NegativeValue, "negative response value");
  if ((d.y.array() == 0).all()) throw Error(ErrorCode::AllZeroResponse, "every response value is zero");
}

std::size_t count_clusters(const DesignMatrix& d) {
  std::vector<std::string> c = d.clusters;
  std::sort(c.begin(), c.end());
  return static_cast<std::size_t>(std::unique(c.begin(), c.end()) - c.begin());
}

MatrixXd inverse_spd(const MatrixXd& B) {
  Eigen::LLT<MatrixXd> llt(B);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularBread, "bread matrix is not invertible");
  return llt.solve(MatrixXd::Identity(B.rows(), B.cols()));
}

// Per-row bread weight and score multiplier for each family.
void sandwich_terms(const FitResult& fit, const DesignMatrix& d, VectorXd& bread_w, VectorXd& score_u) {
  const Index n = d.rows();
  bread_w.resize(n);
  score_u.resize(n);
  const double alpha = fit.estimator == Estimator::NBPML ? fit.dispersion.value_or(0.0) : 0.0;
  for (Index i = 0; i < n; ++i) {
    const double mu = fit.fitted[i];
    switch (fit.estimator) {
      case Estimator::OLS:
        bread_w[i] = 1.0;
        score_u[i] = d.y[i] - mu;
        break;
      case Estimator::PPML:
      case Estimator::NBPML:
        bread_w[i] = mu / (1 + alpha * mu);
        score_u[i] = (d.y[i] - mu) / (1 + alpha * mu);
        break;
    }
  }
}

void fill_robust(FitResult& fit, const DesignMatrix& d) {
  fit.n_clusters = count_clusters(d);
  if (fit.n_clusters >= 2) {
    fit.covariance_robust = cluster_robust_cov(fit, d);
    fit.small_sample_factor = static_cast<double>(fit.n_clusters) / static_cast<double>(fit.n_clusters - 1);
  }
}

FitResult base_result(Estimator e, const DesignMatrix& d) {
  FitResult f;
  f.estimator = e;
  f.names = d.names;
  f.n_obs = static_cast<std::size_t>(d.rows());
  f.n_dropped_zeros = d.n_dropped_zeros;
  f.has_intercept = d.has_intercept();
  return f;
}

// Moment condition sum (y-mu)^2 / (mu (1 + alpha mu)) = n - p, solved for alpha.
double moment_alpha(const VectorXd& y, const VectorXd& mu, Index p) {
  const double target = static_cast<double>(y.size() - p);
  auto pearson = [&](double a) {
    double s = 0;
    for (Index i = 0; i < y.size(); ++i) s += (y[i] - mu[i]) * (y[i] - mu[i]) / (mu[i] * (1 + a * mu[i]));
    return s;
  };
  if (target <= 0) return kAlphaMin;
  if (pearson(kAlphaMin) <= target) return kAlphaMin;
  if (pearson(kAlphaMax) >= target) return kAlphaMax;
  double lo = std::log(kAlphaMin), hi = std::log(kAlphaMax);
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    double mid = 0.5 * (lo + hi);
    if (pearson(std::exp(mid)) > target) lo = mid;
    else hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

bool numerically_positive_definite(const MatrixXd& H) {
  VectorXd diag = H.diagonal();
  if ((diag.array() <= 0).any() || !diag.allFinite()) return false;
  VectorXd s = diag.cwiseSqrt().cwiseInverse();
  MatrixXd E = s.asDiagonal() * H * s.asDiagonal();
  Eigen::LLT<MatrixXd> llt(E);
  if (llt.info() != Eigen::Success) return false;
  MatrixXd L = llt.matrixL();
  return L.diagonal().array().square().minCoeff() > 1e-12;
}

}  // namespace

void EstimatorOptions::validate() const {
  if (max_iterations <= 0) throw Error(ErrorCode::InvalidArgument, "max_iterations must be positive");
  if (!(deviance_rel_tol > 0) || !(coef_rel_tol > 0))
    throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
  if (ridge_jitter < 0) throw Error(ErrorCode::InvalidArgument, "ridge_jitter must be non-negative");
}

FitResult fit_ols(const DesignMatrix& d) {
  if (d.spec_echo.response_scale != ResponseScale::Log)
    throw Error(ErrorCode::InvalidArgument, "OLS needs a log-scale response");
  if (d.rows() == 0) throw Error(ErrorCode::InsufficientData, "empty design");
  const Index n = d.rows(), p = d.cols();
  Eigen::ColPivHouseholderQR<MatrixXd> qr(d.X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) throw Error(ErrorCode::RankDeficient, "OLS design is rank deficient");
  FitResult f = base_result(Estimator::OLS, d);
  f.coefficients = qr.solve(d.y);
  f.fitted = d.X * f.coefficients;
  VectorXd e = d.y - f.fitted;
  const double rss = e.squaredNorm();
  const double ybar = d.y.mean();
  const double tss = (d.y.array() - ybar).square().sum();
  f.deviance = rss;
  f.null_deviance = tss;
  const double dn = static_cast<double>(n), dp = static_cast<double>(p);
  const double sigma2_ml = rss / dn;
  f.loglik = -0.5 * dn * (std::log(2 * M_PI * std::max(sigma2_ml, 1e-300)) + 1);
  if (tss > 0) {
    f.r2 = 1 - rss / tss;
    if (n > p) f.r2_adjusted = 1 - (1 - *f.r2) * (dn - (f.has_intercept ? 1 : 0)) / (dn - dp);
  }
  if (n > p) {
    MatrixXd XtX = d.X.transpose() * d.X;
    f.covariance_model = (rss / (dn - dp)) * inverse_spd(XtX);
  }
  f.converged = true;
  f.iterations = 1;
  fill_robust(f, d);
  return f;
}

FitResult fit_ppml(const DesignMatrix& d, const EstimatorOptions& opt) {
  opt.validate();
  check_count_response(d);
  auto r = irls(d, 0.0, initial_beta(d), opt);
  FitResult f = base_result(Estimator::PPML, d);
  f.coefficients = r.beta;
  f.fitted = r.mu;
  f.deviance = r.deviance;
  f.null_deviance = deviance(d.y, VectorXd::Constant(d.rows(), d.y.mean()), 0.0);
  f.loglik = loglik(d.y, r.mu, 0.0);
  f.converged = r.converged;
  f.iterations = r.iterations;
  if (f.has_intercept) f.pseudo_r2 = pseudo_r2(f);
  MatrixXd B = d.X.transpose() * r.mu.asDiagonal() * d.X;
  f.covariance_model = inverse_spd(B);
  fill_robust(f, d);
  return f;
}

FitResult fit_nbpml(const DesignMatrix& d, const EstimatorOptions& opt) {
  opt.validate();
  check_count_response(d);
  const Index p = d.cols();
  auto r = irls(d, 0.0, initial_beta(d), opt);
  double alpha = moment_alpha(d.y, r.mu, p);
  int total_iterations = r.iterations;
  bool alpha_converged = false;
  for (int outer = 0; outer < opt.max_iterations; ++outer) {
    r = irls(d, alpha, r.beta, opt);
    total_iterations += r.iterations;
    double next = moment_alpha(d.y, r.mu, p);
    const bool done = std::abs(next - alpha) <= kAlphaRelTol * alpha;
    alpha = next;
    if (done) {
      alpha_converged = true;
      break;
    }
  }
  // Final pass so the coefficients correspond to the reported alpha.
  r = irls(d, alpha, r.beta, opt);
  total_iterations += r.iterations;

  FitResult f = base_result(Estimator::NBPML, d);
  f.coefficients = r.beta;
  f.fitted = r.mu;
  f.dispersion = alpha;
  f.deviance = r.deviance;
  f.null_deviance = deviance(d.y, VectorXd::Constant(d.rows(), d.y.mean()), alpha);
  f.loglik = loglik(d.y, r.mu, alpha);
  f.converged = r.converged && alpha_converged;
  f.iterations = total_iterations;
  if (f.has_intercept) f.pseudo_r2 = pseudo_r2(f);
  f.n_clusters = count_clusters(d);

  VectorXd h(d.rows());
  for (Index i = 0; i < d.rows(); ++i) {
    const double mu = r.mu[i];
    h[i] = mu * (1 + alpha * d.y[i]) / ((1 + alpha * mu) * (1 + alpha * mu));
  }
  MatrixXd H = d.X.transpose() * h.asDiagonal() * d.X;
  if (!numerically_positive_definite(H))
    throw HessianNotPositiveDefinite(f, "observed NB2 Hessian is not positive definite; covariance withheld");
  MatrixXd B = d.X.transpose() * (r.mu.array() / (1 + alpha * r.mu.array())).matrix().asDiagonal() * d.X;
  f.covariance_model = inverse_spd(B);
  fill_robust(f, d);
  return f;
}

FitResult fit_model(Estimator e, const DesignMatrix& d, const EstimatorOptions& opt) {
  switch (e) {
    case Estimator::OLS: return fit_ols(d);
    case Estimator::PPML: return fit_ppml(d, opt);
    case Estimator::NBPML: return fit_nbpml(d, opt);
  }
  throw Error(ErrorCode::Internal, "unknown estimator");
}

Eigen::MatrixXd cluster_robust_cov(const FitResult& fit, const DesignMatrix& d) {
  return cluster_robust_cov(fit, d, {});
}

Eigen::MatrixXd cluster_robust_cov(const FitResult& fit, const DesignMatrix& d,
                                   std::span<const double> freq) {
  const Index n = d.rows(), p = d.cols();
  if (fit.fitted.size() != n || fit.coefficients.size() != p)
    throw Error(ErrorCode::InvalidArgument, "fit does not belong to this design");
  if (!freq.empty() && static_cast<Index>(freq.size()) != n)
    throw Error(ErrorCode::InvalidArgument, "frequency weights must have one entry per row");
  if (static_cast<Index>(d.clusters.size()) != n) throw Error(ErrorCode::InvalidArgument, "missing cluster labels");
  VectorXd bw, u;
  sandwich_terms(fit, d, bw, u);
  if (!freq.empty()) {
    for (Index i = 0; i < n; ++i) {
      bw[i] *= freq[static_cast<std::size_t>(i)];
      u[i] *= freq[static_cast<std::size_t>(i)];
    }
  }
  std::map<std::string, VectorXd> scores;
  for (Index i = 0; i < n; ++i) {
    auto [it, inserted] = scores.try_emplace(d.clusters[static_cast<std::size_t>(i)], VectorXd::Zero(p));
    it->second += u[i] * d.X.row(i).transpose();
  }
  const auto G = scores.size();
  if (G < 2) throw Error(ErrorCode::InsufficientData, "cluster-robust covariance needs at least 2 clusters");
  MatrixXd meat = MatrixXd::Zero(p, p);
  for (const auto& [g, s] : scores) meat.noalias() += s * s.transpose();
  MatrixXd B = d.X.transpose() * bw.asDiagonal() * d.X;
  MatrixXd Binv = inverse_spd(B);
  const double factor = static_cast<double>(G) / static_cast<double>(G - 1);
  MatrixXd V = factor * (Binv * meat * Binv);
  return 0.5 * (V + V.transpose());
}

double pseudo_r2(const FitResult& fit) {
  if (!fit.has_intercept) throw Error(ErrorCode::InvalidArgument, "pseudo R^2 requires an intercept");
  if (fit.null_deviance <= 0) return 0.0;
  return 1.0 - fit.deviance / fit.null_deviance;
}

double percent_effect(double beta) { return std::expm1(beta) * 100.0; }

double cv_of(double coef, double robust_se) {
  if (coef == 0.0) throw Error(ErrorCode::ZeroCoefficient, "coefficient of variation undefined at zero");
  return robust_se / std::abs(coef);
}

bool significant_at_1pct(double coef, double se) {
  if (!(se > 0)) return se == 0 && coef != 0;
  return std::abs(coef / se) > kZ995;
}

MeanVarianceDiagnostic mean_variance_diagnostic(std::span<const GravityObservation> dataset) {
  std::vector<YearValue> v;
  v.reserve(dataset.size());
  for (const auto& o : dataset) v.push_back({o.year, cents_to_eur(o.value)});
  return mean_variance_diagnostic(v);
}

MeanVarianceDiagnostic mean_variance_diagnostic(std::span<const YearValue> values) {
  std::map<int, std::vector<double>> by_year;
  for (const auto& yv : values) {
    auto& bucket = by_year[yv.year];
    if (yv.value > 0) bucket.push_back(std::log(yv.value));
  }
  if (by_year.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least 2 years");
  MeanVarianceDiagnostic out;
  for (const auto& [year, logs] : by_year) {
    if (logs.size() < 2)
      throw Error(ErrorCode::InsufficientData, "year " + std::to_string(year) + " has fewer than 2 positive values");
    const double m = std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(logs.size());
    double ss = 0;
    for (double l : logs) ss += (l - m) * (l - m);
    out.years.push_back(year);
    out.mean.push_back(m);
    out.variance.push_back(ss / static_cast<double>(logs.size() - 1));
  }
  const double k = static_cast<double>(out.years.size());
  const double mbar = std::accumulate(out.mean.begin(), out.mean.end(), 0.0) / k;
  const double vbar = std::accumulate(out.variance.begin(), out.variance.end(), 0.0) / k;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < out.mean.size(); ++i) {
    sxx += (out.mean[i] - mbar) * (out.mean[i] - mbar);
    sxy += (out.mean[i] - mbar) * (out.variance[i] - vbar);
  }
  if (!(sxx > 1e-300)) throw Error(ErrorCode::DegenerateSpread, "per-year means do not vary; slope undefined");
  out.slope = sxy / sxx;
  out.intercept = vbar - out.slope * mbar;
  return out;
}

}  // namespace gravimetric
