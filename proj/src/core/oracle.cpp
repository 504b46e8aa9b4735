#include "gravimetric/oracle.hpp"

#include "gravimetric/error.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace gravimetric::synth {

namespace {

double poisson_ll(const DesignMatrix& d, const std::vector<double>& beta) {
  double ll = 0;
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    double eta = 0;
    for (std::size_t k = 0; k < beta.size(); ++k) eta += d.X(i, static_cast<Eigen::Index>(k)) * beta[k];
    ll += d.y[i] * eta - std::exp(eta);
  }
  return ll;
}

// Exhaustive search over the product grid lo[k] + j*step, j = 0..count[k].
std::vector<double> grid_argmax(const DesignMatrix& d, const std::vector<double>& lo, const std::vector<int>& count,
                                double step, std::vector<int>* best_index) {
  const std::size_t p = lo.size();
  std::vector<int> idx(p, 0);
  std::vector<double> beta(p), best(p);
  double best_ll = -std::numeric_limits<double>::infinity();
  for (;;) {
    for (std::size_t k = 0; k < p; ++k) beta[k] = lo[k] + idx[k] * step;
    const double ll = poisson_ll(d, beta);
    if (ll > best_ll) {
      best_ll = ll;
      best = beta;
      if (best_index) *best_index = idx;
    }
    std::size_t k = 0;
    while (k < p && ++idx[k] > count[k]) idx[k++] = 0;
    if (k == p) break;
  }
  return best;
}

std::vector<double> mean_of(const DesignMatrix& d, const Eigen::VectorXd& b, OracleFamily fam) {
  std::vector<double> mu(static_cast<std::size_t>(d.X.rows()));
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    double eta = 0;
    for (Eigen::Index k = 0; k < d.X.cols(); ++k) eta += d.X(i, k) * b[k];
    mu[static_cast<std::size_t>(i)] = fam == OracleFamily::Poisson ? std::exp(eta) : eta;
  }
  return mu;
}

Eigen::MatrixXd bread(const DesignMatrix& d, const std::vector<double>& mu, OracleFamily fam) {
  const Eigen::Index p = d.X.cols();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    const double w = fam == OracleFamily::Poisson ? mu[static_cast<std::size_t>(i)] : 1.0;
    for (Eigen::Index r = 0; r < p; ++r)
      for (Eigen::Index c = 0; c < p; ++c) b(r, c) += w * d.X(i, r) * d.X(i, c);
  }
  return b;
}

Eigen::MatrixXd triple(const Eigen::MatrixXd& binv, const Eigen::MatrixXd& meat) {
  const Eigen::Index p = binv.rows();
  Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(p, p), out = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index r = 0; r < p; ++r)
    for (Eigen::Index c = 0; c < p; ++c)
      for (Eigen::Index k = 0; k < p; ++k) tmp(r, c) += binv(r, k) * meat(k, c);
  for (Eigen::Index r = 0; r < p; ++r)
    for (Eigen::Index c = 0; c < p; ++c)
      for (Eigen::Index k = 0; k < p; ++k) out(r, c) += tmp(r, k) * binv(k, c);
  return out;
}

}  // namespace

Eigen::MatrixXd oracle_inverse(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd m = a;
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);
  double scale = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index piv = c;
    for (Eigen::Index r = c + 1; r < n; ++r)
      if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
    if (!(std::abs(m(piv, c)) > 1e-13 * scale))
      throw Error(ErrorCode::SingularBread, "oracle: bread matrix is singular");
    if (piv != c) {
      m.row(c).swap(m.row(piv));
      inv.row(c).swap(inv.row(piv));
    }
    const double d = m(c, c);
    for (Eigen::Index j = 0; j < n; ++j) {
      m(c, j) /= d;
      inv(c, j) /= d;
    }
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m(r, c);
      if (f == 0) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        m(r, j) -= f * m(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

Eigen::VectorXd oracle_mle_grid(const DesignMatrix& design, const std::vector<std::pair<double, double>>& bounds,
                                double coarse_step, int refine_rounds) {
  const std::size_t p = bounds.size();
  if (p == 0 || p > 3 || static_cast<Eigen::Index>(p) != design.X.cols())
    throw Error(ErrorCode::InvalidArgument, "grid oracle supports 1 to 3 coefficients matching the design");
  if (!(coarse_step > 0) || refine_rounds < 0) throw Error(ErrorCode::InvalidArgument, "bad grid settings");
  std::vector<double> lo(p);
  std::vector<int> count(p);
  for (std::size_t k = 0; k < p; ++k) {
    if (!(bounds[k].second > bounds[k].first)) throw Error(ErrorCode::InvalidArgument, "empty grid bound");
    lo[k] = bounds[k].first;
    count[k] = static_cast<int>(std::floor((bounds[k].second - bounds[k].first) / coarse_step + 1e-9));
  }
  std::vector<int> at;
  std::vector<double> best = grid_argmax(design, lo, count, coarse_step, &at);
  for (std::size_t k = 0; k < p; ++k)
    if (at[k] == 0 || at[k] == count[k])
      throw Error(ErrorCode::BoundaryMaximum,
                  "grid optimum on the edge of the box for coefficient " + std::to_string(k));
  double step = coarse_step;
  for (int round = 0; round < refine_rounds; ++round) {
    const double fine = step / 10;
    for (std::size_t k = 0; k < p; ++k) {
      lo[k] = best[k] - 2 * step;
      count[k] = 40;
    }
    best = grid_argmax(design, lo, count, fine, nullptr);
    step = fine;
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < p; ++k) out[static_cast<Eigen::Index>(k)] = best[k];
  return out;
}

Eigen::MatrixXd oracle_sandwich(const DesignMatrix& design, const Eigen::VectorXd& coefficients, OracleFamily family) {
  std::map<std::string, std::vector<Eigen::Index>> groups;
  for (Eigen::Index i = 0; i < design.X.rows(); ++i) groups[design.clusters[static_cast<std::size_t>(i)]].push_back(i);
  const double G = static_cast<double>(groups.size());
  if (groups.size() < 2) throw Error(ErrorCode::InsufficientData, "oracle: need at least two clusters");
  const auto mu = mean_of(design, coefficients, family);
  const Eigen::MatrixXd binv = oracle_inverse(bread(design, mu, family));
  const Eigen::Index p = design.X.cols();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
  for (const auto& [name, rows] : groups) {
    std::vector<double> s(static_cast<std::size_t>(p), 0.0);
    for (Eigen::Index i : rows) {
      const double u = design.y[i] - mu[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < p; ++k) s[static_cast<std::size_t>(k)] += design.X(i, k) * u;
    }
    for (Eigen::Index r = 0; r < p; ++r)
      for (Eigen::Index c = 0; c < p; ++c) meat(r, c) += s[static_cast<std::size_t>(r)] * s[static_cast<std::size_t>(c)];
  }
  return triple(binv, meat) * (G / (G - 1));
}

Eigen::MatrixXd oracle_hc0(const DesignMatrix& design, const Eigen::VectorXd& coefficients, OracleFamily family) {
  const auto mu = mean_of(design, coefficients, family);
  const Eigen::MatrixXd binv = oracle_inverse(bread(design, mu, family));
  const Eigen::Index p = design.X.cols();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < design.X.rows(); ++i) {
    const double u = design.y[i] - mu[static_cast<std::size_t>(i)];
    for (Eigen::Index r = 0; r < p; ++r)
      for (Eigen::Index c = 0; c < p; ++c) meat(r, c) += u * u * design.X(i, r) * design.X(i, c);
  }
  return triple(binv, meat);
}

Eigen::VectorXd oracle_ols_normal_equations(const DesignMatrix& design) {
  const Eigen::Index p = design.X.cols();
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
  for (Eigen::Index i = 0; i < design.X.rows(); ++i)
    for (Eigen::Index r = 0; r < p; ++r) {
      xty[r] += design.X(i, r) * design.y[i];
      for (Eigen::Index c = 0; c < p; ++c) xtx(r, c) += design.X(i, r) * design.X(i, c);
    }
  const Eigen::MatrixXd inv = oracle_inverse(xtx);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  for (Eigen::Index r = 0; r < p; ++r)
    for (Eigen::Index c = 0; c < p; ++c) b[r] += inv(r, c) * xty[c];
  return b;
}

}  // namespace gravimetric::synth
