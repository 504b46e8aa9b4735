#pragma once

// Brute-force reference implementations used to cross-check the estimators.
// Deliberately self-contained: plain loops, own linear algebra, nothing from
// the glm module.

#include "gravimetric/design.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace gravimetric::synth {

/// Maximizes sum(y*eta - exp(eta)) over a box by nested grid refinement.
/// Each round re-centres on the best point, spans +/-2 old steps and divides
/// the step by 10. At most 3 coefficients. Throws BoundaryMaximum when the
/// coarse optimum sits on the edge of the box.
Eigen::VectorXd oracle_mle_grid(const DesignMatrix& design, const std::vector<std::pair<double, double>>& bounds,
                                double coarse_step, int refine_rounds);

enum class OracleFamily { Gaussian, Poisson };

/// G/(G-1) * B^-1 M B^-1, clusters taken from design.clusters. Throws
/// InsufficientData for fewer than two clusters, SingularBread otherwise.
Eigen::MatrixXd oracle_sandwich(const DesignMatrix& design, const Eigen::VectorXd& coefficients, OracleFamily family);

/// Heteroskedasticity-robust (HC0) sandwich, no clustering, no correction.
Eigen::MatrixXd oracle_hc0(const DesignMatrix& design, const Eigen::VectorXd& coefficients, OracleFamily family);

/// (X'X)^-1 X'y by Gauss-Jordan.
Eigen::VectorXd oracle_ols_normal_equations(const DesignMatrix& design);

/// Gauss-Jordan inverse with partial pivoting; throws SingularBread.
Eigen::MatrixXd oracle_inverse(const Eigen::MatrixXd& a);

}  // namespace gravimetric::synth
