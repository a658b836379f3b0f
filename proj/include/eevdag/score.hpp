#pragma once
// Penalized Gaussian likelihood scores for DAGs, evaluated from a covariance
// summary. Smaller is better everywhere. Two likelihood variants:
//
//   equal-variance: all noise terms share one scale sigma2 (optionally with
//     known relative weights alpha), profiled out in closed form. The argmin
//     over DAGs is unique for identifiable models.
//   per-node: each node gets its own variance; Markov equivalent DAGs tie
//     exactly, so this is the classical baseline.
//
// Degenerate fits (singular parent blocks, zero residual variance) are data
// errors, not bugs: scoring functions return an empty optional and never
// regularize silently.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "eevdag/graph.hpp"
#include "eevdag/sem.hpp"

namespace eevdag {

// Relative pivot floor of the Cholesky solve; pivots at or below
// kPivotTolRel * max diagonal mean the block is treated as singular.
inline constexpr double kPivotTolRel = 1e-12;

// Residual variances at or below kVarianceFloorRel * max S diagonal make the
// log-likelihood unbounded and the score undefined.
inline constexpr double kVarianceFloorRel = 1e-12;

struct CovarianceSummary {
    long n = 0;           // rows behind S; 1 for population input
    Eigen::MatrixXd S;    // p x p, symmetric

    int p() const { return static_cast<int>(S.rows()); }
    static CovarianceSummary population(Eigen::MatrixXd sigma) { return {1, std::move(sigma)}; }
};

// S = (1/n) X_c^T X_c with column means removed; divisor n, not n - 1.
CovarianceSummary sample_covariance(const DataSet& data);

inline double default_lambda(long n) { return 0.5 * std::log(static_cast<double>(n)); }

struct Fit {
    Dag dag = Dag(1);
    Eigen::MatrixXd b_hat;           // row j holds the coefficients of node j's parents
    Eigen::VectorXd node_variances;  // per-node residual variances
    double sigma2_hat = 0;           // alpha-weighted mean residual variance
    double nll = 0;                  // negative log-likelihood at the optimum
    int k = 0;                       // edge count
    double lambda = 0;
    double score = 0;                // nll + lambda * k
};

// Least-squares coefficients of `parents` for node j, from second moments
// alone. Empty when the parent block is numerically singular.
std::optional<Eigen::VectorXd> fit_parents(const Eigen::MatrixXd& S, int j,
                                           const std::vector<int>& parents);

// Residual second moment of node j given its parents: S_jj - beta' S_pa,j.
std::optional<double> residual_variance(const Eigen::MatrixXd& S, int j,
                                        const std::vector<int>& parents);

// All rows at once; B_hat(j, k) is the fitted weight of parent k for node j.
std::optional<Eigen::MatrixXd> fit_coefficients(const Dag& dag, const CovarianceSummary& cov);

// Pooled residual variance tr{diag(alpha)^-1 (I-B)S(I-B)'}/p for fitted
// coefficients. Empty when the pooled value falls below the variance floor.
std::optional<double> profiled_sigma2(const Dag& dag, const Eigen::MatrixXd& b_hat,
                                      const CovarianceSummary& cov,
                                      const Eigen::VectorXd* alpha = nullptr);

// Likelihood assembly pieces. The search code reuses these on cached
// residual variances so its incremental scores match a from-scratch fit
// bit for bit.
double equal_variance_nll(long n, int p, double pooled_sigma2);
double per_node_nll(long n, const Eigen::VectorXd& node_variances);
double variance_floor(const Eigen::MatrixXd& S);

// Equal-variance penalized likelihood: nll + lambda * k with
// nll = (n p / 2) (log(2 pi sigma2_hat) + 1) + (n/2) sum_j log alpha_j.
std::optional<Fit> equal_variance_bic(const Dag& dag, const CovarianceSummary& cov,
                                      double lambda,
                                      const Eigen::VectorXd* alpha = nullptr);

// Per-node variance baseline: nll = (n/2) sum_j (log(2 pi v_j) + 1).
std::optional<Fit> per_node_variance_bic(const Dag& dag, const CovarianceSummary& cov,
                                         double lambda);

// Per-sample equal-variance score straight from a population covariance;
// identical to equal_variance_bic with n = 1. Throws when sigma is not
// usable (it must be positive definite).
double population_score(const Dag& dag, const Eigen::MatrixXd& sigma, double lambda_pop);

// var(X_target | X_given) under the Gaussian with covariance sigma. Never
// larger than the marginal sigma(target, target).
double conditional_variance(const Eigen::MatrixXd& sigma, int target,
                            const std::vector<int>& given);

// JSON form of a fit, stable key order.
void write_fit_json(std::ostream& out, const Fit& fit);

}  // namespace eevdag
