#pragma once
// Linear structural equation models with Gaussian noise of a common scale:
// X_j = sum_k B(j,k) X_k + N_j, with N_j independent N(0, sigma2 * alpha_j).
// alpha of all ones is the equal-variance case; a general alpha keeps the
// shared scale sigma2 but allows known relative spreads.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eevdag/graph.hpp"

namespace eevdag {

struct DataSet {
    Eigen::MatrixXd values;          // n rows of p variables
    std::vector<std::string> names;  // unique, length p

    long n() const { return values.rows(); }
    int p() const { return static_cast<int>(values.cols()); }
};

std::vector<std::string> default_names(int p);  // X0..X{p-1}

class LinearGaussianSem {
public:
    // B(j,k) is the coefficient of variable k in the equation for j, so the
    // graph has an edge k -> j exactly where B(j,k) != 0. The support must
    // be acyclic, sigma2 positive, alpha positive of length p.
    LinearGaussianSem(Eigen::MatrixXd b, double sigma2, Eigen::VectorXd alpha);
    LinearGaussianSem(Eigen::MatrixXd b, double sigma2);

    int p() const { return dag_.p(); }
    const Eigen::MatrixXd& coefficients() const { return b_; }
    double sigma2() const { return sigma2_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    const Dag& dag() const { return dag_; }

private:
    Eigen::MatrixXd b_;
    double sigma2_;
    Eigen::VectorXd alpha_;
    Dag dag_;
};

// n independent rows. Draw order is part of the seed contract: one standard
// normal per (row, variable) cell, rows outer, variables inner; columns are
// then filled in topological order.
DataSet sample(const LinearGaussianSem& sem, long n, std::uint64_t seed);

// (I - B)^-1 D (I - B)^-T with D = sigma2 * diag(alpha), symmetrized.
Eigen::MatrixXd population_covariance(const LinearGaussianSem& sem);

struct RandomModelConfig {
    int p = 0;
    double p_edge = 0;             // edge-inclusion probability, in (0, 1]
    double coef_low = 0.1;         // coefficient magnitudes drawn from
    double coef_high = 1.0;        //   [coef_low, coef_high], random sign
    double variance_spread = 0.0;  // a in [0, 1): alpha_j ~ U[1-a, 1+a]
    std::uint64_t seed = 0;
};

// Random causal order (Fisher-Yates), then each forward pair becomes an edge
// with probability p_edge. Per edge one sign bit and one magnitude draw, in
// lexicographic order of ordered positions; with variance_spread > 0, p
// further uniforms fill alpha. sigma2 is always 1.
LinearGaussianSem random_model(const RandomModelConfig& config);

// Three variables with a cancellation: 0 -> 1 with weight -1, 0 -> 2 and
// 1 -> 2 with weight 1, so cov(X0, X2) = 0 although the edge 0 -> 2 exists.
LinearGaussianSem nonfaithful_example();

// Columnwise rescale by strictly positive finite factors.
DataSet rescale(const DataSet& data, const Eigen::VectorXd& factors);

// CSV: header of names, then one row per observation, shortest round-trip
// number formatting. Parse errors carry line and column positions.
void write_csv(std::ostream& out, const DataSet& data);
DataSet read_csv(std::istream& in);

// Model JSON: {"p", "edges" (triples [child, parent, coefficient], i.e. the
// nonzero B(j,k) entries in row-major order), "sigma2", "alpha"}.
void write_model_json(std::ostream& out, const LinearGaussianSem& sem);
LinearGaussianSem read_model_json(std::istream& in);

}  // namespace eevdag
