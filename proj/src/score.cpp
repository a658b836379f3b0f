#include "eevdag/score.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "eevdag/json_io.hpp"

namespace eevdag {

namespace {

constexpr double k2Pi = 2.0 * std::numbers::pi;

void check_square_symmetric(const Eigen::MatrixXd& S) {
    const int p = static_cast<int>(S.rows());
    if (p < 1 || S.cols() != p)
        throw std::invalid_argument("covariance matrix must be square and nonempty");
    if (!S.allFinite()) throw std::invalid_argument("covariance matrix has non-finite entries");
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw std::invalid_argument("covariance matrix must be symmetric");
}

void check_summary(const CovarianceSummary& cov) {
    if (cov.n < 1) throw std::invalid_argument("covariance summary needs n >= 1");
    check_square_symmetric(cov.S);
    if (cov.S.diagonal().minCoeff() < 0.0)
        throw std::invalid_argument("covariance matrix has a negative diagonal entry");
}

void check_lambda(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("lambda must be finite and nonnegative");
}

void check_alpha(const Eigen::VectorXd* alpha, int p) {
    if (!alpha) return;
    if (alpha->size() != p) throw std::invalid_argument("alpha length must equal p");
    for (int j = 0; j < p; ++j)
        if (!((*alpha)[j] > 0.0) || !std::isfinite((*alpha)[j]))
            throw std::invalid_argument("alpha entries must be positive and finite");
}

void check_node_set(int p, int j, const std::vector<int>& parents) {
    if (j < 0 || j >= p) throw std::invalid_argument("node index out of range");
    std::vector<bool> seen(p, false);
    for (int k : parents) {
        if (k < 0 || k >= p) throw std::invalid_argument("parent index out of range");
        if (k == j) throw std::invalid_argument("node cannot be its own parent");
        if (seen[k]) throw std::invalid_argument("duplicate parent index");
        seen[k] = true;
    }
}

// Unpivoted Cholesky with a relative floor. A pivot at or below
// kPivotTolRel * max input diagonal means the block is treated as singular;
// no regularization is ever applied.
std::optional<Eigen::VectorXd> solve_spd(const Eigen::MatrixXd& g, const Eigen::VectorXd& rhs) {
    const int m = static_cast<int>(g.rows());
    double maxdiag = 0.0;
    for (int i = 0; i < m; ++i) maxdiag = std::max(maxdiag, g(i, i));
    const double tol = kPivotTolRel * maxdiag;
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        for (int c = 0; c <= i; ++c) {
            double sum = g(i, c);
            for (int k = 0; k < c; ++k) sum -= l(i, k) * l(c, k);
            if (i == c) {
                if (!(sum > tol)) return std::nullopt;
                l(i, i) = std::sqrt(sum);
            } else {
                l(i, c) = sum / l(c, c);
            }
        }
    }
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) {
        double sum = rhs[i];
        for (int k = 0; k < i; ++k) sum -= l(i, k) * y[k];
        y[i] = sum / l(i, i);
    }
    Eigen::VectorXd x(m);
    for (int i = m - 1; i >= 0; --i) {
        double sum = y[i];
        for (int k = i + 1; k < m; ++k) sum -= l(k, i) * x[k];
        x[i] = sum / l(i, i);
    }
    return x;
}

}  // namespace

double variance_floor(const Eigen::MatrixXd& S) {
    return kVarianceFloorRel * S.diagonal().maxCoeff();
}

CovarianceSummary sample_covariance(const DataSet& data) {
    if (data.p() < 1) throw std::invalid_argument("data set must have at least one column");
    if (data.n() < 2) throw std::invalid_argument("sample covariance needs at least two rows");
    const long n = data.n();
    const Eigen::RowVectorXd mean = data.values.colwise().mean();
    const Eigen::MatrixXd centered = data.values.rowwise() - mean;
    Eigen::MatrixXd s = (centered.transpose() * centered) / static_cast<double>(n);
    return {n, 0.5 * (s + s.transpose())};
}

std::optional<Eigen::VectorXd> fit_parents(const Eigen::MatrixXd& S, int j,
                                           const std::vector<int>& parents) {
    check_square_symmetric(S);
    check_node_set(static_cast<int>(S.rows()), j, parents);
    const int m = static_cast<int>(parents.size());
    if (m == 0) return Eigen::VectorXd(0);
    Eigen::MatrixXd g(m, m);
    Eigen::VectorXd rhs(m);
    for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) g(a, b) = S(parents[a], parents[b]);
        rhs[a] = S(parents[a], j);
    }
    return solve_spd(g, rhs);
}

std::optional<double> residual_variance(const Eigen::MatrixXd& S, int j,
                                        const std::vector<int>& parents) {
    auto beta = fit_parents(S, j, parents);
    if (!beta) return std::nullopt;
    double dot = 0.0;
    for (int a = 0; a < static_cast<int>(parents.size()); ++a)
        dot += (*beta)[a] * S(parents[a], j);
    return S(j, j) - dot;
}

std::optional<Eigen::MatrixXd> fit_coefficients(const Dag& dag, const CovarianceSummary& cov) {
    check_summary(cov);
    if (cov.p() != dag.p()) throw std::invalid_argument("covariance size does not match graph");
    const int p = dag.p();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
    for (int j = 0; j < p; ++j) {
        const auto& pa = dag.parents(j);
        auto beta = fit_parents(cov.S, j, pa);
        if (!beta) return std::nullopt;
        for (int a = 0; a < static_cast<int>(pa.size()); ++a) b(j, pa[a]) = (*beta)[a];
    }
    return b;
}

std::optional<double> profiled_sigma2(const Dag& dag, const Eigen::MatrixXd& b_hat,
                                      const CovarianceSummary& cov,
                                      const Eigen::VectorXd* alpha) {
    check_summary(cov);
    const int p = dag.p();
    if (cov.p() != p) throw std::invalid_argument("covariance size does not match graph");
    if (b_hat.rows() != p || b_hat.cols() != p)
        throw std::invalid_argument("coefficient matrix size does not match graph");
    for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k)
            if (b_hat(j, k) != 0.0 && !dag.has_edge(k, j))
                throw std::invalid_argument("coefficient outside the graph's support");
    check_alpha(alpha, p);
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p, p) - b_hat;
    const Eigen::VectorXd diag = (m * cov.S * m.transpose()).diagonal();
    double weighted = 0.0;
    for (int j = 0; j < p; ++j) weighted += diag[j] / (alpha ? (*alpha)[j] : 1.0);
    const double pooled = weighted / p;
    if (!(pooled > variance_floor(cov.S))) return std::nullopt;
    return pooled;
}

double equal_variance_nll(long n, int p, double pooled_sigma2) {
    return 0.5 * static_cast<double>(n) * p * (std::log(k2Pi * pooled_sigma2) + 1.0);
}

double per_node_nll(long n, const Eigen::VectorXd& node_variances) {
    double nll = 0.0;
    for (int j = 0; j < node_variances.size(); ++j)
        nll += 0.5 * static_cast<double>(n) * (std::log(k2Pi * node_variances[j]) + 1.0);
    return nll;
}

std::optional<Fit> equal_variance_bic(const Dag& dag, const CovarianceSummary& cov,
                                      double lambda, const Eigen::VectorXd* alpha) {
    check_summary(cov);
    check_lambda(lambda);
    const int p = dag.p();
    if (cov.p() != p) throw std::invalid_argument("covariance size does not match graph");
    check_alpha(alpha, p);
    Eigen::VectorXd v(p);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
    for (int j = 0; j < p; ++j) {
        const auto& pa = dag.parents(j);
        auto beta = fit_parents(cov.S, j, pa);
        if (!beta) return std::nullopt;
        double dot = 0.0;
        for (int a = 0; a < static_cast<int>(pa.size()); ++a) {
            b(j, pa[a]) = (*beta)[a];
            dot += (*beta)[a] * cov.S(pa[a], j);
        }
        v[j] = cov.S(j, j) - dot;
    }
    double weighted = 0.0;
    double log_alpha = 0.0;
    for (int j = 0; j < p; ++j) {
        weighted += v[j] / (alpha ? (*alpha)[j] : 1.0);
        if (alpha) log_alpha += std::log((*alpha)[j]);
    }
    const double pooled = weighted / p;
    if (!(pooled > variance_floor(cov.S))) return std::nullopt;
    const double nll =
        equal_variance_nll(cov.n, p, pooled) + 0.5 * static_cast<double>(cov.n) * log_alpha;
    Fit fit{dag, std::move(b), std::move(v), pooled, nll, dag.edge_count(), lambda, 0.0};
    fit.score = nll + lambda * fit.k;
    return fit;
}

std::optional<Fit> per_node_variance_bic(const Dag& dag, const CovarianceSummary& cov,
                                         double lambda) {
    check_summary(cov);
    check_lambda(lambda);
    const int p = dag.p();
    if (cov.p() != p) throw std::invalid_argument("covariance size does not match graph");
    const double floor = variance_floor(cov.S);
    Eigen::VectorXd v(p);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
    for (int j = 0; j < p; ++j) {
        const auto& pa = dag.parents(j);
        auto beta = fit_parents(cov.S, j, pa);
        if (!beta) return std::nullopt;
        double dot = 0.0;
        for (int a = 0; a < static_cast<int>(pa.size()); ++a) {
            b(j, pa[a]) = (*beta)[a];
            dot += (*beta)[a] * cov.S(pa[a], j);
        }
        v[j] = cov.S(j, j) - dot;
        if (!(v[j] > floor)) return std::nullopt;
    }
    const double nll = per_node_nll(cov.n, v);
    const double pooled = v.sum() / p;
    Fit fit{dag, std::move(b), std::move(v), pooled, nll, dag.edge_count(), lambda, 0.0};
    fit.score = nll + lambda * fit.k;
    return fit;
}

double population_score(const Dag& dag, const Eigen::MatrixXd& sigma, double lambda_pop) {
    auto fit = equal_variance_bic(dag, CovarianceSummary::population(sigma), lambda_pop);
    if (!fit)
        throw std::invalid_argument(
            "population covariance is singular on the required blocks; it must be positive "
            "definite");
    return fit->score;
}

double conditional_variance(const Eigen::MatrixXd& sigma, int target,
                            const std::vector<int>& given) {
    auto v = residual_variance(sigma, target, given);
    if (!v) throw std::invalid_argument("conditioning block is numerically singular");
    return *v;
}

nlohmann::ordered_json fit_to_json(const Fit& fit) {
    nlohmann::ordered_json root;
    root["p"] = fit.dag.p();
    auto edges = nlohmann::ordered_json::array();
    for (const Edge& e : fit.dag.edges())
        edges.push_back(nlohmann::ordered_json::array({e.parent, e.child}));
    root["edges"] = std::move(edges);
    auto coefs = nlohmann::ordered_json::array();
    for (int j = 0; j < fit.dag.p(); ++j)
        for (int k = 0; k < fit.dag.p(); ++k)
            if (fit.b_hat(j, k) != 0.0)
                coefs.push_back(nlohmann::ordered_json::array({j, k, fit.b_hat(j, k)}));
    root["b_hat"] = std::move(coefs);
    root["node_variances"] =
        std::vector<double>(fit.node_variances.begin(), fit.node_variances.end());
    root["sigma2_hat"] = fit.sigma2_hat;
    root["nll"] = fit.nll;
    root["k"] = fit.k;
    root["lambda"] = fit.lambda;
    root["score"] = fit.score;
    return root;
}

void write_fit_json(std::ostream& out, const Fit& fit) {
    out << fit_to_json(fit).dump(2) << '\n';
}

}  // namespace eevdag
