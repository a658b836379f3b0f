#include "eevdag/sem.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "eevdag/rng.hpp"
#include "eevdag/textio.hpp"

namespace eevdag {

std::vector<std::string> default_names(int p) {
    std::vector<std::string> out;
    out.reserve(p);
    for (int v = 0; v < p; ++v) out.push_back("X" + std::to_string(v));
    return out;
}

namespace {

Dag support_dag(const Eigen::MatrixXd& b) {
    const int p = static_cast<int>(b.rows());
    if (p < 1 || b.cols() != p)
        throw std::invalid_argument("coefficient matrix must be square and nonempty");
    if (!b.allFinite())
        throw std::invalid_argument("coefficient matrix has non-finite entries");
    std::vector<Edge> edges;
    for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k)
            if (b(j, k) != 0.0) edges.push_back({k, j});
    if (!is_acyclic(p, edges))
        throw std::invalid_argument("coefficient support has a directed cycle");
    return Dag(p, std::move(edges));
}

void validate_noise(double sigma2, const Eigen::VectorXd& alpha, int p) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw std::invalid_argument("sigma2 must be positive and finite");
    if (alpha.size() != p) throw std::invalid_argument("alpha length must equal p");
    for (int j = 0; j < p; ++j)
        if (!(alpha[j] > 0.0) || !std::isfinite(alpha[j]))
            throw std::invalid_argument("alpha entries must be positive and finite");
}

}  // namespace

LinearGaussianSem::LinearGaussianSem(Eigen::MatrixXd b, double sigma2, Eigen::VectorXd alpha)
    : b_(std::move(b)), sigma2_(sigma2), alpha_(std::move(alpha)), dag_(support_dag(b_)) {
    validate_noise(sigma2_, alpha_, dag_.p());
}

LinearGaussianSem::LinearGaussianSem(Eigen::MatrixXd b, double sigma2)
    : b_(std::move(b)),
      sigma2_(sigma2),
      alpha_(Eigen::VectorXd::Ones(b_.rows())),
      dag_(support_dag(b_)) {
    validate_noise(sigma2_, alpha_, dag_.p());
}

DataSet sample(const LinearGaussianSem& sem, long n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample size must be positive");
    const int p = sem.p();
    Rng rng(seed);
    Eigen::MatrixXd x(n, p);
    for (long i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
    for (int j = 0; j < p; ++j) x.col(j) *= std::sqrt(sem.sigma2() * sem.alpha()[j]);
    const Eigen::MatrixXd& b = sem.coefficients();
    for (int j : topological_order(sem.dag()))
        for (int k : sem.dag().parents(j)) x.col(j) += b(j, k) * x.col(k);
    return {std::move(x), default_names(p)};
}

Eigen::MatrixXd population_covariance(const LinearGaussianSem& sem) {
    const int p = sem.p();
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p, p) - sem.coefficients();
    const Eigen::MatrixXd minv = m.partialPivLu().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::VectorXd d = sem.sigma2() * sem.alpha();
    const Eigen::MatrixXd sigma = minv * d.asDiagonal() * minv.transpose();
    return 0.5 * (sigma + sigma.transpose());
}

LinearGaussianSem random_model(const RandomModelConfig& config) {
    if (config.p < 1) throw std::invalid_argument("p must be positive");
    if (!(config.p_edge > 0.0) || config.p_edge > 1.0)
        throw std::invalid_argument("p_edge must lie in (0, 1]");
    if (!(config.coef_low > 0.0) || !(config.coef_high >= config.coef_low) ||
        !std::isfinite(config.coef_high))
        throw std::invalid_argument("coefficient range must satisfy 0 < low <= high");
    if (!(config.variance_spread >= 0.0) || config.variance_spread >= 1.0)
        throw std::invalid_argument("variance_spread must lie in [0, 1)");
    const int p = config.p;
    Rng rng(config.seed);
    std::vector<int> order(p);
    for (int i = 0; i < p; ++i) order[i] = i;
    for (int i = p - 1; i >= 1; --i)
        std::swap(order[i], order[static_cast<int>(rng.below(i + 1))]);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
    for (int s = 0; s < p; ++s)
        for (int t = s + 1; t < p; ++t) {
            if (rng.uniform() >= config.p_edge) continue;
            const double sign = rng.coin() ? 1.0 : -1.0;
            const double magnitude = rng.uniform(config.coef_low, config.coef_high);
            b(order[t], order[s]) = sign * magnitude;
        }
    Eigen::VectorXd alpha = Eigen::VectorXd::Ones(p);
    if (config.variance_spread > 0.0)
        for (int j = 0; j < p; ++j)
            alpha[j] = rng.uniform(1.0 - config.variance_spread, 1.0 + config.variance_spread);
    return LinearGaussianSem(std::move(b), 1.0, std::move(alpha));
}

LinearGaussianSem nonfaithful_example() {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 3);
    b(1, 0) = -1.0;
    b(2, 0) = 1.0;
    b(2, 1) = 1.0;
    return LinearGaussianSem(std::move(b), 1.0);
}

DataSet rescale(const DataSet& data, const Eigen::VectorXd& factors) {
    if (factors.size() != data.p())
        throw std::invalid_argument("rescale factor length must equal p");
    for (int j = 0; j < data.p(); ++j)
        if (!(factors[j] > 0.0) || !std::isfinite(factors[j]))
            throw std::invalid_argument("rescale factors must be positive and finite");
    DataSet out = data;
    for (int j = 0; j < data.p(); ++j) out.values.col(j) *= factors[j];
    return out;
}

// --- CSV ---------------------------------------------------------------------

namespace {

std::vector<std::string> split_on_commas(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

void chomp_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void write_csv(std::ostream& out, const DataSet& data) {
    if (static_cast<int>(data.names.size()) != data.p())
        throw std::invalid_argument("name list length does not match column count");
    for (int j = 0; j < data.p(); ++j) {
        if (data.names[j].empty() || data.names[j].find(',') != std::string::npos)
            throw std::invalid_argument("column names must be nonempty and comma-free");
        out << (j ? "," : "") << data.names[j];
    }
    out << '\n';
    for (long i = 0; i < data.n(); ++i) {
        for (int j = 0; j < data.p(); ++j)
            out << (j ? "," : "") << format_double(data.values(i, j));
        out << '\n';
    }
}

DataSet read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("csv parse error at line 1: missing header");
    chomp_cr(line);
    const std::vector<std::string> names = split_on_commas(line);
    const int p = static_cast<int>(names.size());
    std::set<std::string> seen;
    for (int j = 0; j < p; ++j) {
        if (names[j].empty())
            throw std::invalid_argument("csv parse error at line 1, column " +
                                        std::to_string(j + 1) + ": empty column name");
        if (!seen.insert(names[j]).second)
            throw std::invalid_argument("csv parse error at line 1: duplicate column name '" +
                                        names[j] + "'");
    }
    std::vector<double> cells;
    long n = 0;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        chomp_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_on_commas(line);
        if (static_cast<int>(fields.size()) != p)
            throw std::invalid_argument("csv parse error at line " + std::to_string(lineno) +
                                        ": expected " + std::to_string(p) + " fields, got " +
                                        std::to_string(fields.size()));
        for (int j = 0; j < p; ++j) {
            const std::string where =
                "csv parse error at line " + std::to_string(lineno) + ", column " +
                std::to_string(j + 1);
            const double v = parse_double_token(fields[j], where);
            if (!std::isfinite(v)) throw std::invalid_argument(where + ": non-finite value");
            cells.push_back(v);
        }
        ++n;
    }
    if (n < 1) throw std::invalid_argument("csv parse error: no data rows");
    Eigen::MatrixXd values(n, p);
    for (long i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) values(i, j) = cells[static_cast<std::size_t>(i) * p + j];
    return {std::move(values), names};
}

// --- model JSON ----------------------------------------------------------------

void write_model_json(std::ostream& out, const LinearGaussianSem& sem) {
    nlohmann::ordered_json root;
    root["p"] = sem.p();
    auto edges = nlohmann::ordered_json::array();
    const Eigen::MatrixXd& b = sem.coefficients();
    for (int j = 0; j < sem.p(); ++j)
        for (int k = 0; k < sem.p(); ++k)
            if (b(j, k) != 0.0) edges.push_back(nlohmann::ordered_json::array({j, k, b(j, k)}));
    root["edges"] = std::move(edges);
    root["sigma2"] = sem.sigma2();
    root["alpha"] = std::vector<double>(sem.alpha().begin(), sem.alpha().end());
    out << root.dump(2) << '\n';
}

LinearGaussianSem read_model_json(std::istream& in) {
    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("model json parse error: ") + e.what());
    }
    if (!root.is_object()) throw std::invalid_argument("model json must be an object");
    const std::set<std::string> known{"p", "edges", "sigma2", "alpha"};
    std::string unknown;
    for (const auto& item : root.items())
        if (!known.count(item.key())) unknown += (unknown.empty() ? "" : ", ") + item.key();
    if (!unknown.empty())
        throw std::invalid_argument("model json has unknown keys: " + unknown);
    for (const std::string& key : known)
        if (!root.contains(key))
            throw std::invalid_argument("model json is missing key '" + key + "'");
    if (!root["p"].is_number_integer())
        throw std::invalid_argument("model json: 'p' must be an integer");
    const int p = root["p"].get<int>();
    if (p < 1) throw std::invalid_argument("model json: 'p' must be positive");
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
    if (!root["edges"].is_array())
        throw std::invalid_argument("model json: 'edges' must be an array");
    for (const auto& triple : root["edges"]) {
        if (!triple.is_array() || triple.size() != 3 || !triple[0].is_number_integer() ||
            !triple[1].is_number_integer() || !triple[2].is_number())
            throw std::invalid_argument(
                "model json: each edge must be [child, parent, coefficient]");
        const int j = triple[0].get<int>();
        const int k = triple[1].get<int>();
        if (j < 0 || j >= p || k < 0 || k >= p)
            throw std::invalid_argument("model json: edge endpoint out of range");
        const double coef = triple[2].get<double>();
        if (coef == 0.0) throw std::invalid_argument("model json: zero coefficient on an edge");
        if (b(j, k) != 0.0) throw std::invalid_argument("model json: duplicate edge");
        b(j, k) = coef;
    }
    if (!root["sigma2"].is_number())
        throw std::invalid_argument("model json: 'sigma2' must be a number");
    if (!root["alpha"].is_array() || static_cast<int>(root["alpha"].size()) != p)
        throw std::invalid_argument("model json: 'alpha' must be an array of length p");
    Eigen::VectorXd alpha(p);
    for (int j = 0; j < p; ++j) {
        if (!root["alpha"][j].is_number())
            throw std::invalid_argument("model json: 'alpha' entries must be numbers");
        alpha[j] = root["alpha"][j].get<double>();
    }
    return LinearGaussianSem(std::move(b), root["sigma2"].get<double>(), std::move(alpha));
}

}  // namespace eevdag
