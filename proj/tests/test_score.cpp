#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "eevdag/score.hpp"
#include "eevdag/sem.hpp"
#include "support/oracles.hpp"

using namespace eevdag;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// Population second moments of the two-node chain with unit coefficient.
CovarianceSummary chain_cov(long n = 1) {
    Eigen::MatrixXd s(2, 2);
    s << 1, 1, 1, 2;
    return {n, s};
}

CovarianceSummary identity_cov(int p, long n) {
    return {n, Eigen::MatrixXd::Identity(p, p)};
}

}  // namespace

TEST_CASE("sample covariance of the frozen two-point set") {
    DataSet data;
    data.values.resize(2, 2);
    data.values << 0, 0, 2, 2;
    data.names = default_names(2);
    const CovarianceSummary cov = sample_covariance(data);
    CHECK(cov.n == 2);
    Eigen::MatrixXd expected(2, 2);
    expected << 1, 1, 1, 1;
    CHECK(cov.S == expected);

    data.values.resize(3, 2);
    data.values << 1, 5, 1, 6, 1, 7;
    CHECK(sample_covariance(data).S.row(0).isZero());
    CHECK(sample_covariance(data).S.col(0).isZero());

    data.values.resize(1, 2);
    data.values << 1, 2;
    CHECK_THROWS_AS(sample_covariance(data), std::invalid_argument);
}

TEST_CASE("covariance summaries validate their invariants") {
    CHECK(default_lambda(100) == 0.5 * std::log(100.0));
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
    bad(0, 0) = -1.0;
    CHECK_THROWS_AS(equal_variance_bic(Dag(2), {10, bad}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(equal_variance_bic(Dag(2), {0, Eigen::MatrixXd::Identity(2, 2)}, 1.0),
                    std::invalid_argument);
    Eigen::MatrixXd asym(2, 2);
    asym << 1, 0.5, 0.1, 1;
    CHECK_THROWS_AS(equal_variance_bic(Dag(2), {10, asym}, 1.0), std::invalid_argument);
}

TEST_CASE("least squares on the two-node frozen covariance") {
    const CovarianceSummary cov = chain_cov();
    const auto forward = fit_parents(cov.S, 1, {0});
    REQUIRE(forward.has_value());
    CHECK((*forward)(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(residual_variance(cov.S, 1, {0}).value() == doctest::Approx(1.0).epsilon(1e-14));

    const auto backward = fit_parents(cov.S, 0, {1});
    REQUIRE(backward.has_value());
    CHECK((*backward)(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(residual_variance(cov.S, 0, {1}).value() == doctest::Approx(0.5).epsilon(1e-14));

    CHECK(fit_parents(cov.S, 0, {}).value().size() == 0);
    CHECK(residual_variance(cov.S, 0, {}).value() == 1.0);
    CHECK_THROWS_AS(fit_parents(cov.S, 0, {0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_parents(cov.S, 2, {}), std::invalid_argument);

    // Duplicated variable: the parent Gram block is singular.
    Eigen::MatrixXd dup(3, 3);
    dup << 1, 1, 0.5, 1, 1, 0.5, 0.5, 0.5, 1;
    CHECK_FALSE(fit_parents(dup, 2, {0, 1}).has_value());
}

TEST_CASE("fitted coefficient matrices follow the graph support") {
    const CovarianceSummary cov = chain_cov(100);
    const auto empty = fit_coefficients(Dag(2), cov);
    REQUIRE(empty.has_value());
    CHECK(empty->isZero());

    const auto chain = fit_coefficients(Dag(2, {{0, 1}}), cov);
    REQUIRE(chain.has_value());
    CHECK((*chain)(1, 0) == doctest::Approx(1.0));
    CHECK((*chain)(0, 0) == 0.0);
    CHECK((*chain)(0, 1) == 0.0);
}

TEST_CASE("pooled variance on the frozen cases") {
    const auto at = [](const Dag& dag, const CovarianceSummary& cov,
                       const Eigen::VectorXd* alpha = nullptr) {
        const auto b = fit_coefficients(dag, cov);
        REQUIRE(b.has_value());
        const auto s2 = profiled_sigma2(dag, *b, cov, alpha);
        REQUIRE(s2.has_value());
        return *s2;
    };
    CHECK(at(Dag(2), identity_cov(2, 10)) == 1.0);
    CHECK(at(Dag(2, {{0, 1}}), chain_cov()) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(at(Dag(2, {{1, 0}}), chain_cov()) == doctest::Approx(1.25).epsilon(1e-14));

    Eigen::VectorXd alpha(2);
    alpha << 1.0, 4.0;
    Eigen::MatrixXd diag = Eigen::MatrixXd::Identity(2, 2);
    diag(1, 1) = 4.0;
    CHECK(at(Dag(2), {10, diag}, &alpha) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("equal-variance score on the frozen empty-graph case") {
    const double lambda = default_lambda(100);
    const auto fit = equal_variance_bic(Dag(2), identity_cov(2, 100), lambda);
    REQUIRE(fit.has_value());
    CHECK(fit->k == 0);
    CHECK(fit->sigma2_hat == 1.0);
    CHECK(fit->nll == doctest::Approx(100.0 * kLog2Pi + 100.0).epsilon(1e-14));
    CHECK(fit->score == fit->nll);
    CHECK(fit->lambda == lambda);
    CHECK(fit->node_variances == Eigen::VectorXd::Ones(2));
}

TEST_CASE("equal-variance scores separate the chain from its reversal") {
    const auto truth = equal_variance_bic(Dag(2, {{0, 1}}), chain_cov(), 0.0);
    const auto wrong = equal_variance_bic(Dag(2, {{1, 0}}), chain_cov(), 0.0);
    REQUIRE(truth.has_value());
    REQUIRE(wrong.has_value());
    // Per-sample gap (p/2) log(1.25/1) with p = 2.
    CHECK(wrong->nll - truth->nll == doctest::Approx(std::log(1.25)).epsilon(1e-12));
    CHECK(truth->b_hat(1, 0) == doctest::Approx(1.0));
    CHECK(wrong->b_hat(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("an uninformative edge changes only the penalty") {
    const double lambda = 0.7;
    const auto empty = equal_variance_bic(Dag(2), identity_cov(2, 50), lambda);
    const auto extra = equal_variance_bic(Dag(2, {{0, 1}}), identity_cov(2, 50), lambda);
    REQUIRE(empty.has_value());
    REQUIRE(extra.has_value());
    CHECK(extra->nll == doctest::Approx(empty->nll).epsilon(1e-14));
    CHECK(extra->score == doctest::Approx(empty->score + lambda).epsilon(1e-14));
}

TEST_CASE("per-node scores tie across markov-equivalent graphs") {
    const auto forward = per_node_variance_bic(Dag(2, {{0, 1}}), chain_cov(100), 1.0);
    const auto backward = per_node_variance_bic(Dag(2, {{1, 0}}), chain_cov(100), 1.0);
    REQUIRE(forward.has_value());
    REQUIRE(backward.has_value());
    CHECK(forward->nll == doctest::Approx(backward->nll).epsilon(1e-13));

    const auto equal_score = equal_variance_bic(Dag(2), identity_cov(2, 30), 1.0);
    const auto node_score = per_node_variance_bic(Dag(2), identity_cov(2, 30), 1.0);
    CHECK(equal_score->nll == node_score->nll);

    // Classwise ties on a random covariance at p = 3.
    Rng rng(404);
    const Eigen::MatrixXd s = oracle::random_pd_matrix(3, rng);
    const auto all = oracle::all_dag_edge_sets(3);
    for (const auto& group : oracle::equivalence_classes(3, all)) {
        const double head =
            per_node_variance_bic(Dag(3, all[group[0]]), {50, s}, 1.0)->nll;
        for (const std::size_t idx : group) {
            const double nll = per_node_variance_bic(Dag(3, all[idx]), {50, s}, 1.0)->nll;
            REQUIRE(nll == doctest::Approx(head).epsilon(1e-11));
        }
    }
}

TEST_CASE("per-node likelihood never exceeds the pooled one on the same graph") {
    Rng rng(777);
    for (int trial = 0; trial < 100; ++trial) {
        const int p = 2 + static_cast<int>(rng.below(4));
        const Eigen::MatrixXd s = oracle::random_pd_matrix(p, rng);
        const auto all = oracle::all_dag_edge_sets(p);
        const auto& edges = all[rng.below(all.size())];
        const CovarianceSummary cov{200, s};
        const auto pooled = equal_variance_bic(Dag(p, edges), cov, 1.0);
        const auto per_node = per_node_variance_bic(Dag(p, edges), cov, 1.0);
        REQUIRE(pooled.has_value());
        REQUIRE(per_node.has_value());
        REQUIRE(per_node->nll <= pooled->nll + 1e-9 * std::abs(pooled->nll));
    }
}

TEST_CASE("degenerate covariances yield no score instead of a fake one") {
    Eigen::MatrixXd dup(2, 2);
    dup << 1, 1, 1, 1;
    // One perfectly fitted node sinks the per-node likelihood, but the
    // pooled family only needs the mean residual variance to stay positive.
    const auto pooled = equal_variance_bic(Dag(2, {{0, 1}}), {10, dup}, 1.0);
    REQUIRE(pooled.has_value());
    CHECK(pooled->sigma2_hat == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_FALSE(per_node_variance_bic(Dag(2, {{0, 1}}), {10, dup}, 1.0).has_value());
    CHECK_FALSE(equal_variance_bic(Dag(2), {10, Eigen::MatrixXd::Zero(2, 2)}, 1.0).has_value());
    CHECK_FALSE(per_node_variance_bic(Dag(2), {10, Eigen::MatrixXd::Zero(2, 2)}, 1.0).has_value());
}

TEST_CASE("weighted equal-variance score matches its closed form") {
    Eigen::VectorXd alpha(2);
    alpha << 1.0, 4.0;
    Eigen::MatrixXd diag = Eigen::MatrixXd::Identity(2, 2);
    diag(1, 1) = 4.0;
    const long n = 10;
    const auto fit = equal_variance_bic(Dag(2), {n, diag}, 2.0, &alpha);
    REQUIRE(fit.has_value());
    CHECK(fit->sigma2_hat == doctest::Approx(1.0).epsilon(1e-14));
    const double expected_nll =
        0.5 * n * 2 * (std::log(2 * std::numbers::pi * 1.0) + 1.0) +
        0.5 * n * (std::log(1.0) + std::log(4.0));
    CHECK(fit->nll == doctest::Approx(expected_nll).epsilon(1e-13));

    Eigen::VectorXd bad(2);
    bad << 1.0, 0.0;
    CHECK_THROWS_AS(equal_variance_bic(Dag(2), {n, diag}, 2.0, &bad), std::invalid_argument);
}

TEST_CASE("population score recovers the noise scale and ranks graphs") {
    RandomModelConfig config;
    config.p = 4;
    config.p_edge = 0.5;
    for (int i = 0; i < 10; ++i) {
        config.seed = 50 + i;
        const LinearGaussianSem model = random_model(config);
        const auto cov = CovarianceSummary::population(population_covariance(model));
        const auto fit = equal_variance_bic(model.dag(), cov, 1e-6);
        REQUIRE(fit.has_value());
        REQUIRE(fit->sigma2_hat == doctest::Approx(1.0).epsilon(1e-9));
    }

    const Eigen::MatrixXd sigma = population_covariance(nonfaithful_example());
    const Dag truth = nonfaithful_example().dag();
    const double best = population_score(truth, sigma, 1e-6);
    int strictly_worse = 0;
    for_each_dag(3, [&](const Dag& dag) {
        if (dag == truth) return;
        if (population_score(dag, sigma, 1e-6) > best) ++strictly_worse;
    });
    CHECK(strictly_worse == 24);

    CHECK(population_score(Dag(2, {{1, 0}}), chain_cov().S, 0.0) -
              population_score(Dag(2, {{0, 1}}), chain_cov().S, 0.0) ==
          doctest::Approx(std::log(1.25)).epsilon(1e-12));
    CHECK_THROWS_AS(population_score(Dag(2), Eigen::MatrixXd::Zero(2, 2), 1e-6),
                    std::invalid_argument);
}

TEST_CASE("conditional variance cases and bound") {
    Eigen::MatrixXd s(2, 2);
    s << 1, 0.5, 0.5, 1;
    CHECK(conditional_variance(s, 0, {1}) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(conditional_variance(s, 0, {}) == 1.0);

    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(3, 3);
    d(1, 1) = 2.5;
    CHECK(conditional_variance(d, 1, {0, 2}) == doctest::Approx(2.5).epsilon(1e-14));

    Rng rng(31337);
    for (int trial = 0; trial < 200; ++trial) {
        const int p = 2 + static_cast<int>(rng.below(6));
        const Eigen::MatrixXd pd = oracle::random_pd_matrix(p, rng);
        const int target = static_cast<int>(rng.below(p));
        std::vector<int> given;
        for (int j = 0; j < p; ++j) {
            if (j != target && rng.coin()) given.push_back(j);
        }
        const double cv = conditional_variance(pd, target, given);
        REQUIRE(cv >= 0.0);
        REQUIRE(cv <= pd(target, target) + 1e-12 * pd(target, target));
    }
}

TEST_CASE("fit json carries the full record") {
    const auto fit = equal_variance_bic(Dag(2, {{0, 1}}), chain_cov(100), 1.0);
    REQUIRE(fit.has_value());
    std::ostringstream out;
    write_fit_json(out, *fit);
    const auto doc = nlohmann::json::parse(out.str());
    CHECK(doc["p"] == 2);
    CHECK(doc["k"] == 1);
    CHECK(doc["edges"].size() == 1);
    CHECK(doc["edges"][0][0] == 0);
    CHECK(doc["edges"][0][1] == 1);
    CHECK(doc["lambda"] == 1.0);
    CHECK(doc["sigma2_hat"].get<double>() == doctest::Approx(1.0));
    CHECK(doc["node_variances"].size() == 2);
    CHECK(doc["score"].get<double>() == doc["nll"].get<double>() + 1.0);
}
