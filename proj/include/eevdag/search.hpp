#pragma once
// Greedy DAG search over single-edge moves with random restarts, the
// exhaustive small-p search used as an identifiability oracle, and the
// best-score selector.
//
// The greedy protocol, per restart: start from a random sparse DAG, then at
// each iteration sample legal moves without replacement, biased toward
// moves pointing into high-residual-variance nodes. At least k candidates
// are considered; if any of the first k improve the score, the best of them
// is accepted, otherwise sampling continues and the first improvement found
// is taken. A restart ends when the whole pool is exhausted with no
// improvement, which certifies a local optimum.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eevdag/graph.hpp"
#include "eevdag/score.hpp"

namespace eevdag {

enum class ScoreKind { equal_variance, per_node };

struct SearchConfig {
    // One restart per entry; empty means the default {p, 2p, 3p, 5p, 300}.
    std::vector<int> k_schedule;
    std::optional<double> lambda;          // default log(n)/2
    std::optional<double> init_edge_prob;  // default 1/(p-1); 0 at p = 1
    double epsilon = 0.1;                  // uniform share of the move sampler
    std::uint64_t seed = 0;
    long max_iterations = 100000;          // per-restart safety cap
};

struct RestartTrace {
    int k = 0;
    std::uint64_t init_seed = 0;
    long iterations = 0;
    long moves_accepted = 0;
    long evaluations = 0;
    // True when the final neighbor pool was exhausted without improvement;
    // false only if the iteration cap tripped first.
    bool certified_local_optimum = false;
    // Initial score followed by the score after each accepted move; strictly
    // decreasing.
    std::vector<double> accepted_scores;
    Fit final_fit;
};

struct SearchResult {
    Fit best;  // the minimal-score restart, earliest on ties
    int best_restart = 0;
    long total_evaluations = 0;
    std::vector<RestartTrace> restarts;
};

// Equal-variance score. Deterministic given (cov, config).
SearchResult gds_eev(const CovarianceSummary& cov, const SearchConfig& config);

// Same protocol on the per-node-variance score.
SearchResult greedy_per_node_baseline(const CovarianceSummary& cov, const SearchConfig& config);

// Node-sampling weights: residual variances of the fitted model (diagonal of
// (I-B)S(I-B)'), normalized and mixed with the uniform distribution,
// w_j = (1 - epsilon) v_j / sum(v) + epsilon / p.
std::vector<double> residual_bias(const Dag& dag, const Eigen::MatrixXd& b_hat,
                                  const CovarianceSummary& cov, double epsilon);

// Global minimizer of the chosen score over every labeled DAG on p
// vertices. Ties break toward fewer edges, then the lexicographically
// earlier edge set, making the result unique. `threads` <= 0 means the
// OpenMP default.
Fit exhaustive_search(const CovarianceSummary& cov, double lambda,
                      ScoreKind kind = ScoreKind::equal_variance,
                      int cap = kDagEnumerationCap, int threads = 0);

// Single-threaded reference implementation with the identical contract; the
// parallel kernel is tested against it.
Fit exhaustive_search_serial(const CovarianceSummary& cov, double lambda,
                             ScoreKind kind = ScoreKind::equal_variance,
                             int cap = kDagEnumerationCap);

// Label of the fit with the minimal score; earlier label wins ties. All
// fits must use the same lambda to be comparable.
std::string best_score_select(const std::vector<std::pair<std::string, Fit>>& fits);

// JSON serialization; verbose adds per-restart accepted-score traces.
void write_search_result_json(std::ostream& out, const SearchResult& result, bool verbose);

}  // namespace eevdag
