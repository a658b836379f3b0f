#pragma once
// Seeded Monte Carlo studies: sparse and dense structure-recovery tables,
// the noise-variance perturbation sweep, the non-faithful demonstration,
// and the population-level recovery oracle.
//
// Every replicate's seed is derived from the master seed and the replicate
// coordinates (scenario, p, n, a, index), so the parallelism degree cannot
// change any reported number; only wall-clock fields differ.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eevdag/search.hpp"

namespace eevdag {

enum class Scenario { sparse, dense, perturbation, nonfaithful };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

// Edge-inclusion probability of the scenario's random models: sparse
// 3/(2p-2), dense 0.3, perturbation 2/(p-1); clamped into (0, 1].
double scenario_edge_probability(Scenario s, int p);

struct BenchmarkSpec {
    Scenario scenario = Scenario::sparse;
    std::vector<int> p_values;     // empty: scenario default
    std::vector<long> n_values;    // empty: scenario default
    int replicates = 100;
    std::vector<double> a_values;  // perturbation only; default 0.0..0.9 step 0.1
    std::uint64_t master_seed = 0;
    int threads = 0;               // 0: EEVDAG_THREADS env, else the OpenMP default
};

struct MethodCell {
    std::vector<int> shd_dag;    // per replicate, replicate order
    std::vector<int> shd_cpdag;
    double mean_shd_dag = 0;
    double sd_shd_dag = 0;       // sample standard deviation, divisor r - 1
    double mean_shd_cpdag = 0;
    double sd_shd_cpdag = 0;
};

struct BenchmarkCell {
    int p = 0;
    long n = 0;
    double a = 0;
    MethodCell gds;       // equal-variance greedy search, labeled gds_eev
    MethodCell baseline;  // per-node-variance greedy search, labeled per_node
    double best_score_equal_variance_fraction = 0;  // ties count for equal variance
    double recovery_rate = 0;  // exact true-DAG matches by the equal-variance method
    double wall_seconds = 0;   // recorded outside the deterministic body, never asserted
};

struct BenchmarkReport {
    BenchmarkSpec spec;  // normalized: all defaults filled in
    std::vector<BenchmarkCell> cells;
    int threads_used = 1;
};

BenchmarkReport run_benchmark(const BenchmarkSpec& spec);

// run_benchmark restricted to the perturbation scenario (p=10, n=500
// defaults), whose reports feed sweep_quantiles_csv.
BenchmarkReport perturbation_sweep(const BenchmarkSpec& spec);

struct OracleStudyConfig {
    std::vector<int> p_values;     // each within the enumeration cap
    int models = 50;
    double variance_spread = 0.0;  // 0 keeps the identifiable equal-variance regime
    std::optional<double> p_edge;  // default: the sparse formula
    double lambda_pop = 1e-6;
    std::uint64_t seed = 0;
    int threads = 0;
};

struct OracleStudyRow {
    int p = 0;
    int models = 0;
    int recovered = 0;
    double fraction = 0;
};

struct OracleStudyReport {
    OracleStudyConfig config;
    std::vector<OracleStudyRow> rows;
};

// For each random model: exhaustive search on the analytic population
// covariance, count exact true-DAG recoveries.
OracleStudyReport recovery_oracle_study(const OracleStudyConfig& config);

// Deterministic report body alone (what reproducibility tests compare).
std::string report_body_json(const BenchmarkReport& report);
// Body plus an environment/timing wrapper.
void write_report_json(std::ostream& out, const BenchmarkReport& report);
std::string report_text_table(const BenchmarkReport& report);

// Box-plot quantiles (min, q25, median, q75, max) of SHD to the true DAG,
// one row per (a, method, quantile): columns a,method,quantile,value.
std::string sweep_quantiles_csv(const BenchmarkReport& report);

void write_oracle_report_json(std::ostream& out, const OracleStudyReport& report);
std::string oracle_report_text(const OracleStudyReport& report);

// Requested value if positive, else the EEVDAG_THREADS variable, else the
// OpenMP default (1 without OpenMP).
int resolve_threads(int requested);

}  // namespace eevdag
